use serde::{Deserialize, Serialize};

use super::field::{ScalarField, VectorField2};
use super::grid::GridSpec;
use super::ops::{dx, dy, grad_sq_density, integrate_values};

/// Discrete norms of a field.
///
/// `h1_semi` uses the face-based Dirichlet form; `w1inf` is the max of `|f|`
/// plus the max of the centered gradient magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2: f64,
    pub l4: f64,
    pub h1_semi: f64,
    pub linf: f64,
    pub w1inf: f64,
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn l2_sq_values(g: &GridSpec, f: &[f64]) -> f64 {
    let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
    integrate_values(g, &sq)
}

pub fn l4_pow4_values(g: &GridSpec, f: &[f64]) -> f64 {
    let q: Vec<f64> = f.iter().map(|v| (v * v) * (v * v)).collect();
    integrate_values(g, &q)
}

/// `int |grad f|^2` via the face-based form.
pub fn h1_semi_sq_values(g: &GridSpec, f: &[f64]) -> f64 {
    integrate_values(g, &grad_sq_density(g, f))
}

pub fn norms(f: &ScalarField) -> Norms {
    let g = f.grid();
    let v = f.values();
    let gx = dx(g, v);
    let gy = dy(g, v);
    let grad_max = gx
        .iter()
        .zip(&gy)
        .map(|(a, b)| a.hypot(*b))
        .fold(0.0, f64::max);
    let linf = max_abs(v);
    Norms {
        l2: l2_sq_values(g, v).sqrt(),
        l4: l4_pow4_values(g, v).powf(0.25),
        h1_semi: h1_semi_sq_values(g, v).sqrt(),
        linf,
        w1inf: linf + grad_max,
    }
}

/// Norms of a vector field taken with the Euclidean pointwise magnitude.
pub fn vector_norms(v: &VectorField2) -> Norms {
    let g = v.grid();
    let mag2: Vec<f64> = v
        .u()
        .iter()
        .zip(v.w())
        .map(|(a, b)| a * a + b * b)
        .collect();
    let l2 = integrate_values(g, &mag2).sqrt();
    let q: Vec<f64> = mag2.iter().map(|m| m * m).collect();
    let l4 = integrate_values(g, &q).powf(0.25);
    let h1 = (h1_semi_sq_values(g, v.u()) + h1_semi_sq_values(g, v.w())).sqrt();
    let linf = mag2.iter().fold(0.0f64, |m, x| m.max(*x)).sqrt();
    let ux = dx(g, v.u());
    let uy = dy(g, v.u());
    let wx = dx(g, v.w());
    let wy = dy(g, v.w());
    let grad_max = (0..g.node_count())
        .map(|k| (ux[k] * ux[k] + uy[k] * uy[k] + wx[k] * wx[k] + wy[k] * wy[k]).sqrt())
        .fold(0.0, f64::max);
    Norms {
        l2,
        l4,
        h1_semi: h1,
        linf,
        w1inf: linf + grad_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_on_torus() {
        let g = GridSpec::torus(2.0 * PI, 2.0 * PI, 16, 16).unwrap();
        let n = norms(&ScalarField::constant(g, 1.0));
        assert!((n.l2 - 2.0 * PI).abs() < 1e-12);
        assert_eq!(n.h1_semi, 0.0);
        assert_eq!(n.w1inf, 1.0);
    }

    #[test]
    fn zero_field() {
        let g = GridSpec::dirichlet_box(1.0, 1.0, 8, 8).unwrap();
        let n = norms(&ScalarField::zeros(g));
        assert_eq!(n, Norms { l2: 0.0, l4: 0.0, h1_semi: 0.0, linf: 0.0, w1inf: 0.0 });
    }

    #[test]
    fn sine_product_on_box() {
        let g = GridSpec::dirichlet_box(PI, PI, 32, 32).unwrap();
        let n = norms(&ScalarField::from_fn(g, |x, y| x.sin() * y.sin()));
        assert!((n.l2 * n.l2 - PI * PI / 4.0).abs() < 1e-12);
        assert!((n.l4.powi(4) - 9.0 * PI * PI / 64.0).abs() < 1e-12);
    }
}
