//! Finite-difference operators. Centered second-order stencils on the
//! interior and on the torus; one-sided second-order stencils on box walls.

use crate::error::Result;
use crate::linalg::pairwise_sum_by;

use super::field::{DirectorField, ScalarField, TensorField2, VectorField2};
use super::grid::GridSpec;

#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
}

/// Index of the node `off` steps along `axis` from `(i, j)`, wrapping on the torus.
#[inline]
fn shift(g: &GridSpec, i: usize, j: usize, axis: Axis, off: isize) -> usize {
    match axis {
        Axis::X => {
            let m = g.mx() as isize;
            let ii = (i as isize + off).rem_euclid(m) as usize;
            g.idx(ii, j)
        }
        Axis::Y => {
            let m = g.my() as isize;
            let jj = (j as isize + off).rem_euclid(m) as usize;
            g.idx(i, jj)
        }
    }
}

#[inline]
fn axis_pos(g: &GridSpec, i: usize, j: usize, axis: Axis) -> (usize, usize, f64) {
    match axis {
        Axis::X => (i, g.nx, g.hx()),
        Axis::Y => (j, g.ny, g.hy()),
    }
}

fn first_derivative(g: &GridSpec, f: &[f64], axis: Axis) -> Vec<f64> {
    let mut out = vec![0.0; g.node_count()];
    let periodic = g.is_periodic();
    for j in 0..g.my() {
        for i in 0..g.mx() {
            let (p, last, h) = axis_pos(g, i, j, axis);
            let at = |o: isize| f[shift(g, i, j, axis, o)];
            out[g.idx(i, j)] = if periodic || (p > 0 && p < last) {
                (at(1) - at(-1)) / (2.0 * h)
            } else if p == 0 {
                (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
            } else {
                (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h)
            };
        }
    }
    out
}

fn second_derivative(g: &GridSpec, f: &[f64], axis: Axis) -> Vec<f64> {
    let mut out = vec![0.0; g.node_count()];
    let periodic = g.is_periodic();
    for j in 0..g.my() {
        for i in 0..g.mx() {
            let (p, last, h) = axis_pos(g, i, j, axis);
            let at = |o: isize| f[shift(g, i, j, axis, o)];
            out[g.idx(i, j)] = if periodic || (p > 0 && p < last) {
                (at(1) - 2.0 * at(0) + at(-1)) / (h * h)
            } else if p == 0 {
                (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / (h * h)
            } else {
                (2.0 * at(0) - 5.0 * at(-1) + 4.0 * at(-2) - at(-3)) / (h * h)
            };
        }
    }
    out
}

/// `d/dx` on raw node values.
pub fn dx(g: &GridSpec, f: &[f64]) -> Vec<f64> {
    first_derivative(g, f, Axis::X)
}

/// `d/dy` on raw node values.
pub fn dy(g: &GridSpec, f: &[f64]) -> Vec<f64> {
    first_derivative(g, f, Axis::Y)
}

pub fn dxx(g: &GridSpec, f: &[f64]) -> Vec<f64> {
    second_derivative(g, f, Axis::X)
}

pub fn dyy(g: &GridSpec, f: &[f64]) -> Vec<f64> {
    second_derivative(g, f, Axis::Y)
}

/// Mixed derivative as the composition of centered first derivatives.
pub fn dxy(g: &GridSpec, f: &[f64]) -> Vec<f64> {
    dy(g, &dx(g, f))
}

/// Five-point Laplacian on raw node values.
pub fn lap(g: &GridSpec, f: &[f64]) -> Vec<f64> {
    let mut a = dxx(g, f);
    for (ai, bi) in a.iter_mut().zip(dyy(g, f)) {
        *ai += bi;
    }
    a
}

/// Nodal squared-gradient density built from forward and backward
/// differences, `e = 1/2 sum_axes [(D+ f)^2 + (D- f)^2]`, averaging only the
/// available sides at box walls. Its quadrature equals the face-based
/// Dirichlet form, so on the torus `sum w e = -<lap f, f>` exactly.
pub fn grad_sq_density(g: &GridSpec, f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.node_count()];
    let periodic = g.is_periodic();
    for j in 0..g.my() {
        for i in 0..g.mx() {
            let k = g.idx(i, j);
            let mut e = 0.0;
            for axis in [Axis::X, Axis::Y] {
                let (p, last, h) = axis_pos(g, i, j, axis);
                let fwd = (f[shift(g, i, j, axis, 1)] - f[k]) / h;
                let bwd = (f[k] - f[shift(g, i, j, axis, -1)]) / h;
                e += if periodic || (p > 0 && p < last) {
                    0.5 * (fwd * fwd + bwd * bwd)
                } else if p == 0 {
                    fwd * fwd
                } else {
                    bwd * bwd
                };
            }
            out[k] = e;
        }
    }
    out
}

pub fn gradient(f: &ScalarField) -> VectorField2 {
    let g = f.grid();
    VectorField2::new(*g, dx(g, f.values()), dy(g, f.values())).expect("congruent")
}

pub fn divergence(v: &VectorField2) -> ScalarField {
    let g = v.grid();
    let mut a = dx(g, v.u());
    for (ai, bi) in a.iter_mut().zip(dy(g, v.w())) {
        *ai += bi;
    }
    ScalarField::new(*g, a).expect("congruent")
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    ScalarField::new(*f.grid(), lap(f.grid(), f.values())).expect("congruent")
}

pub fn vector_laplacian(v: &VectorField2) -> VectorField2 {
    let g = v.grid();
    VectorField2::new(*g, lap(g, v.u()), lap(g, v.w())).expect("congruent")
}

/// `(v . grad) f` with centered gradients.
pub fn advective_derivative(v: &VectorField2, f: &[f64]) -> Result<Vec<f64>> {
    let g = v.grid();
    if f.len() != g.node_count() {
        return Err(crate::error::Error::GridMismatch(format!(
            "advected field has {} values for {} nodes",
            f.len(),
            g.node_count()
        )));
    }
    let fx = dx(g, f);
    let fy = dy(g, f);
    Ok((0..g.node_count())
        .map(|k| v.u()[k] * fx[k] + v.w()[k] * fy[k])
        .collect())
}

/// Jacobian `J[a][b] = d_b d_a` of the director, by centered differences.
pub fn director_jacobian(d: &DirectorField) -> [[Vec<f64>; 2]; 2] {
    let g = d.grid();
    [
        [dx(g, d.d1()), dy(g, d.d1())],
        [dx(g, d.d2()), dy(g, d.d2())],
    ]
}

/// Ericksen stress `grad d (.) grad d - 1/2 |grad d|^2 I`, where
/// `(grad d (.) grad d)_ab = sum_k d_a d_k d_b d_k`.
pub fn ericksen_stress(d: &DirectorField) -> TensorField2 {
    let g = *d.grid();
    let jac = director_jacobian(d);
    let n = g.node_count();
    let (mut xx, mut xy, mut yy) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for k in 0..n {
        let sxx = jac[0][0][k] * jac[0][0][k] + jac[1][0][k] * jac[1][0][k];
        let syy = jac[0][1][k] * jac[0][1][k] + jac[1][1][k] * jac[1][1][k];
        let sxy = jac[0][0][k] * jac[0][1][k] + jac[1][0][k] * jac[1][1][k];
        let half = 0.5 * (sxx - syy);
        xx[k] = half;
        yy[k] = -half;
        xy[k] = sxy;
    }
    let yx = xy.clone();
    TensorField2::new(g, xx, xy, yx, yy).expect("congruent")
}

/// Row-wise divergence `(div T)_a = sum_b d_b T_ab`.
pub fn tensor_divergence(t: &TensorField2) -> VectorField2 {
    let g = t.grid();
    let mut u = dx(g, &t.xx);
    for (a, b) in u.iter_mut().zip(dy(g, &t.xy)) {
        *a += b;
    }
    let mut w = dx(g, &t.yx);
    for (a, b) in w.iter_mut().zip(dy(g, &t.yy)) {
        *a += b;
    }
    VectorField2::new(*g, u, w).expect("congruent")
}

/// Quadrature of raw node values.
pub fn integrate_values(g: &GridSpec, f: &[f64]) -> f64 {
    let mx = g.mx();
    pairwise_sum_by(g.node_count(), |k| g.weight(k % mx, k / mx) * f[k])
}

pub fn integrate(f: &ScalarField) -> f64 {
    integrate_values(f.grid(), f.values())
}

/// Discrete L2 inner product with the domain quadrature.
pub fn inner(f: &ScalarField, h: &ScalarField) -> Result<f64> {
    f.grid().check_same(h.grid(), "inner product")?;
    let g = f.grid();
    let mx = g.mx();
    let (a, b) = (f.values(), h.values());
    Ok(pairwise_sum_by(g.node_count(), |k| {
        g.weight(k % mx, k / mx) * a[k] * b[k]
    }))
}

pub fn inner_vec(a: &VectorField2, b: &VectorField2) -> Result<f64> {
    a.grid().check_same(b.grid(), "vector inner product")?;
    let g = a.grid();
    let mx = g.mx();
    Ok(pairwise_sum_by(g.node_count(), |k| {
        g.weight(k % mx, k / mx) * (a.u()[k] * b.u()[k] + a.w()[k] * b.w()[k])
    }))
}
