//! Director flow `d_t + v.grad d = theta (lap d + |grad d|^2 d)`, advanced by
//! backward Euler with the nonlinearity and the transport term frozen at the
//! previous Picard iterate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_core::ops::{dx, dy, grad_sq_density, integrate_values};
use crate::field_core::{DirectorField, GridSpec, VectorField2};
use crate::linalg::{conjugate_gradient, KrylovOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardConfig {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Relative H1 change that ends the iteration.
    #[serde(default = "default_contraction_tol")]
    pub contraction_tol: f64,
    /// Project every node back to unit length after an accepted step.
    #[serde(default = "default_true")]
    pub renormalize: bool,
    pub theta: f64,
    /// Store `w = d - e2` instead of `d`; the nonlinearity becomes
    /// `|grad w|^2 (w + e2)`.
    #[serde(default)]
    pub shifted: bool,
}

fn default_max_iters() -> usize {
    50
}
fn default_contraction_tol() -> f64 {
    1e-9
}
fn default_true() -> bool {
    true
}

impl PicardConfig {
    pub fn new(theta: f64) -> Self {
        PicardConfig {
            max_iters: default_max_iters(),
            contraction_tol: default_contraction_tol(),
            renormalize: true,
            theta,
            shifted: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::param("max_iters", ">= 1", self.max_iters));
        }
        if !(self.contraction_tol > 0.0) {
            return Err(Error::param("contraction_tol", "> 0", self.contraction_tol));
        }
        if !(self.theta > 0.0) {
            return Err(Error::param("theta", "> 0", self.theta));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DirectorStep {
    pub d: DirectorField,
    pub iters: usize,
    /// Relative H1 change of each Picard iterate.
    pub changes: Vec<f64>,
}

/// Nodes that the update solves for: all torus nodes, interior box nodes.
fn unknown_mask(g: &GridSpec) -> Vec<bool> {
    (0..g.node_count())
        .map(|k| {
            let (i, j) = g.ij(k);
            !g.is_boundary(i, j)
        })
        .collect()
}

/// Solves `(I - c lap) x = b` on the unknown nodes, with the other nodes of
/// `x` held at their current values.
fn implicit_heat_solve(g: &GridSpec, c: f64, mask: &[bool], b: &[f64], x: &mut [f64]) -> Result<()> {
    let n = g.node_count();
    let (mx, my) = (g.mx(), g.my());
    let (ax, ay) = (c / (g.hx() * g.hx()), c / (g.hy() * g.hy()));
    let periodic = g.is_periodic();
    // Neighbor lookup without wrap checks on the box: unknown nodes are interior.
    let nb = move |k: usize| -> [usize; 4] {
        let (i, j) = (k % mx, k / mx);
        if periodic {
            [
                j * mx + (i + 1) % mx,
                j * mx + (i + mx - 1) % mx,
                ((j + 1) % my) * mx + i,
                ((j + my - 1) % my) * mx + i,
            ]
        } else {
            [k + 1, k - 1, k + mx, k - mx]
        }
    };
    // Move frozen neighbor contributions to the right side.
    let mut rhs = vec![0.0; n];
    for k in 0..n {
        if !mask[k] {
            continue;
        }
        let [e, w, no, so] = nb(k);
        let mut s = b[k];
        for (m, a) in [(e, ax), (w, ax), (no, ay), (so, ay)] {
            if !mask[m] {
                s += a * x[m];
            }
        }
        rhs[k] = s;
    }
    let diag = 1.0 + 2.0 * ax + 2.0 * ay;
    let apply = |p: &[f64], y: &mut [f64]| {
        for k in 0..n {
            if !mask[k] {
                y[k] = 0.0;
                continue;
            }
            let [e, w, no, so] = nb(k);
            let mut s = diag * p[k];
            for (m, a) in [(e, ax), (w, ax), (no, ay), (so, ay)] {
                if mask[m] {
                    s -= a * p[m];
                }
            }
            y[k] = s;
        }
    };
    let mut sol: Vec<f64> = (0..n).map(|k| if mask[k] { x[k] } else { 0.0 }).collect();
    conjugate_gradient(
        apply,
        &rhs,
        &mut sol,
        KrylovOptions {
            rel_tol: 1e-14,
            abs_tol: 1e-300,
            max_iters: 10 * n,
        },
    )?;
    for k in 0..n {
        if mask[k] {
            x[k] = sol[k];
        }
    }
    Ok(())
}

fn h1_sq(g: &GridSpec, a: &[f64], b: &[f64]) -> f64 {
    let l2: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * x + y * y).collect();
    let mut e = grad_sq_density(g, a);
    for (p, q) in e.iter_mut().zip(grad_sq_density(g, b)) {
        *p += q;
    }
    integrate_values(g, &l2) + integrate_values(g, &e)
}

/// One Picard iterate: solves the frozen-source heat step from `prev`.
fn picard_iterate(
    old: &DirectorField,
    prev: &DirectorField,
    v: &VectorField2,
    cfg: &PicardConfig,
    dt: f64,
    mask: &[bool],
) -> Result<DirectorField> {
    let g = old.grid();
    let n = g.node_count();
    let e = {
        let mut e = grad_sq_density(g, prev.d1());
        for (a, b) in e.iter_mut().zip(grad_sq_density(g, prev.d2())) {
            *a += b;
        }
        e
    };
    let shift = if cfg.shifted { 1.0 } else { 0.0 };
    let vel = [v.u(), v.w()];
    let mut comps: [Vec<f64>; 2] = [prev.d1().to_vec(), prev.d2().to_vec()];
    for (c, (old_c, prev_c)) in [(old.d1(), prev.d1()), (old.d2(), prev.d2())]
        .into_iter()
        .enumerate()
    {
        let px = dx(g, prev_c);
        let py = dy(g, prev_c);
        let s = if c == 1 { shift } else { 0.0 };
        let b: Vec<f64> = (0..n)
            .map(|k| {
                old_c[k]
                    + dt * (cfg.theta * e[k] * (prev_c[k] + s)
                        - (vel[0][k] * px[k] + vel[1][k] * py[k]))
            })
            .collect();
        // Frozen wall values come from the previous step.
        for k in 0..n {
            if !mask[k] {
                comps[c][k] = old_c[k];
            }
        }
        implicit_heat_solve(g, dt * cfg.theta, mask, &b, &mut comps[c])?;
    }
    let [d1, d2] = comps;
    DirectorField::new(*g, d1, d2)
}

fn renormalize_stored(d: &mut DirectorField, shifted: bool) {
    if !shifted {
        d.renormalize();
        return;
    }
    let (a, b) = d.components_mut();
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let d2 = *y + 1.0;
        let r = x.hypot(d2);
        if r > 0.0 {
            *x /= r;
            *y = d2 / r - 1.0;
        }
    }
}

/// Advances the director by one step of length `dt` with transport velocity `v`.
pub fn director_step(d: &DirectorField, v: &VectorField2, cfg: &PicardConfig, dt: f64) -> Result<DirectorStep> {
    cfg.validate()?;
    if !(dt > 0.0) {
        return Err(Error::param("dt", "> 0", dt));
    }
    let g = d.grid();
    g.check_same(v.grid(), "director step")?;
    let mask = unknown_mask(g);
    let mut prev = d.clone();
    let mut changes = Vec::new();
    for it in 1..=cfg.max_iters {
        let next = picard_iterate(d, &prev, v, cfg, dt, &mask)?;
        let diff1: Vec<f64> = next.d1().iter().zip(prev.d1()).map(|(a, b)| a - b).collect();
        let diff2: Vec<f64> = next.d2().iter().zip(prev.d2()).map(|(a, b)| a - b).collect();
        let num = h1_sq(g, &diff1, &diff2).sqrt();
        let den = h1_sq(g, next.d1(), next.d2()).sqrt().max(f64::MIN_POSITIVE);
        let change = num / den;
        changes.push(change);
        if !next.is_finite() || !change.is_finite() {
            return Err(Error::StepFailure {
                stage: "director",
                step: 0,
                reason: format!("non-finite Picard iterate {it}"),
            });
        }
        prev = next;
        if change <= cfg.contraction_tol {
            if cfg.renormalize {
                renormalize_stored(&mut prev, cfg.shifted);
            }
            return Ok(DirectorStep {
                d: prev,
                iters: it,
                changes,
            });
        }
    }
    Err(Error::StepFailure {
        stage: "director",
        step: 0,
        reason: format!(
            "Picard iteration did not contract to {:.1e} in {} iterations (last change {:.3e})",
            cfg.contraction_tol,
            cfg.max_iters,
            changes.last().copied().unwrap_or(f64::NAN)
        ),
    })
}

/// Ratios of successive Picard updates in H1. Never fails on divergence:
/// the sequence simply shows ratios above one.
pub fn picard_contraction_probe(d: &DirectorField, v: &VectorField2, cfg: &PicardConfig, dt: f64) -> Result<Vec<f64>> {
    cfg.validate()?;
    let g = d.grid();
    g.check_same(v.grid(), "contraction probe")?;
    let mask = unknown_mask(g);
    let mut prev = d.clone();
    let mut last: Option<f64> = None;
    let mut ratios = Vec::new();
    for _ in 0..cfg.max_iters {
        let next = match picard_iterate(d, &prev, v, cfg, dt, &mask) {
            Ok(n) if n.is_finite() => n,
            _ => break,
        };
        let diff1: Vec<f64> = next.d1().iter().zip(prev.d1()).map(|(a, b)| a - b).collect();
        let diff2: Vec<f64> = next.d2().iter().zip(prev.d2()).map(|(a, b)| a - b).collect();
        let upd = h1_sq(g, &diff1, &diff2).sqrt();
        if let Some(l) = last {
            if l > 0.0 {
                ratios.push(upd / l);
            }
        }
        prev = next;
        // Below roundoff the ratios are noise.
        if upd < 1e-13 || upd > 1e8 {
            break;
        }
        last = Some(upd);
    }
    Ok(ratios)
}

/// Largest `| |d|^2 - 1 |` over a path.
pub fn unit_constraint_residual(path: &[DirectorField]) -> f64 {
    path.iter().map(|d| d.unit_residual()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleReport {
    pub min_d2: f64,
    pub step: usize,
    pub node: usize,
}

/// Checks `min d2 >= d02_min - angle_tol` at every recorded step.
pub fn angle_minimum_check(path: &[DirectorField], d02_min: f64, angle_tol: f64) -> Result<AngleReport> {
    let mut rep = AngleReport {
        min_d2: f64::INFINITY,
        step: 0,
        node: 0,
    };
    for (step, d) in path.iter().enumerate() {
        for (node, &v) in d.d2().iter().enumerate() {
            if v < rep.min_d2 {
                rep = AngleReport { min_d2: v, step, node };
            }
            if v < d02_min - angle_tol {
                let (i, j) = d.grid().ij(node);
                return Err(Error::Diagnostic(format!(
                    "d2 = {v:.12} below {d02_min:.12} at step {step}, node {node} (i={i}, j={j})"
                )));
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn torus(n: usize) -> GridSpec {
        GridSpec::torus(2.0 * PI, 2.0 * PI, n, n).unwrap()
    }

    fn cfg(renormalize: bool) -> PicardConfig {
        PicardConfig {
            renormalize,
            ..PicardConfig::new(1.0)
        }
    }

    #[test]
    fn vertical_is_fixed_exactly() {
        let g = torus(16);
        let d = DirectorField::vertical(g);
        let st = director_step(&d, &VectorField2::zeros(g), &cfg(false), 0.01).unwrap();
        assert_eq!(st.d, d);
    }

    #[test]
    fn harmonic_map_is_steady() {
        let g = torus(32);
        let d = DirectorField::from_fn(g, |x, _| [(2.0 * x).cos(), (2.0 * x).sin()]);
        let st = director_step(&d, &VectorField2::zeros(g), &cfg(false), 0.01).unwrap();
        let err = st
            .d
            .d1()
            .iter()
            .zip(d.d1())
            .chain(st.d.d2().iter().zip(d.d2()))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-11, "{err}");
    }

    #[test]
    fn renormalized_step_is_unit() {
        let g = torus(32);
        let d = DirectorField::from_angle(g, |x, y| 0.5 * x.sin() * y.sin());
        let v = VectorField2::from_fn(g, |x, y| [y.cos(), x.cos()]);
        let st = director_step(&d, &v, &cfg(true), 0.005).unwrap();
        assert!(st.d.unit_residual() < 1e-14);
        assert!(st.iters > 1);
    }

    #[test]
    fn shifted_mode_matches_standard() {
        let g = torus(32);
        let d = DirectorField::from_angle(g, |x, y| 0.4 * x.sin() * (2.0 * y).cos());
        let v = VectorField2::from_fn(g, |x, y| [0.3 * y.sin(), -0.2 * x.cos()]);
        let a = director_step(&d, &v, &cfg(true), 0.01).unwrap().d;
        let w = DirectorField::new(g, d.d1().to_vec(), d.d2().iter().map(|x| x - 1.0).collect()).unwrap();
        let c = PicardConfig { shifted: true, ..cfg(true) };
        let b = director_step(&w, &v, &c, 0.01).unwrap().d;
        for k in 0..g.node_count() {
            assert!((a.d1()[k] - b.d1()[k]).abs() < 1e-10);
            assert!((a.d2()[k] - (b.d2()[k] + 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn first_iterate_is_linear_heat_step() {
        let g = torus(16);
        let d = DirectorField::from_angle(g, |x, _| 0.3 * x.sin());
        let v = VectorField2::zeros(g);
        let c = PicardConfig { max_iters: 1, contraction_tol: 1e300, renormalize: false, ..cfg(false) };
        let one = director_step(&d, &v, &c, 0.01).unwrap();
        assert_eq!(one.iters, 1);
        // Residual of (I - dt lap) x = d + dt e d on each node.
        let e = crate::energy::director_grad_sq(&d);
        let l = crate::field_core::ops::lap(&g, one.d.d1());
        for k in 0..g.node_count() {
            let lhs = one.d.d1()[k] - 0.01 * l[k];
            let rhs = d.d1()[k] + 0.01 * e[k] * d.d1()[k];
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn box_walls_stay_frozen() {
        let g = GridSpec::dirichlet_box(PI, PI, 16, 16).unwrap();
        let d = DirectorField::from_angle(g, |x, y| 0.3 * (x + 2.0 * y).sin());
        let st = director_step(&d, &VectorField2::zeros(g), &cfg(true), 0.01).unwrap();
        for k in 0..g.node_count() {
            let (i, j) = g.ij(k);
            if g.is_boundary(i, j) {
                assert_eq!(st.d.d1()[k], d.d1()[k]);
                assert_eq!(st.d.d2()[k], d.d2()[k]);
            }
        }
    }

    #[test]
    fn non_convergence_is_step_failure() {
        let g = torus(16);
        let d = DirectorField::from_angle(g, |x, y| 1.2 * x.sin() * y.cos());
        let c = PicardConfig { max_iters: 2, contraction_tol: 1e-15, ..cfg(false) };
        assert!(matches!(
            director_step(&d, &VectorField2::zeros(g), &c, 0.05),
            Err(Error::StepFailure { .. })
        ));
    }

    #[test]
    fn probe_contracts_for_small_steps() {
        let g = torus(32);
        let d = DirectorField::from_angle(g, |x, y| 0.5 * x.sin() * y.sin());
        let v = VectorField2::from_fn(g, |x, y| [y.cos(), x.cos()]);
        let r = picard_contraction_probe(&d, &v, &cfg(false), 1e-3).unwrap();
        assert!(!r.is_empty());
        assert!(r.iter().all(|&x| x < 1.0));
    }

    #[test]
    fn angle_check_names_node() {
        let g = torus(8);
        let mut d = DirectorField::vertical(g);
        let ok = angle_minimum_check(&[d.clone()], 0.5, 1e-8).unwrap();
        assert_eq!(ok.min_d2, 1.0);
        d.components_mut().1[13] = 0.2;
        let err = angle_minimum_check(&[DirectorField::vertical(g), d], 0.5, 1e-8).unwrap_err();
        assert!(err.to_string().contains("node 13"));
        assert!(err.to_string().contains("step 1"));
    }
}
