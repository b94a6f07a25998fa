//! Continuity equation with artificial viscosity and a no-flux wall condition,
//! `rho_t + div(rho v) = eps lap rho`, discretized by node-centered finite
//! volumes (half control volumes on box walls).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_core::ops::integrate_values;
use crate::field_core::{vector_norms, Dir, GridSpec, ScalarField, VectorField2};
use crate::linalg::{bicgstab, conjugate_gradient, KrylovOptions};

/// Time discretization of the density update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityScheme {
    /// Fully implicit: face flux is the mean of nodal `rho v` where the cell
    /// Peclet number `|v| h / (2 eps)` is at most one, upwind elsewhere.
    #[default]
    ImplicitHybrid,
    /// Explicit first-order upwind advection followed by an implicit
    /// diffusion solve.
    ImplicitDiffusionUpwindAdvection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityStepConfig {
    pub eps: f64,
    pub dt: f64,
    #[serde(default)]
    pub scheme: DensityScheme,
    /// Relative residual tolerance of the linear solve.
    #[serde(default = "default_linear_tol")]
    pub linear_tol: f64,
}

fn default_linear_tol() -> f64 {
    1e-12
}

impl DensityStepConfig {
    pub fn new(eps: f64, dt: f64) -> Self {
        DensityStepConfig {
            eps,
            dt,
            scheme: DensityScheme::default(),
            linear_tol: default_linear_tol(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0) {
            return Err(Error::param("eps", ">= 0", self.eps));
        }
        if !(self.dt > 0.0) {
            return Err(Error::param("dt", "> 0", self.dt));
        }
        if !(self.linear_tol > 0.0) {
            return Err(Error::param("linear_tol", "> 0", self.linear_tol));
        }
        Ok(())
    }
}

/// Result of one density step.
#[derive(Debug, Clone)]
pub struct DensityUpdate {
    pub rho: ScalarField,
    /// Discrete divergence of the convective face flux evaluated with the
    /// new density, per node. Matches the update exactly.
    pub flux_div: Vec<f64>,
    /// Neumann Laplacian of the new density (without `eps`).
    pub lap_rho: Vec<f64>,
    pub iterations: usize,
}

/// One node's row: diagonal plus east, west, north, south couplings.
#[derive(Clone, Copy, Default)]
struct Row {
    diag: f64,
    off: [f64; 4],
    nb: [usize; 4],
}

const NONE: usize = usize::MAX;

struct Face {
    other: usize,
    /// Face length times outward normal sign for velocity components.
    len: f64,
    h: f64,
    sign: f64,
    /// Component 0 for x-faces, 1 for y-faces.
    comp: usize,
}

fn faces(g: &GridSpec, i: usize, j: usize) -> [Option<Face>; 4] {
    let wx = if !g.is_periodic() && (i == 0 || i == g.nx) { 0.5 } else { 1.0 };
    let wy = if !g.is_periodic() && (j == 0 || j == g.ny) { 0.5 } else { 1.0 };
    let make = |dir: Dir| -> Option<Face> {
        let other = g.neighbor(i, j, dir)?;
        let (len, h, sign, comp) = match dir {
            Dir::East => (g.hy() * wy, g.hx(), 1.0, 0),
            Dir::West => (g.hy() * wy, g.hx(), -1.0, 0),
            Dir::North => (g.hx() * wx, g.hy(), 1.0, 1),
            Dir::South => (g.hx() * wx, g.hy(), -1.0, 1),
        };
        Some(Face { other, len, h, sign, comp })
    };
    [make(Dir::East), make(Dir::West), make(Dir::North), make(Dir::South)]
}

/// Whether a face uses the centered flux.
#[inline]
fn centered(eps: f64, vk: f64, vm: f64, h: f64) -> bool {
    eps > 0.0 && vk.abs().max(vm.abs()) * h <= 2.0 * eps
}

struct Operator {
    rows: Vec<Row>,
    symmetric: bool,
}

impl Operator {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (k, r) in self.rows.iter().enumerate() {
            let mut s = r.diag * x[k];
            for q in 0..4 {
                if r.nb[q] != NONE {
                    s += r.off[q] * x[r.nb[q]];
                }
            }
            y[k] = s;
        }
    }
}

/// Assembles `V/dt + C + eps D` where `C` is the convective part (unless
/// `with_convection` is false) and `D` the diffusive part.
fn assemble(g: &GridSpec, v: &VectorField2, eps: f64, dt: f64, with_convection: bool) -> Operator {
    let n = g.node_count();
    let mut rows = vec![Row::default(); n];
    let mut symmetric = true;
    let comps = [v.u(), v.w()];
    for j in 0..g.my() {
        for i in 0..g.mx() {
            let k = g.idx(i, j);
            let mut row = Row {
                diag: g.weight(i, j) / dt,
                off: [0.0; 4],
                nb: [NONE; 4],
            };
            for (q, f) in faces(g, i, j).into_iter().enumerate() {
                let Some(f) = f else { continue };
                row.nb[q] = f.other;
                // Diffusion.
                let dcoef = eps * f.len / f.h;
                row.diag += dcoef;
                row.off[q] -= dcoef;
                if !with_convection {
                    continue;
                }
                let vk = f.sign * comps[f.comp][k];
                let vm = f.sign * comps[f.comp][f.other];
                if vk != 0.0 || vm != 0.0 {
                    symmetric = false;
                }
                if centered(eps, vk, vm, f.h) {
                    row.diag += 0.5 * vk * f.len;
                    row.off[q] += 0.5 * vm * f.len;
                } else {
                    let a = 0.5 * (vk + vm);
                    row.diag += a.max(0.0) * f.len;
                    row.off[q] += a.min(0.0) * f.len;
                }
            }
            rows[k] = row;
        }
    }
    Operator { rows, symmetric }
}

/// Per-node outflow `sum_faces flux * len / V` for density `rho`.
fn flux_divergence(g: &GridSpec, rho: &[f64], v: &VectorField2, eps: f64) -> Vec<f64> {
    let comps = [v.u(), v.w()];
    let mut out = vec![0.0; g.node_count()];
    for j in 0..g.my() {
        for i in 0..g.mx() {
            let k = g.idx(i, j);
            let mut s = 0.0;
            for f in faces(g, i, j).into_iter().flatten() {
                let vk = f.sign * comps[f.comp][k];
                let vm = f.sign * comps[f.comp][f.other];
                let flux = if centered(eps, vk, vm, f.h) {
                    0.5 * (vk * rho[k] + vm * rho[f.other])
                } else {
                    let a = 0.5 * (vk + vm);
                    a.max(0.0) * rho[k] + a.min(0.0) * rho[f.other]
                };
                s += flux * f.len;
            }
            out[k] = s / g.weight(i, j);
        }
    }
    out
}

/// Neumann (no-flux) Laplacian in control-volume form; the five-point
/// Laplacian on the torus.
pub fn neumann_laplacian(g: &GridSpec, rho: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.node_count()];
    for j in 0..g.my() {
        for i in 0..g.mx() {
            let k = g.idx(i, j);
            let mut s = 0.0;
            for f in faces(g, i, j).into_iter().flatten() {
                s += f.len / f.h * (rho[f.other] - rho[k]);
            }
            out[k] = s / g.weight(i, j);
        }
    }
    out
}

/// Face-summed `sum_faces len * h * D+a * D+b`, the discrete `int grad a . grad b`
/// matching [`neumann_laplacian`].
pub fn face_gradient_pairing(g: &GridSpec, a: &[f64], b: &[f64]) -> f64 {
    let mut parts = Vec::with_capacity(2 * g.node_count());
    for j in 0..g.my() {
        for i in 0..g.mx() {
            let k = g.idx(i, j);
            let fs = faces(g, i, j);
            // East and north faces only, so each face is visited once.
            for f in [&fs[0], &fs[2]].into_iter().flatten() {
                let da = (a[f.other] - a[k]) / f.h;
                let db = (b[f.other] - b[k]) / f.h;
                parts.push(f.len * f.h * da * db);
            }
        }
    }
    crate::linalg::pairwise_sum(&parts)
}

fn check_wall_velocity(g: &GridSpec, v: &VectorField2) -> Result<()> {
    if g.is_periodic() {
        return Ok(());
    }
    for j in 0..g.my() {
        for i in 0..g.mx() {
            if g.is_boundary(i, j) {
                let k = g.idx(i, j);
                let m = v.u()[k].hypot(v.w()[k]);
                if m > 1e-12 {
                    return Err(Error::Consistency {
                        node: k,
                        what: format!("velocity {m:.3e} on a no-slip wall"),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Largest stable step of explicit upwinding, `0.9 h / max|v|`.
pub fn cfl_limit(g: &GridSpec, v: &VectorField2) -> f64 {
    let vmax = v.max_magnitude();
    if vmax == 0.0 {
        f64::INFINITY
    } else {
        0.9 * g.hx().min(g.hy()) / vmax
    }
}

/// Advances the density by one step.
pub fn density_step(rho: &ScalarField, v: &VectorField2, cfg: &DensityStepConfig) -> Result<DensityUpdate> {
    cfg.validate()?;
    let g = *rho.grid();
    g.check_same(v.grid(), "density step")?;
    for (k, &r) in rho.values().iter().enumerate() {
        if !(r > 0.0) {
            return Err(Error::Consistency {
                node: k,
                what: format!("density {r:.6e} is not positive"),
            });
        }
    }
    check_wall_velocity(&g, v)?;
    let explicit = cfg.scheme == DensityScheme::ImplicitDiffusionUpwindAdvection;
    if cfg.eps == 0.0 || explicit {
        let limit = cfl_limit(&g, v);
        if cfg.dt > limit {
            return Err(Error::Cfl { dt: cfg.dt, limit });
        }
    }
    let n = g.node_count();
    let w = g.weights();
    let mut b: Vec<f64> = (0..n).map(|k| w[k] / cfg.dt * rho.values()[k]).collect();
    if explicit {
        // Pure upwind flux of the old density, moved to the right side.
        let div = flux_divergence(&g, rho.values(), v, 0.0);
        for k in 0..n {
            b[k] -= w[k] * div[k];
        }
    }
    let op = assemble(&g, v, cfg.eps, cfg.dt, !explicit);
    let mut x = rho.values().to_vec();
    let opts = KrylovOptions {
        rel_tol: cfg.linear_tol,
        abs_tol: 1e-300,
        max_iters: 20 * n.max(100),
    };
    let stats = if op.symmetric {
        conjugate_gradient(|a, y| op.apply(a, y), &b, &mut x, opts)?
    } else {
        bicgstab(|a, y| op.apply(a, y), &b, &mut x, opts)?
    };
    for (k, &r) in x.iter().enumerate() {
        if !(r > 0.0) {
            return Err(Error::SchemeViolation {
                node: k,
                what: "non-positive density after update",
                value: r,
            });
        }
    }
    let flux_div = if explicit {
        flux_divergence(&g, rho.values(), v, 0.0)
    } else {
        flux_divergence(&g, &x, v, cfg.eps)
    };
    let lap_rho = neumann_laplacian(&g, &x);
    Ok(DensityUpdate {
        rho: ScalarField::new(g, x)?,
        flux_div,
        lap_rho,
        iterations: stats.iterations,
    })
}

/// Outcome of the two-sided exponential bound check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    /// Smallest `rho - lower` over all steps and nodes.
    pub lower_margin: f64,
    /// Smallest `upper - rho` over all steps and nodes.
    pub upper_margin: f64,
    /// Final value of `int_0^t ||v||_{W1,inf}`.
    pub exponent: f64,
}

/// Checks `min rho0 exp(-int ||v||_W1inf) <= rho <= max rho0 exp(+int ||v||_W1inf)`
/// along a trajectory. `v_path[k]` drives the step from `rho_path[k]` to
/// `rho_path[k+1]`.
pub fn density_bounds_check(
    rho_path: &[ScalarField],
    v_path: &[VectorField2],
    rho0_min: f64,
    rho0_max: f64,
    dt: f64,
) -> Result<BoundsReport> {
    if rho_path.len() != v_path.len() + 1 {
        return Err(Error::Diagnostic(format!(
            "{} densities for {} velocities",
            rho_path.len(),
            v_path.len()
        )));
    }
    let mut exponent = 0.0;
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    for (step, rho) in rho_path.iter().enumerate() {
        if step > 0 {
            exponent += dt * vector_norms(&v_path[step - 1]).w1inf;
        }
        let lo = rho0_min * (-exponent).exp();
        let hi = rho0_max * (exponent).exp();
        for (k, &r) in rho.values().iter().enumerate() {
            let (ml, mu) = (r - lo, hi - r);
            // Roundoff allowance for the tight v = 0 case.
            let tol = 1e-12 * rho0_max;
            if ml < -tol || mu < -tol {
                return Err(Error::Diagnostic(format!(
                    "density bound violated at step {step}, node {k}: {lo:.6e} <= {r:.6e} <= {hi:.6e} fails"
                )));
            }
            lower_margin = lower_margin.min(ml);
            upper_margin = upper_margin.min(mu);
        }
    }
    Ok(BoundsReport {
        lower_margin,
        upper_margin,
        exponent,
    })
}

/// Total mass `int rho`.
pub fn mass(rho: &ScalarField) -> f64 {
    integrate_values(rho.grid(), rho.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn torus(n: usize) -> GridSpec {
        GridSpec::torus(2.0 * PI, 2.0 * PI, n, n).unwrap()
    }

    #[test]
    fn constant_is_steady() {
        let g = GridSpec::dirichlet_box(PI, PI, 16, 16).unwrap();
        let rho = ScalarField::constant(g, 2.5);
        let up = density_step(&rho, &VectorField2::zeros(g), &DensityStepConfig::new(0.1, 0.01)).unwrap();
        assert!(up.rho.values().iter().all(|v| (v - 2.5).abs() < 1e-13));
    }

    #[test]
    fn advection_of_constant_without_viscosity() {
        let g = torus(32);
        let v = VectorField2::from_fn(g, |x, y| [-(y.sin()), x.sin()]);
        let rho = ScalarField::constant(g, 1.0);
        let up = density_step(&rho, &v, &DensityStepConfig::new(0.0, 0.05)).unwrap();
        assert!(up.rho.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn cfl_violation_is_reported() {
        let g = torus(16);
        let v = VectorField2::constant(g, [10.0, 0.0]);
        let rho = ScalarField::constant(g, 1.0);
        assert!(matches!(
            density_step(&rho, &v, &DensityStepConfig::new(0.0, 1.0)),
            Err(Error::Cfl { .. })
        ));
    }

    #[test]
    fn conserves_and_stays_positive_with_strong_flow() {
        let g = torus(32);
        let v = VectorField2::from_fn(g, |x, y| [3.0 * (x + y).cos(), 2.0 * x.sin()]);
        let mut rho = ScalarField::from_fn(g, |x, y| 1.0 + 0.9 * (x - y).sin());
        let m0 = mass(&rho);
        for _ in 0..20 {
            rho = density_step(&rho, &v, &DensityStepConfig::new(0.05, 0.02)).unwrap().rho;
            assert!(rho.min() > 0.0);
        }
        assert!((mass(&rho) - m0).abs() <= 1e-10 * m0);
    }

    #[test]
    fn flux_divergence_is_centered_on_smooth_low_peclet() {
        let g = torus(32);
        let v = VectorField2::from_fn(g, |x, y| [0.1 * y.cos(), 0.1 * x.sin()]);
        let rho = ScalarField::from_fn(g, |x, _| 1.0 + 0.2 * x.cos());
        let up = density_step(&rho, &v, &DensityStepConfig::new(0.5, 0.01)).unwrap();
        let m = VectorField2::new(
            g,
            up.rho.values().iter().zip(v.u()).map(|(r, a)| r * a).collect(),
            up.rho.values().iter().zip(v.w()).map(|(r, a)| r * a).collect(),
        )
        .unwrap();
        let div = crate::field_core::divergence(&m);
        for k in 0..g.node_count() {
            assert!((div.values()[k] - up.flux_div[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn wall_velocity_is_rejected() {
        let g = GridSpec::dirichlet_box(1.0, 1.0, 8, 8).unwrap();
        let v = VectorField2::constant(g, [0.1, 0.0]);
        let rho = ScalarField::constant(g, 1.0);
        assert!(density_step(&rho, &v, &DensityStepConfig::new(0.1, 0.01)).is_err());
    }

    #[test]
    fn pairing_matches_laplacian() {
        let g = GridSpec::dirichlet_box(2.0, 1.0, 12, 10).unwrap();
        let a: Vec<f64> = (0..g.node_count()).map(|k| ((k * 7) % 11) as f64).collect();
        let b: Vec<f64> = (0..g.node_count()).map(|k| ((k * 3) % 5) as f64 - 1.0).collect();
        let la = neumann_laplacian(&g, &a);
        let w = g.weights();
        let lhs: f64 = (0..g.node_count()).map(|k| w[k] * la[k] * b[k]).sum();
        assert!((lhs + face_gradient_pairing(&g, &a, &b)).abs() < 1e-9);
    }
}
