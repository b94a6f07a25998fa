//! Pressure potential, total and modified energies, dissipation and the
//! harmonic-map tension field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_core::ops::{dx, dy, grad_sq_density, integrate_values, lap};
use crate::field_core::{DirectorField, GridSpec, ScalarField, VectorField2};

/// Vacuum threshold relative to the mean density.
pub const VACUUM_REL: f64 = 1e-12;
/// Largest momentum magnitude tolerated on a vacuum node.
pub const VACUUM_MOMENTUM_TOL: f64 = 1e-12;

/// Physical constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysParams {
    pub mu: f64,
    pub lambda: f64,
    pub nu: f64,
    pub theta: f64,
    /// Pressure amplitude `A` in `P = A rho^gamma`.
    pub a: f64,
    pub gamma: f64,
    pub rho_inf: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        PhysParams {
            mu: 1.0,
            lambda: 0.0,
            nu: 1.0,
            theta: 1.0,
            a: 1.0,
            gamma: 2.0,
            rho_inf: 1.0,
        }
    }
}

fn require(ok: bool, key: &str, expected: &str, got: f64) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::param(key, expected, got))
    }
}

impl PhysParams {
    pub fn validate(&self) -> Result<()> {
        require(self.mu > 0.0 && self.mu.is_finite(), "mu", "> 0", self.mu)?;
        require(
            self.lambda + self.mu >= 0.0 && self.lambda.is_finite(),
            "lambda",
            ">= -mu",
            self.lambda,
        )?;
        require(self.nu > 0.0 && self.nu.is_finite(), "nu", "> 0", self.nu)?;
        require(self.theta > 0.0 && self.theta.is_finite(), "theta", "> 0", self.theta)?;
        require(self.a > 0.0 && self.a.is_finite(), "a", "> 0", self.a)?;
        require(self.gamma > 1.0 && self.gamma.is_finite(), "gamma", "> 1", self.gamma)?;
        require(
            self.rho_inf >= 0.0 && self.rho_inf.is_finite(),
            "rho_inf",
            ">= 0",
            self.rho_inf,
        )
    }
}

/// Artificial parameters and discretization controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeParams {
    /// Artificial viscosity in the continuity equation.
    pub eps: f64,
    /// Artificial pressure weight.
    pub delta: f64,
    /// Artificial pressure exponent.
    pub beta: f64,
    pub n_modes: usize,
    pub dt: f64,
    pub t_end: f64,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams {
            eps: 0.0,
            delta: 0.0,
            beta: 8.0,
            n_modes: 32,
            dt: 1e-3,
            t_end: 0.1,
        }
    }
}

impl SchemeParams {
    pub fn validate(&self, p: &PhysParams) -> Result<()> {
        require(self.eps >= 0.0 && self.eps.is_finite(), "eps", ">= 0", self.eps)?;
        require(self.delta >= 0.0 && self.delta.is_finite(), "delta", ">= 0", self.delta)?;
        if self.delta > 0.0 {
            let lo = p.gamma.max(8.0);
            require(
                self.beta >= lo,
                "beta",
                &format!(">= max(gamma, 8) = {lo}"),
                self.beta,
            )?;
        } else {
            require(self.beta > 1.0, "beta", "> 1", self.beta)?;
        }
        if self.n_modes < 1 {
            return Err(Error::param("n_modes", ">= 1", self.n_modes));
        }
        require(self.dt > 0.0 && self.dt.is_finite(), "dt", "> 0", self.dt)?;
        require(
            self.t_end > 0.0 && self.t_end.is_finite(),
            "t_end",
            "> 0",
            self.t_end,
        )?;
        require(
            (self.t_end / self.dt).is_finite(),
            "t_end / dt",
            "finite",
            self.t_end / self.dt,
        )
    }

    /// Number of time steps covering `[0, t_end]`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// `Q(s) = A/(gamma-1) (s^gamma - gamma s rho_inf^(gamma-1) + (gamma-1) rho_inf^gamma)`.
pub fn q_potential(s: f64, p: &PhysParams) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Domain {
            what: "pressure potential needs a nonnegative density",
            value: s,
        });
    }
    Ok(q_unchecked(s, p))
}

/// Evaluated as a Bregman gap of `s^gamma` around `rho_inf`, which is exactly
/// zero at the minimizer.
#[inline]
pub(crate) fn q_unchecked(s: f64, p: &PhysParams) -> f64 {
    let g = p.gamma;
    let r = p.rho_inf;
    let rg1 = if r > 0.0 { r.powf(g - 1.0) } else { 0.0 };
    let val = s.powf(g) - r * rg1 - g * rg1 * (s - r);
    p.a / (g - 1.0) * val.max(0.0)
}

/// Pressure `A s^gamma + delta s^beta`.
#[inline]
pub fn pressure(s: f64, p: &PhysParams, sp: &SchemeParams) -> f64 {
    let mut v = p.a * s.powf(p.gamma);
    if sp.delta > 0.0 {
        v += sp.delta * s.powf(sp.beta);
    }
    v
}

/// Enthalpy `h` with `h'(s) = P'(s)/s`, i.e. the derivative of
/// `A/(gamma-1) s^gamma + delta/(beta-1) s^beta`.
#[inline]
pub fn enthalpy(s: f64, p: &PhysParams, sp: &SchemeParams) -> f64 {
    let mut v = p.a * p.gamma / (p.gamma - 1.0) * s.powf(p.gamma - 1.0);
    if sp.delta > 0.0 {
        v += sp.delta * sp.beta / (sp.beta - 1.0) * s.powf(sp.beta - 1.0);
    }
    v
}

/// Pressure part of the modified energy: `A/(gamma-1) s^gamma + delta/(beta-1) s^beta`.
#[inline]
pub fn modified_pressure_density(s: f64, p: &PhysParams, sp: &SchemeParams) -> f64 {
    let mut v = p.a / (p.gamma - 1.0) * s.powf(p.gamma);
    if sp.delta > 0.0 {
        v += sp.delta / (sp.beta - 1.0) * s.powf(sp.beta);
    }
    v
}

fn check_rho(rho: &ScalarField) -> Result<()> {
    for (k, &r) in rho.values().iter().enumerate() {
        if !(r >= 0.0) {
            return Err(Error::Consistency {
                node: k,
                what: format!("negative density {r:.6e}"),
            });
        }
    }
    Ok(())
}

/// `int 1/2 |m|^2 / rho` over nodes above the vacuum threshold.
pub fn kinetic_energy(rho: &ScalarField, m: &VectorField2) -> Result<f64> {
    rho.grid().check_same(m.grid(), "kinetic energy")?;
    check_rho(rho)?;
    let g = rho.grid();
    let mean = integrate_values(g, rho.values()) / g.area();
    let vac = VACUUM_REL * mean;
    let mut dens = vec![0.0; g.node_count()];
    for k in 0..g.node_count() {
        let r = rho.values()[k];
        let m2 = m.u()[k] * m.u()[k] + m.w()[k] * m.w()[k];
        if r > vac {
            dens[k] = 0.5 * m2 / r;
        } else if m2.sqrt() > VACUUM_MOMENTUM_TOL {
            return Err(Error::Consistency {
                node: k,
                what: format!("momentum {:.3e} on a vacuum node", m2.sqrt()),
            });
        }
    }
    Ok(integrate_values(g, &dens))
}

/// Nodal `|grad d|^2`, face-consistent with the five-point Laplacian.
pub fn director_grad_sq(d: &DirectorField) -> Vec<f64> {
    let g = d.grid();
    let mut e = grad_sq_density(g, d.d1());
    for (a, b) in e.iter_mut().zip(grad_sq_density(g, d.d2())) {
        *a += b;
    }
    e
}

/// `int |grad d|^2`.
pub fn director_dirichlet(d: &DirectorField) -> f64 {
    integrate_values(d.grid(), &director_grad_sq(d))
}

/// Components of the total energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub pressure: f64,
    /// `int |grad d|^2 / 2`, before any `nu` or `theta` weight.
    pub director: f64,
}

pub fn energy_parts(
    rho: &ScalarField,
    m: &VectorField2,
    d: &DirectorField,
    p: &PhysParams,
) -> Result<EnergyParts> {
    rho.grid().check_same(d.grid(), "total energy")?;
    let kinetic = kinetic_energy(rho, m)?;
    let q: Vec<f64> = rho.values().iter().map(|&s| q_unchecked(s, p)).collect();
    Ok(EnergyParts {
        kinetic,
        pressure: integrate_values(rho.grid(), &q),
        director: 0.5 * director_dirichlet(d),
    })
}

/// `E = int [ 1/2 |m|^2/rho + Q(rho) + nu theta |grad d|^2 / 2 ]`.
pub fn total_energy(
    rho: &ScalarField,
    m: &VectorField2,
    d: &DirectorField,
    p: &PhysParams,
) -> Result<f64> {
    let e = energy_parts(rho, m, d, p)?;
    Ok(e.kinetic + e.pressure + p.nu * p.theta * e.director)
}

/// `E_delta = int [ 1/2 |m|^2/rho + A/(gamma-1) rho^gamma + delta/(beta-1) rho^beta + nu |grad d|^2 / 2 ]`.
pub fn modified_energy(
    rho: &ScalarField,
    m: &VectorField2,
    d: &DirectorField,
    p: &PhysParams,
    s: &SchemeParams,
) -> Result<f64> {
    rho.grid().check_same(d.grid(), "modified energy")?;
    let kinetic = kinetic_energy(rho, m)?;
    let pr: Vec<f64> = rho
        .values()
        .iter()
        .map(|&r| modified_pressure_density(r, p, s))
        .collect();
    Ok(kinetic + integrate_values(rho.grid(), &pr) + 0.5 * p.nu * director_dirichlet(d))
}

/// Tension `lap d + |grad d|^2 d` (no `theta` factor).
///
/// With the face-consistent `|grad d|^2`, this is exactly the projection of
/// `lap d` orthogonal to `d` whenever `|d| = 1` at every node. Box wall nodes
/// use that projection directly.
pub fn tension_field(d: &DirectorField) -> VectorField2 {
    let g = d.grid();
    let e = director_grad_sq(d);
    let mut t1 = lap(g, d.d1());
    let mut t2 = lap(g, d.d2());
    for k in 0..g.node_count() {
        let (i, j) = g.ij(k);
        let (a, b) = (d.d1()[k], d.d2()[k]);
        // One-sided wall stencils have no matching face form; project instead.
        let c = if g.is_boundary(i, j) {
            -(a * t1[k] + b * t2[k]) / (a * a + b * b).max(1e-300)
        } else {
            e[k]
        };
        t1[k] += c * a;
        t2[k] += c * b;
    }
    VectorField2::new(*g, t1, t2).expect("congruent")
}

/// `int |tension|^2`.
pub fn tension_sq(d: &DirectorField) -> f64 {
    let t = tension_field(d);
    let sq: Vec<f64> = t
        .u()
        .iter()
        .zip(t.w())
        .map(|(a, b)| a * a + b * b)
        .collect();
    integrate_values(d.grid(), &sq)
}

/// Viscous part `int mu |grad v|^2 + (lambda+mu) (div v)^2` on grid fields.
pub fn viscous_dissipation(v: &VectorField2, p: &PhysParams) -> f64 {
    let g = v.grid();
    let mut grad = grad_sq_density(g, v.u());
    for (a, b) in grad.iter_mut().zip(grad_sq_density(g, v.w())) {
        *a += b;
    }
    let mut div = dx(g, v.u());
    for (a, b) in div.iter_mut().zip(dy(g, v.w())) {
        *a += b;
    }
    let dens: Vec<f64> = grad
        .iter()
        .zip(&div)
        .map(|(gr, dv)| p.mu * gr + (p.lambda + p.mu) * dv * dv)
        .collect();
    integrate_values(g, &dens)
}

/// `F = int [ mu |grad v|^2 + (lambda+mu) |div v|^2 + theta |lap d + |grad d|^2 d|^2 ]`.
pub fn dissipation(v: &VectorField2, d: &DirectorField, p: &PhysParams) -> Result<f64> {
    v.grid().check_same(d.grid(), "dissipation")?;
    Ok(viscous_dissipation(v, p) + p.theta * tension_sq(d))
}

/// Second-order director diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectorNorms {
    /// `int |grad d|^4`, from the face-consistent density.
    pub grad_l4_pow4: f64,
    /// `int |lap d|^2`.
    pub lap_sq: f64,
    /// `int |grad^2 d|^2`.
    pub hess_sq: f64,
}

pub fn director_norms(d: &DirectorField) -> DirectorNorms {
    let g = d.grid();
    let e = director_grad_sq(d);
    let e2: Vec<f64> = e.iter().map(|v| v * v).collect();
    let mut lap_sq = vec![0.0; g.node_count()];
    let mut hess = vec![0.0; g.node_count()];
    for comp in [d.d1(), d.d2()] {
        let l = lap(g, comp);
        let hs = hessian_sq(g, comp);
        for k in 0..g.node_count() {
            lap_sq[k] += l[k] * l[k];
            hess[k] += hs[k];
        }
    }
    DirectorNorms {
        grad_l4_pow4: integrate_values(g, &e2),
        lap_sq: integrate_values(g, &lap_sq),
        hess_sq: integrate_values(g, &hess),
    }
}

/// Nodal `f_xx^2 + 2 f_xy^2 + f_yy^2`.
pub fn hessian_sq(g: &GridSpec, f: &[f64]) -> Vec<f64> {
    use crate::field_core::ops::{dxx, dxy, dyy};
    let a = dxx(g, f);
    let b = dxy(g, f);
    let c = dyy(g, f);
    (0..g.node_count())
        .map(|k| a[k] * a[k] + 2.0 * b[k] * b[k] + c[k] * c[k])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn torus(n: usize) -> GridSpec {
        GridSpec::torus(2.0 * PI, 2.0 * PI, n, n).unwrap()
    }

    fn unit_params() -> PhysParams {
        PhysParams::default()
    }

    #[test]
    fn q_examples() {
        let p = unit_params();
        assert_eq!(q_potential(1.0, &p).unwrap(), 0.0);
        assert!((q_potential(2.0, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!((q_potential(0.0, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(q_potential(-0.1, &p), Err(Error::Domain { .. })));
    }

    #[test]
    fn q_without_far_field() {
        let p = PhysParams { rho_inf: 0.0, gamma: 1.4, ..unit_params() };
        let s: f64 = 2.5;
        assert!((q_potential(s, &p).unwrap() - s.powf(1.4) / 0.4).abs() < 1e-13);
    }

    #[test]
    fn equilibrium_energy_is_zero() {
        let g = torus(16);
        let p = unit_params();
        let rho = ScalarField::constant(g, 1.0);
        let m = VectorField2::zeros(g);
        let d = DirectorField::vertical(g);
        assert_eq!(total_energy(&rho, &m, &d, &p).unwrap(), 0.0);
    }

    #[test]
    fn pure_kinetic_energy() {
        let g = torus(16);
        let rho = ScalarField::constant(g, 1.0);
        let m = VectorField2::constant(g, [1.0, 0.0]);
        let d = DirectorField::vertical(g);
        let e = total_energy(&rho, &m, &d, &unit_params()).unwrap();
        assert!((e - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn vacuum_with_momentum_is_rejected() {
        let g = torus(8);
        let mut rho = ScalarField::constant(g, 1.0);
        rho.values_mut()[5] = 0.0;
        let mut m = VectorField2::zeros(g);
        m.components_mut().0[5] = 1e-3;
        assert!(matches!(kinetic_energy(&rho, &m), Err(Error::Consistency { node: 5, .. })));
        m.components_mut().0[5] = 0.0;
        assert!(kinetic_energy(&rho, &m).is_ok());
        rho.values_mut()[3] = -1.0;
        assert!(kinetic_energy(&rho, &m).is_err());
    }

    #[test]
    fn harmonic_map_has_zero_tension() {
        let g = torus(32);
        let d = DirectorField::from_fn(g, |x, _| [(3.0 * x).cos(), (3.0 * x).sin()]);
        let t = tension_field(&d);
        assert!(t.max_magnitude() < 1e-12);
        let f = dissipation(&VectorField2::zeros(g), &d, &unit_params()).unwrap();
        assert!(f < 1e-20);
    }

    #[test]
    fn modified_energy_reduces_without_artificial_terms() {
        let g = torus(16);
        let p = PhysParams { rho_inf: 0.0, ..unit_params() };
        let s = SchemeParams { delta: 0.0, ..SchemeParams::default() };
        let rho = ScalarField::from_fn(g, |x, y| 1.0 + 0.3 * x.sin() * y.cos());
        let m = VectorField2::from_fn(g, |x, _| [x.cos(), 0.2]);
        let d = DirectorField::from_angle(g, |x, y| 0.1 * (x + y).sin());
        let a = modified_energy(&rho, &m, &d, &p, &s).unwrap();
        let b = total_energy(&rho, &m, &d, &p).unwrap();
        assert!((a - b).abs() < 1e-12 * b);
        let zero = ScalarField::zeros(g);
        let e0 = modified_energy(&zero, &VectorField2::zeros(g), &DirectorField::vertical(g), &p, &s)
            .unwrap();
        assert_eq!(e0, 0.0);
    }

    #[test]
    fn validation_names_key() {
        let p = PhysParams { gamma: 0.9, ..unit_params() };
        match p.validate() {
            Err(Error::Param { key, expected, .. }) => {
                assert_eq!(key, "gamma");
                assert_eq!(expected, "> 1");
            }
            other => panic!("unexpected {other:?}"),
        }
        let s = SchemeParams { delta: 1e-3, beta: 4.0, ..SchemeParams::default() };
        assert!(s.validate(&unit_params()).is_err());
    }

    #[test]
    fn step_count() {
        let s = SchemeParams { dt: 1e-3, t_end: 0.2, ..SchemeParams::default() };
        assert_eq!(s.steps(), 200);
    }
}
