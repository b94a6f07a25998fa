//! Time stepping of the Galerkin momentum system
//! `d/dt (M(rho) a) = P N(rho, v, d) - Lambda a`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::energy::{PhysParams, SchemeParams};
use crate::error::{Error, Result};
use crate::field_core::{DirectorField, ScalarField, VectorField2};
use crate::linalg::norm2;

use super::basis::{GalerkinBasis, GalerkinCoeffs};
use super::forcing::{forcing_field, ForcingOptions, Transport};
use super::mass::{MassOperator, ModeMatrix};

/// Treatment of the velocity inside the nonlinear forcing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// Forcing evaluated once with the old velocity.
    Explicit,
    /// Picard iteration on the velocity inside the forcing.
    #[default]
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentumConfig {
    pub coupling: Coupling,
    /// Relative coefficient change that ends the Picard loop.
    pub picard_tol: f64,
    pub max_iters: usize,
    pub forcing: ForcingOptions,
}

impl Default for MomentumConfig {
    fn default() -> Self {
        MomentumConfig {
            coupling: Coupling::SemiImplicit,
            picard_tol: 1e-9,
            max_iters: 50,
            forcing: ForcingOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MomentumUpdate {
    pub a: GalerkinCoeffs,
    pub v: VectorField2,
    pub iters: usize,
}

/// Basis together with its packed mode matrix.
#[derive(Debug, Clone)]
pub struct MomentumSolver {
    basis: GalerkinBasis,
    modes: ModeMatrix,
}

impl MomentumSolver {
    pub fn new(basis: GalerkinBasis) -> Self {
        let modes = ModeMatrix::new(&basis);
        MomentumSolver { basis, modes }
    }

    pub fn basis(&self) -> &GalerkinBasis {
        &self.basis
    }

    pub fn modes(&self) -> &ModeMatrix {
        &self.modes
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn velocity(&self, a: &GalerkinCoeffs) -> VectorField2 {
        let nn = self.basis.grid.node_count();
        let (mut u, mut w) = (vec![0.0; nn], vec![0.0; nn]);
        self.modes.reconstruct_into(&a.a, &mut u, &mut w);
        VectorField2::new(self.basis.grid, u, w).expect("congruent")
    }

    pub fn mass(&self, rho: &ScalarField) -> Result<MassOperator> {
        self.basis.grid.check_same(rho.grid(), "mass matrix")?;
        MassOperator::assemble(&self.modes, rho)
    }

    /// Galerkin coefficients of a momentum field: `M(rho) a = P m`.
    pub fn coefficients_from_momentum(&self, rho: &ScalarField, m: &VectorField2) -> Result<GalerkinCoeffs> {
        let b = self.modes.project(m.u(), m.w());
        Ok(GalerkinCoeffs { a: self.mass(rho)?.solve(&b)? })
    }

    /// `sum lambda_i a_i^2`, the viscous dissipation of the Galerkin velocity.
    pub fn viscous_dissipation(&self, a: &GalerkinCoeffs) -> f64 {
        let t: Vec<f64> = a.a.iter().zip(&self.basis.eigvals).map(|(x, l)| l * x * x).collect();
        crate::linalg::pairwise_sum(&t)
    }

    #[allow(clippy::too_many_arguments)]
    fn projected_forcing(
        &self,
        rho: &ScalarField,
        v: &VectorField2,
        d: &DirectorField,
        transport: Option<Transport<'_>>,
        p: &PhysParams,
        s: &SchemeParams,
        opts: &ForcingOptions,
    ) -> Result<Vec<f64>> {
        let f = forcing_field(rho, v, d, transport, p, s, opts)?;
        Ok(self.modes.project(f.u(), f.w()))
    }

    /// One step `(M(rho_new) + dt Lambda) a_new = M(rho_old) a_old + dt P N(rho_new, v*, d_new)`.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &self,
        a_old: &GalerkinCoeffs,
        rho_old: &ScalarField,
        rho_new: &ScalarField,
        d_new: &DirectorField,
        transport: Option<Transport<'_>>,
        p: &PhysParams,
        s: &SchemeParams,
        cfg: &MomentumConfig,
    ) -> Result<MomentumUpdate> {
        let n = self.n();
        if a_old.len() != n {
            return Err(Error::GridMismatch(format!("{} coefficients for {n} modes", a_old.len())));
        }
        let rhs0 = self.mass(rho_old)?.apply(&a_old.a);
        let mut sys: DMatrix<f64> = self.mass(rho_new)?.matrix().clone();
        if cfg.forcing.terms.viscous {
            for i in 0..n {
                sys[(i, i)] += s.dt * self.basis.eigvals[i];
            }
        }
        let sys = MassOperator::from_matrix(sys)?;
        let mut a = a_old.a.clone();
        let mut v = self.velocity(a_old);
        let max_iters = match cfg.coupling {
            Coupling::Explicit => 1,
            Coupling::SemiImplicit => cfg.max_iters.max(1),
        };
        let mut last_change = f64::INFINITY;
        for it in 1..=max_iters {
            let f = self.projected_forcing(rho_new, &v, d_new, transport, p, s, &cfg.forcing)?;
            let b: Vec<f64> = rhs0.iter().zip(&f).map(|(r, f)| r + s.dt * f).collect();
            let next = sys.solve(&b)?;
            if next.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { field: "velocity coefficients", step: it });
            }
            let diff: Vec<f64> = next.iter().zip(&a).map(|(x, y)| x - y).collect();
            last_change = norm2(&diff) / norm2(&next).max(1e-300);
            a = next;
            v = self.velocity(&GalerkinCoeffs { a: a.clone() });
            if cfg.coupling == Coupling::Explicit || last_change <= cfg.picard_tol || norm2(&diff) == 0.0 {
                return Ok(MomentumUpdate { a: GalerkinCoeffs { a }, v, iters: it });
            }
        }
        Err(Error::StepFailure {
            stage: "momentum",
            step: 0,
            reason: format!("Picard iteration stalled at relative change {last_change:.3e} after {max_iters} sweeps"),
        })
    }

    /// Time derivative of the coefficients, `M^-1 (P N - Lambda a - M(rho_t) a)`.
    #[allow(clippy::too_many_arguments)]
    pub fn dvdt(
        &self,
        a: &GalerkinCoeffs,
        rho: &ScalarField,
        rho_t: &ScalarField,
        d: &DirectorField,
        transport: Option<Transport<'_>>,
        p: &PhysParams,
        s: &SchemeParams,
        opts: &ForcingOptions,
    ) -> Result<GalerkinCoeffs> {
        let v = self.velocity(a);
        let mut b = self.projected_forcing(rho, &v, d, transport, p, s, opts)?;
        let m_t = self.modes.weighted_gram(rho_t.values());
        let mta = &m_t * nalgebra::DVector::from_column_slice(&a.a);
        for i in 0..self.n() {
            b[i] -= mta[i];
            if opts.terms.viscous {
                b[i] -= self.basis.eigvals[i] * a.a[i];
            }
        }
        Ok(GalerkinCoeffs { a: self.mass(rho)?.solve(&b)? })
    }
}

/// Single momentum step with a freshly packed basis.
#[allow(clippy::too_many_arguments)]
pub fn momentum_step(
    basis: &GalerkinBasis,
    a_old: &GalerkinCoeffs,
    rho_old: &ScalarField,
    rho_new: &ScalarField,
    d_new: &DirectorField,
    p: &PhysParams,
    s: &SchemeParams,
    cfg: &MomentumConfig,
) -> Result<MomentumUpdate> {
    MomentumSolver::new(basis.clone()).step(a_old, rho_old, rho_new, d_new, None, p, s, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::build_basis_cached;
    use crate::galerkin::forcing::ForcingTerms;
    use crate::field_core::GridSpec;
    use std::f64::consts::PI;

    fn solver(n: usize) -> MomentumSolver {
        let g = GridSpec::torus(2.0 * PI, 2.0 * PI, 16, 16).unwrap();
        MomentumSolver::new(build_basis_cached(&g, &PhysParams::default(), n, None).unwrap())
    }

    #[test]
    fn no_forcing_keeps_coefficients() {
        let sv = solver(8);
        let g = sv.basis().grid;
        let rho = ScalarField::constant(g, 1.0);
        let d = DirectorField::vertical(g);
        let a = GalerkinCoeffs { a: (0..8).map(|k| 0.1 * k as f64).collect() };
        let cfg = MomentumConfig {
            forcing: ForcingOptions {
                terms: ForcingTerms { viscous: false, convection: false, pressure: false, elastic: false, artificial: false },
                ..Default::default()
            },
            ..Default::default()
        };
        let out = sv.step(&a, &rho, &rho, &d, None, &PhysParams::default(), &SchemeParams::default(), &cfg).unwrap();
        for k in 0..8 {
            assert!((out.a.a[k] - a.a[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn shear_mode_decays_by_backward_euler() {
        let sv = solver(4);
        let g = sv.basis().grid;
        let rho = ScalarField::constant(g, 1.0);
        let d = DirectorField::vertical(g);
        let s = SchemeParams { dt: 0.01, ..Default::default() };
        let cfg = MomentumConfig {
            forcing: ForcingOptions {
                terms: ForcingTerms { pressure: false, ..Default::default() },
                ..Default::default()
            },
            ..Default::default()
        };
        let mut a = GalerkinCoeffs::unit(4, 0);
        for _ in 0..100 {
            a = sv.step(&a, &rho, &rho, &d, None, &PhysParams::default(), &s, &cfg).unwrap().a;
        }
        let discrete = (1.0f64 + 0.01).powi(-100);
        assert!((a.a[0] - discrete).abs() < 1e-12);
        assert!((a.a[0] - (-1.0f64).exp()).abs() < 0.01);
        assert!(a.a[1..].iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn explicit_coupling_uses_one_sweep() {
        let sv = solver(8);
        let g = sv.basis().grid;
        let rho = ScalarField::from_fn(g, |x, _| 1.0 + 0.1 * x.cos());
        let d = DirectorField::vertical(g);
        let a = GalerkinCoeffs { a: vec![0.3; 8] };
        let cfg = MomentumConfig { coupling: Coupling::Explicit, ..Default::default() };
        let out = sv.step(&a, &rho, &rho, &d, None, &PhysParams::default(), &SchemeParams::default(), &cfg).unwrap();
        assert_eq!(out.iters, 1);
        let semi = sv
            .step(&a, &rho, &rho, &d, None, &PhysParams::default(), &SchemeParams::default(), &MomentumConfig::default())
            .unwrap();
        assert!(semi.iters > 1);
    }

    #[test]
    fn dvdt_matches_viscous_decay() {
        let sv = solver(6);
        let g = sv.basis().grid;
        let rho = ScalarField::constant(g, 2.0);
        let rho_t = ScalarField::zeros(g);
        let d = DirectorField::vertical(g);
        let a = GalerkinCoeffs { a: vec![1.0; 6] };
        let opts = ForcingOptions {
            terms: ForcingTerms { convection: false, pressure: false, elastic: false, artificial: false, viscous: true },
            ..Default::default()
        };
        let r = sv.dvdt(&a, &rho, &rho_t, &d, None, &PhysParams::default(), &SchemeParams::default(), &opts).unwrap();
        for i in 0..6 {
            assert!((r.a[i] + sv.basis().eigvals[i] / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dvdt_accounts_for_density_change() {
        // With no forcing, d/dt(M a) = 0 so a' = -M^-1 M' a.
        let sv = solver(6);
        let g = sv.basis().grid;
        let rho = ScalarField::constant(g, 1.0);
        let rho_t = ScalarField::constant(g, 0.5);
        let d = DirectorField::vertical(g);
        let a = GalerkinCoeffs { a: vec![1.0; 6] };
        let opts = ForcingOptions {
            terms: ForcingTerms { viscous: false, convection: false, pressure: false, elastic: false, artificial: false },
            ..Default::default()
        };
        let r = sv.dvdt(&a, &rho, &rho_t, &d, None, &PhysParams::default(), &SchemeParams::default(), &opts).unwrap();
        assert!(r.a.iter().all(|x| (x + 0.5).abs() < 1e-12));
    }

    #[test]
    fn vacuum_density_is_rejected() {
        let sv = solver(4);
        let g = sv.basis().grid;
        let rho = ScalarField::zeros(g);
        let d = DirectorField::vertical(g);
        let a = GalerkinCoeffs::zeros(4);
        let r = sv.step(&a, &rho, &rho, &d, None, &PhysParams::default(), &SchemeParams::default(), &MomentumConfig::default());
        assert!(matches!(r, Err(Error::NotPositiveDefinite(_))));
    }
}
