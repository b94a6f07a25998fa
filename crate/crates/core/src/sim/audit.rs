//! Discrete energy-law residuals computed from ledger columns alone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::ledger::{Ledger, LedgerRow};
use super::run::run;
use super::scenario::ScenarioSpec;

/// Which dissipation column closes the balance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditKind {
    /// Tension form of the director dissipation.
    EnergyLaw,
    /// `|lap d|^2 - |grad d|^4` form.
    L4Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub kind: AuditKind,
    /// `r_k` for rows `k = 1..`, aligned with ledger steps.
    pub residuals: Vec<f64>,
    /// `max(0, max_k r_k)`.
    pub max_positive: f64,
    pub max_abs: f64,
    /// Ledger step with the largest `|r_k|`.
    pub worst_step: usize,
    /// Largest energy scale seen, for relative statements.
    pub energy_scale: f64,
}

fn audit(ledger: &Ledger, kind: AuditKind, diss: impl Fn(&LedgerRow) -> f64) -> Result<AuditReport> {
    if ledger.rows.len() < 2 {
        return Err(Error::Diagnostic("audit needs at least two ledger rows".into()));
    }
    ledger.check()?;
    let mut residuals = Vec::with_capacity(ledger.rows.len() - 1);
    let (mut max_positive, mut max_abs, mut worst_step) = (0.0f64, 0.0f64, ledger.rows[1].step);
    for w in ledger.rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let dt = b.t - a.t;
        let r = (b.energy_delta - a.energy_delta) / dt + diss(b) + b.art_diss;
        max_positive = max_positive.max(r);
        if r.abs() > max_abs {
            max_abs = r.abs();
            worst_step = b.step;
        }
        residuals.push(r);
    }
    let energy_scale = ledger.rows.iter().map(|r| r.energy_delta.abs()).fold(0.0, f64::max);
    Ok(AuditReport { kind, residuals, max_positive, max_abs, worst_step, energy_scale })
}

/// `r_k = (E(t_k+1) - E(t_k))/dt + F(t_k+1) + art(t_k+1)` with the modified energy.
pub fn energy_law_audit(ledger: &Ledger) -> Result<AuditReport> {
    audit(ledger, AuditKind::EnergyLaw, |r| r.dissipation)
}

/// Same balance with `int |lap d|^2 - int |grad d|^4` in place of the tension norm.
pub fn l4_identity_audit(ledger: &Ledger) -> Result<AuditReport> {
    audit(ledger, AuditKind::L4Identity, |r| r.dissipation_l4)
}

/// Outcome of one asserted ledger invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Relative mass drift allowed over a run.
pub const MASS_DRIFT_TOL: f64 = 1e-9;

/// Row-wise invariants every ledger must satisfy: finite entries, increasing
/// time, nonnegative energy and dissipation, conserved mass, positive density.
pub fn ledger_invariants(ledger: &Ledger) -> Vec<InvariantCheck> {
    let mut out = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| out.push(InvariantCheck { name: name.into(), passed, detail });
    match ledger.check() {
        Ok(()) => push("finite-and-ordered", true, format!("{} rows", ledger.rows.len())),
        Err(e) => push("finite-and-ordered", false, e.to_string()),
    }
    if ledger.rows.is_empty() {
        return out;
    }
    let scale = ledger.rows.iter().map(|r| r.energy.abs().max(r.dissipation.abs())).fold(0.0, f64::max);
    let floor = -1e-12 * scale.max(1.0);
    let min_e = ledger.rows.iter().map(|r| r.energy).fold(f64::INFINITY, f64::min);
    push("energy-nonnegative", min_e >= floor, format!("min energy {min_e:.6e}"));
    let min_f = ledger.rows.iter().map(|r| r.dissipation).fold(f64::INFINITY, f64::min);
    push("dissipation-nonnegative", min_f >= floor, format!("min dissipation {min_f:.6e}"));
    let m0 = ledger.rows[0].mass;
    let drift = ledger.rows.iter().map(|r| ((r.mass - m0) / m0.abs().max(1e-300)).abs()).fold(0.0, f64::max);
    push("mass-conserved", drift <= MASS_DRIFT_TOL, format!("max relative drift {drift:.3e}"));
    let min_rho = ledger.rows.iter().map(|r| r.rho_min).fold(f64::INFINITY, f64::min);
    push("density-positive", min_rho > 0.0, format!("min density {min_rho:.6e}"));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementLevel {
    pub dt: f64,
    pub energy_law: AuditReport,
    pub l4_identity: AuditReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub levels: Vec<RefinementLevel>,
    /// Successive ratios of `max_positive` (coarse / fine); `None` when the
    /// finer value is zero.
    pub energy_law_ratios: Vec<Option<f64>>,
    pub l4_identity_ratios: Vec<Option<f64>>,
    /// Successive ratios of `max_abs`.
    pub energy_law_abs_ratios: Vec<Option<f64>>,
    pub l4_identity_abs_ratios: Vec<Option<f64>>,
}

fn ratios(levels: &[RefinementLevel], f: impl Fn(&RefinementLevel) -> f64) -> Vec<Option<f64>> {
    levels
        .windows(2)
        .map(|w| {
            let (c, fi) = (f(&w[0]), f(&w[1]));
            (fi > 0.0).then(|| c / fi)
        })
        .collect()
}

/// Runs the scenario at `dt, dt/2, ...` (`levels` values) and audits each ledger.
pub fn refinement_study(spec: &ScenarioSpec, levels: usize) -> Result<RefinementReport> {
    use rayon::prelude::*;
    if levels < 2 {
        return Err(Error::param("levels", ">= 2", levels));
    }
    let specs: Vec<ScenarioSpec> = (0..levels)
        .map(|k| {
            let mut s = spec.clone();
            s.scheme.dt = spec.scheme.dt / (1u64 << k) as f64;
            s
        })
        .collect();
    let levels = specs
        .par_iter()
        .map(|s| {
            let out = run(s, None)?;
            Ok(RefinementLevel {
                dt: s.scheme.dt,
                energy_law: energy_law_audit(&out.ledger)?,
                l4_identity: l4_identity_audit(&out.ledger)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RefinementReport {
        energy_law_ratios: ratios(&levels, |l| l.energy_law.max_positive),
        l4_identity_ratios: ratios(&levels, |l| l.l4_identity.max_positive),
        energy_law_abs_ratios: ratios(&levels, |l| l.energy_law.max_abs),
        l4_identity_abs_ratios: ratios(&levels, |l| l.l4_identity.max_abs),
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: usize, t: f64, e: f64, f: f64) -> LedgerRow {
        LedgerRow { step, t, energy_delta: e, dissipation: f, dissipation_l4: f, ..Default::default() }
    }

    #[test]
    fn exact_exponential_decay_has_first_order_residual() {
        // E = exp(-t), F = exp(-t): backward difference residual ~ dt/2 * E.
        for &dt in &[0.01, 0.005] {
            let led = Ledger {
                rows: (0..=100).map(|k| {
                    let t = k as f64 * dt;
                    row(k, t, (-t).exp(), (-t).exp())
                }).collect(),
            };
            let rep = energy_law_audit(&led).unwrap();
            assert!(rep.max_abs < dt, "{}", rep.max_abs);
            assert!(rep.max_positive < 1e-15, "backward difference of a convex decay undershoots");
            assert!((rep.max_abs / (0.5 * dt) - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn constant_ledger_is_balanced() {
        let led = Ledger { rows: (0..5).map(|k| row(k, k as f64, 0.0, 0.0)).collect() };
        let rep = l4_identity_audit(&led).unwrap();
        assert_eq!(rep.max_abs, 0.0);
        assert_eq!(rep.residuals.len(), 4);
    }

    #[test]
    fn short_ledger_is_rejected() {
        assert!(energy_law_audit(&Ledger { rows: vec![row(0, 0.0, 0.0, 0.0)] }).is_err());
    }
}
