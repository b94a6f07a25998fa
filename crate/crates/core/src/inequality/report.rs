//! Suite driver and the JSON report.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::director::{director_step, PicardConfig};
use crate::error::{Error, Result};
use crate::field_core::{DirectorField, GridSpec, VectorField2};

use super::checks::{
    angle_oracle_example, elliptic_estimate_monitor, eng_study, ladyzhenskaya_check, ladyzhenskaya_slack_decay,
    rigidity_check, rigidity_disagreement, EllipticReport, EngReport, LadyzhenskayaReport, RigidityReport, SlackDecay,
};
use super::ensemble::{Generator, SampleEnsemble};

/// Largest relative change of the elliptic margin under `h/2`.
pub const ELLIPTIC_REFINEMENT_TOL: f64 = 0.05;
/// Agreement required between the director evaluation and the angle oracle.
pub const ORACLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Ladyzhenskaya,
    Eng,
    Elliptic,
    Rigidity,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    /// Cells per side for the Ladyzhenskaya ensemble.
    pub cells: usize,
    pub samples: usize,
    pub rigidity_samples: usize,
    pub eng_samples: usize,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { cells: 128, samples: 200, rigidity_samples: 500, eng_samples: 100, seed: 2024 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticStudy {
    pub coarse: EllipticReport,
    pub fine: EllipticReport,
    /// Largest relative margin change between the two grids.
    pub relative_change: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InequalityReport {
    pub options: Option<SuiteOptions>,
    pub ladyzhenskaya: Option<LadyzhenskayaReport>,
    pub slack_decay: Option<SlackDecay>,
    pub eng: Option<EngReport>,
    pub elliptic: Option<EllipticStudy>,
    pub rigidity: Vec<RigidityReport>,
    /// Relative disagreement on the closed-form angle example.
    pub oracle_example_error: Option<f64>,
    /// Every asserted check passed.
    pub passed: bool,
    /// Names of failed assertions.
    pub failures: Vec<String>,
}

impl InequalityReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

fn elliptic_case(n: usize) -> Result<EllipticReport> {
    let g = GridSpec::torus(2.0 * PI, 2.0 * PI, n, n)?;
    let d0 = DirectorField::from_angle(g, |x, y| 0.5 * x.sin() * (2.0 * y).cos() + 0.2 * (x + y).cos());
    let mut d = d0.clone();
    let v = VectorField2::zeros(g);
    let cfg = PicardConfig::new(1.0);
    for _ in 0..20 {
        d = director_step(&d, &v, &cfg, 5e-3)?.d;
    }
    elliptic_estimate_monitor(&d, &d0)
}

/// Runs the requested suite.
pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<InequalityReport> {
    if opts.samples == 0 || opts.rigidity_samples == 0 || opts.eng_samples == 0 {
        return Err(Error::param("samples", ">= 1", 0));
    }
    let all = suite == Suite::All;
    let mut rep = InequalityReport { options: Some(*opts), ..Default::default() };
    if all || suite == Suite::Ladyzhenskaya {
        let g = GridSpec::dirichlet_box(PI, PI, opts.cells, opts.cells)?;
        let ens = SampleEnsemble { generator: Generator::RandomBandLimited, count: opts.samples, seed: opts.seed, grid: g };
        let l = ladyzhenskaya_check(&ens)?;
        if !l.passed {
            rep.failures.push(format!("ladyzhenskaya: worst ratio {} above {}", l.worst_ratio, l.bound));
        }
        rep.ladyzhenskaya = Some(l);
        rep.slack_decay = Some(ladyzhenskaya_slack_decay(PI, &[32, 64, 128], opts.samples.min(50), opts.seed)?);
    }
    if all || suite == Suite::Eng {
        let e = eng_study(PI, &[32, 64, 128], &[PI, 2.0 * PI, 4.0 * PI], opts.eng_samples, opts.seed)?;
        if !e.refinement_stable {
            rep.failures.push(format!("eng: refinement ratios {:?} outside [0.8, 1.25]", e.refinement_ratios));
        }
        if !e.domain_independent {
            rep.failures.push(format!("eng: domain spread {} above 1.25", e.domain_spread));
        }
        rep.eng = Some(e);
    }
    if all || suite == Suite::Elliptic {
        let (coarse, fine) = (elliptic_case(32)?, elliptic_case(64)?);
        let relative_change = coarse
            .components
            .iter()
            .zip(&fine.components)
            .map(|(a, b)| ((a.margin - b.margin) / b.margin.abs().max(1e-300)).abs())
            .fold(0.0, f64::max);
        let stable = relative_change <= ELLIPTIC_REFINEMENT_TOL;
        if !(coarse.holds && fine.holds) {
            rep.failures.push("elliptic: torus estimate violated".into());
        }
        if !stable {
            rep.failures.push(format!("elliptic: margin changed by {relative_change} under refinement"));
        }
        rep.elliptic = Some(EllipticStudy { coarse, fine, relative_change, stable });
    }
    if all || suite == Suite::Rigidity {
        let g = GridSpec::torus(2.0 * PI, 2.0 * PI, 128, 128)?;
        for d2_min in [0.1, 0.5, 0.9] {
            let ens = SampleEnsemble { generator: Generator::AngleDirector { d2_min }, count: opts.rigidity_samples, seed: opts.seed, grid: g };
            let r = rigidity_check(&ens)?;
            if !(r.min_coercivity > 0.0) || r.max_rho4 > 1.0 || r.oracle_error > ORACLE_TOL {
                rep.failures.push(format!(
                    "rigidity at d2_min = {d2_min}: coercivity {}, rho4 {}, oracle error {}",
                    r.min_coercivity, r.max_rho4, r.oracle_error
                ));
            }
            rep.rigidity.push(r);
        }
        let (s, o) = angle_oracle_example(256)?;
        let err = rigidity_disagreement(&s, &o);
        if err > ORACLE_TOL {
            rep.failures.push(format!("rigidity: oracle disagreement {err}"));
        }
        rep.oracle_example_error = Some(err);
    }
    rep.passed = rep.failures.is_empty();
    Ok(rep)
}
