//! Stage continuation and expanding-ball sequences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_core::GridSpec;
use crate::galerkin::build_basis;

use super::ledger::Ledger;
use super::run::{run, run_with_basis, OutputSpec};
use super::scenario::{Mode, ScenarioSpec, Stage};

/// End-of-run values of the uniformity columns for one stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub eps: f64,
    pub delta: f64,
    pub n_modes: usize,
    pub eps_grad_rho_qt: f64,
    pub delta_rho_qt: f64,
    pub energy_final: f64,
    pub energy_max: f64,
    pub rho_min: f64,
    pub rho_max: f64,
}

impl StageSummary {
    fn from_ledger(st: &Stage, led: &Ledger) -> Self {
        let last = led.last().copied().unwrap_or_default();
        StageSummary {
            eps: st.eps,
            delta: st.delta,
            n_modes: st.n_modes,
            eps_grad_rho_qt: last.eps_grad_rho_qt,
            delta_rho_qt: last.delta_rho_qt,
            energy_final: last.energy,
            energy_max: led.rows.iter().map(|r| r.energy).fold(f64::NEG_INFINITY, f64::max),
            rho_min: led.rows.iter().map(|r| r.rho_min).fold(f64::INFINITY, f64::min),
            rho_max: led.rows.iter().map(|r| r.rho_max).fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub stages: Vec<StageSummary>,
    /// `max_t |E_k(t) - E_k+1(t)|` for consecutive stages.
    pub trace_differences: Vec<f64>,
    /// Every stage keeps `sqrt(eps) ||grad rho||_(L2(Q_T))` within `slack` times stage 0.
    pub eps_column_bounded: bool,
    /// Every stage keeps `delta^(1/q) ||rho||_(L^q(Q_T))` within `slack` times stage 0.
    pub delta_column_bounded: bool,
    /// Consecutive trace differences strictly decrease.
    pub traces_converging: bool,
    pub slack: f64,
    #[serde(skip)]
    pub ledgers: Vec<Ledger>,
}

/// Largest pointwise gap between two energy traces sampled at the same times.
pub fn trace_difference(a: &Ledger, b: &Ledger) -> Result<f64> {
    if a.rows.len() != b.rows.len() {
        return Err(Error::Diagnostic(format!(
            "traces have different lengths ({} vs {})",
            a.rows.len(),
            b.rows.len()
        )));
    }
    Ok(a.rows.iter().zip(&b.rows).map(|(x, y)| (x.energy - y.energy).abs()).fold(0.0, f64::max))
}

fn strictly_decreasing(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[1] < w[0])
}

fn sub_output(out: Option<&OutputSpec>, prefix: &str, k: usize) -> Option<OutputSpec> {
    out.map(|o| OutputSpec { dir: o.dir.join(format!("{prefix}_{k}")), snap_every: o.snap_every })
}

/// Runs the same initial data through every stage in `spec.continuation`.
/// With `out`, stage `k` writes its files under `stage_k/`.
pub fn continuation_run(spec: &ScenarioSpec, out: Option<&OutputSpec>) -> Result<ContinuationReport> {
    const SLACK: f64 = 2.0;
    spec.validate()?;
    if spec.continuation.is_empty() {
        return Err(Error::Config("continuation run needs at least one stage".into()));
    }
    let ledgers = spec
        .continuation
        .par_iter()
        .enumerate()
        .map(|(k, st)| run(&spec.with_stage(st), sub_output(out, "stage", k).as_ref()).map(|o| o.ledger))
        .collect::<Result<Vec<_>>>()?;
    let stages: Vec<StageSummary> = spec.continuation.iter().zip(&ledgers).map(|(s, l)| StageSummary::from_ledger(s, l)).collect();
    let trace_differences = ledgers.windows(2).map(|w| trace_difference(&w[0], &w[1])).collect::<Result<Vec<_>>>()?;
    let s0 = stages[0];
    let bounded = |f: fn(&StageSummary) -> f64| stages.iter().all(|s| f(s) <= SLACK * f(&s0));
    Ok(ContinuationReport {
        eps_column_bounded: bounded(|s| s.eps_grad_rho_qt),
        delta_column_bounded: bounded(|s| s.delta_rho_qt),
        traces_converging: strictly_decreasing(&trace_differences),
        trace_differences,
        stages,
        slack: SLACK,
        ledgers,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSummary {
    pub radius: f64,
    pub n_modes: usize,
    pub box_cells: usize,
    pub energy_final: f64,
    pub d2_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandingBallReport {
    pub balls: Vec<BallSummary>,
    /// `max_t |E_R_k(t) - E_R_k+1(t)|`.
    pub cauchy_differences: Vec<f64>,
    pub differences_decreasing: bool,
    /// Initial `min d2`.
    pub d2_initial_min: f64,
    /// Smallest `d2` over all radii and steps.
    pub d2_min: f64,
    /// `d2 >= d2_initial_min / 2` throughout.
    pub angle_condition: bool,
    #[serde(skip)]
    pub ledgers: Vec<Ledger>,
}

/// Mode count for radius `r`: the base count scaled with the box area, so the
/// spectral cutoff stays fixed as the box grows.
pub fn modes_for_radius(base: usize, r0: f64, r: f64) -> usize {
    (base as f64 * (r / r0).powi(2)).round() as usize
}

/// Box grid of side `2r` centered in the torus, and its node offset.
pub fn ball_box(torus: &GridSpec, r: f64) -> Result<(GridSpec, (usize, usize))> {
    let cells = |side: f64, h: f64| {
        let c = side / h;
        if (c - c.round()).abs() > 1e-9 {
            Err(Error::Config(format!("ball side {side} is not a whole number of cells of size {h}")))
        } else {
            Ok(c.round() as usize)
        }
    };
    let (hx, hy) = (torus.hx(), torus.hy());
    let (cx, cy) = (cells(2.0 * r, hx)?, cells(2.0 * r, hy)?);
    let (ox, oy) = (cells(0.5 * torus.lx - r, hx)?, cells(0.5 * torus.ly - r, hy)?);
    Ok((GridSpec::dirichlet_box(2.0 * r, 2.0 * r, cx, cy)?, (ox, oy)))
}

/// Runs momentum and density on boxes of the given radii inside the torus,
/// director on the whole torus, and compares energy traces across radii.
/// With `out`, radius `k` writes its files under `radius_k/`.
pub fn expanding_ball_run(spec: &ScenarioSpec, out: Option<&OutputSpec>) -> Result<ExpandingBallReport> {
    spec.validate()?;
    if spec.mode != Mode::CauchyExpandingBalls {
        return Err(Error::param("mode", "cauchy-expanding-balls", format!("{:?}", spec.mode)));
    }
    let radii = &spec.expanding_radii;
    let r0 = radii[0];
    let ledgers = radii
        .par_iter()
        .enumerate()
        .map(|(k, &r)| {
            let (bx, off) = ball_box(&spec.domain, r)?;
            let n = modes_for_radius(spec.scheme.n_modes, r0, r);
            let basis = build_basis(&bx, &spec.phys, n)?.embed(&spec.domain, off)?;
            let mut s = spec.clone();
            s.scheme.n_modes = n;
            run_with_basis(&s, basis, sub_output(out, "radius", k).as_ref()).map(|o| (r, n, bx.nx, o.ledger))
        })
        .collect::<Result<Vec<_>>>()?;
    let cauchy_differences = ledgers.windows(2).map(|w| trace_difference(&w[0].3, &w[1].3)).collect::<Result<Vec<_>>>()?;
    let d2_initial_min = ledgers[0].3.rows[0].d2_min;
    let d2_min = ledgers.iter().flat_map(|l| l.3.rows.iter().map(|r| r.d2_min)).fold(f64::INFINITY, f64::min);
    let balls = ledgers
        .iter()
        .map(|(r, n, c, l)| BallSummary {
            radius: *r,
            n_modes: *n,
            box_cells: *c,
            energy_final: l.last().map(|x| x.energy).unwrap_or(0.0),
            d2_min: l.rows.iter().map(|x| x.d2_min).fold(f64::INFINITY, f64::min),
        })
        .collect();
    Ok(ExpandingBallReport {
        balls,
        differences_decreasing: strictly_decreasing(&cauchy_differences),
        cauchy_differences,
        d2_initial_min,
        d2_min,
        angle_condition: d2_min >= 0.5 * d2_initial_min,
        ledgers: ledgers.into_iter().map(|x| x.3).collect(),
    })
}
