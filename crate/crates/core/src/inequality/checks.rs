//! Discrete evaluations of the functional inequalities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::hessian_sq;
use crate::error::{Error, Result};
use crate::field_core::ops::{integrate_values, lap};
use crate::field_core::spectral::spectral_derivative;
use crate::field_core::{h1_semi_sq_values, l2_sq_values, DirectorField, GridSpec, VectorField2};

use std::f64::consts::PI;

use super::ensemble::{bump_profile, Generator, SampleEnsemble};

/// `||v||_4^4 / (||grad v||^2 ||v||^2)` for a vector field; `None` for `v = 0`.
pub fn ladyzhenskaya_ratio(v: &VectorField2) -> Option<f64> {
    let g = v.grid();
    let (u, w) = (v.u(), v.w());
    let l2 = l2_sq_values(g, u) + l2_sq_values(g, w);
    let h1 = h1_semi_sq_values(g, u) + h1_semi_sq_values(g, w);
    if !(l2 > 0.0 && h1 > 0.0) {
        return None;
    }
    let q: Vec<f64> = u.iter().zip(w).map(|(a, b)| (a * a + b * b).powi(2)).collect();
    Some(integrate_values(g, &q) / (h1 * l2))
}

/// Grid slack `c_h = 0.01 (128/n)^2`, so the contract is 2.02 at 128 cells
/// and 2.005 at 256.
pub fn ladyzhenskaya_slack(n: usize) -> f64 {
    0.01 * (128.0 / n as f64).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadyzhenskayaReport {
    pub cells: usize,
    pub samples: usize,
    pub worst_ratio: f64,
    pub worst_sample: usize,
    pub mean_ratio: f64,
    pub slack: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Worst Ladyzhenskaya ratio over vector samples built from pairs of
/// scalar samples `(2i, 2i+1)`.
pub fn ladyzhenskaya_check(ens: &SampleEnsemble) -> Result<LadyzhenskayaReport> {
    ens.validate()?;
    let doubled = SampleEnsemble { count: 2 * ens.count, ..*ens };
    let ratios = (0..ens.count)
        .into_par_iter()
        .map(|i| {
            let v = VectorField2::new(ens.grid, doubled.scalar(2 * i)?, doubled.scalar(2 * i + 1)?)?;
            ladyzhenskaya_ratio(&v).ok_or_else(|| Error::Diagnostic(format!("sample {i} is zero")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (worst_sample, worst_ratio) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, r)| if r > b.1 { (i, r) } else { b });
    let n = ens.grid.nx.min(ens.grid.ny);
    let slack = ladyzhenskaya_slack(n);
    let bound = 2.0 * (1.0 + slack);
    Ok(LadyzhenskayaReport {
        cells: n,
        samples: ratios.len(),
        worst_ratio,
        worst_sample,
        mean_ratio: ratios.iter().sum::<f64>() / ratios.len() as f64,
        slack,
        bound,
        passed: worst_ratio <= bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackDecay {
    pub cells: Vec<usize>,
    /// `max_i |ratio_i(n) - ratio_i(finest)|` for every grid but the finest.
    pub deviations: Vec<f64>,
    /// `log2` of successive deviation ratios.
    pub orders: Vec<f64>,
}

/// Evaluates the same band-limited samples on successively refined boxes of
/// side `side` and measures how fast the discrete ratios settle.
pub fn ladyzhenskaya_slack_decay(side: f64, cells: &[usize], count: usize, seed: u64) -> Result<SlackDecay> {
    if cells.len() < 3 || cells.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::param("cells", "at least three successively doubled grids", format!("{cells:?}")));
    }
    // Band limit of the coarsest grid keeps the samples identical across grids.
    let modes = cells[0] / 4;
    let per_grid = cells
        .iter()
        .map(|&n| {
            let g = GridSpec::dirichlet_box(side, side, n, n)?;
            let ens = SampleEnsemble { generator: Generator::TrigPolynomial { max_mode: modes }, count: 2 * count, seed, grid: g };
            (0..count)
                .into_par_iter()
                .map(|i| {
                    let v = VectorField2::new(g, ens.scalar(2 * i)?, ens.scalar(2 * i + 1)?)?;
                    ladyzhenskaya_ratio(&v).ok_or_else(|| Error::Diagnostic(format!("sample {i} is zero")))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let fine = &per_grid[per_grid.len() - 1];
    let deviations: Vec<f64> = per_grid[..per_grid.len() - 1]
        .iter()
        .map(|r| r.iter().zip(fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .collect();
    let orders = deviations.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(SlackDecay { cells: cells.to_vec(), deviations, orders })
}

/// `(||v||_inf^2 / (||v||_H2 ||v||_2), ||v||_4^2 / (||v||_H1 ||v||_2))` with
/// finite-difference norms; `None` for `v = 0`.
pub fn eng_ratios(g: &GridSpec, v: &[f64]) -> Option<(f64, f64)> {
    let l2 = l2_sq_values(g, v);
    if !(l2 > 0.0) {
        return None;
    }
    let h1 = l2 + h1_semi_sq_values(g, v);
    let h2 = h1 + integrate_values(g, &hessian_sq(g, v));
    let linf = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let l4 = integrate_values(g, &v.iter().map(|x| x.powi(4)).collect::<Vec<_>>()).sqrt();
    Some((linf * linf / (h2.sqrt() * l2.sqrt()), l4 / (h1.sqrt() * l2.sqrt())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngEstimate {
    pub side: f64,
    pub cells: usize,
    pub samples: usize,
    /// Largest `||v||_inf^2 / (||v||_H2 ||v||_2)`.
    pub c1_linf: f64,
    /// Largest `||v||_4^2 / (||v||_H1 ||v||_2)`.
    pub c1_l4: f64,
    /// `max(c1_linf, c1_l4)`.
    pub c1: f64,
}

/// Empirical interpolation constants over the union of the given ensembles,
/// which must share one grid.
pub fn eng_interpolation_check(ensembles: &[SampleEnsemble]) -> Result<EngEstimate> {
    let g = ensembles.first().ok_or_else(|| Error::Config("no ensembles".into()))?.grid;
    let mut est = EngEstimate { side: g.lx, cells: g.nx, samples: 0, c1_linf: 0.0, c1_l4: 0.0, c1: 0.0 };
    for ens in ensembles {
        ens.validate()?;
        g.check_same(&ens.grid, "interpolation ensembles")?;
        let r = (0..ens.count)
            .into_par_iter()
            .map(|i| {
                let v = ens.scalar(i)?;
                eng_ratios(&g, &v).ok_or_else(|| Error::Diagnostic(format!("sample {i} is zero")))
            })
            .collect::<Result<Vec<_>>>()?;
        est.samples += r.len();
        for (a, b) in r {
            est.c1_linf = est.c1_linf.max(a);
            est.c1_l4 = est.c1_l4.max(b);
        }
    }
    est.c1 = est.c1_linf.max(est.c1_l4);
    Ok(est)
}

/// Default interpolation ensemble on a box: localized bumps whose radii do
/// not depend on the box size, plus band-limited sine series.
pub fn eng_ensembles(g: GridSpec, count: usize, seed: u64) -> Vec<SampleEnsemble> {
    let (r_min, r_max) = (PI / 8.0, 0.45 * PI);
    vec![
        SampleEnsemble { generator: Generator::Localized { r_min, r_max }, count, seed, grid: g },
        SampleEnsemble { generator: Generator::RandomBandLimited, count, seed: seed.wrapping_add(1), grid: g },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngReport {
    /// Same box, refined grids.
    pub refinement: Vec<EngEstimate>,
    /// Successive `c1` ratios under refinement.
    pub refinement_ratios: Vec<f64>,
    pub refinement_stable: bool,
    /// Growing boxes at a fixed spacing.
    pub domains: Vec<EngEstimate>,
    /// `max c1 / min c1` over the domains.
    pub domain_spread: f64,
    pub domain_independent: bool,
    /// Calibrated constant exported to the simulation monitors.
    pub c1: f64,
}

/// Refinement study on the box of side `side` over `cells`, then a domain
/// study over `sides` at the spacing of the middle refinement grid.
pub fn eng_study(side: f64, cells: &[usize], sides: &[f64], count: usize, seed: u64) -> Result<EngReport> {
    let mut refinement = Vec::new();
    for &n in cells {
        let g = GridSpec::dirichlet_box(side, side, n, n)?;
        refinement.push(eng_interpolation_check(&eng_ensembles(g, count, seed))?);
    }
    let refinement_ratios: Vec<f64> = refinement.windows(2).map(|w| w[1].c1 / w[0].c1).collect();
    let h = side / cells[cells.len() / 2] as f64;
    let mut domains = Vec::new();
    for &l in sides {
        let n = (l / h).round() as usize;
        let g = GridSpec::dirichlet_box(l, l, n, n)?;
        domains.push(eng_interpolation_check(&eng_ensembles(g, count, seed))?);
    }
    let (lo, hi) = domains.iter().fold((f64::INFINITY, 0.0f64), |(a, b), e| (a.min(e.c1), b.max(e.c1)));
    let c1 = refinement.iter().chain(&domains).map(|e| e.c1).fold(0.0, f64::max);
    Ok(EngReport {
        refinement_stable: refinement_ratios.iter().all(|r| (0.8..=1.25).contains(r)),
        refinement_ratios,
        domain_spread: hi / lo,
        domain_independent: hi / lo <= 1.25,
        domains,
        refinement,
        c1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticComponent {
    /// `||grad^2 d_j||`.
    pub lhs: f64,
    /// `2 ||lap d_j|| + 6 ||grad^2 d0_j||`.
    pub rhs: f64,
    /// `lhs - rhs`; the estimate holds when this is `<= 0`.
    pub margin: f64,
    /// `||grad^2 d_j|| - ||lap d_j||`, zero on the torus by Parseval.
    pub hessian_minus_laplacian: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticReport {
    pub components: [EllipticComponent; 2],
    /// True on the torus, where the estimate is provable and asserted.
    pub asserted: bool,
    pub holds: bool,
}

/// `(||grad^2 f||, ||lap f||)`: spectral on the torus, finite differences on boxes.
fn second_order_norms(g: &GridSpec, f: &[f64]) -> Result<(f64, f64)> {
    if g.is_periodic() {
        let fxx = spectral_derivative(g, f, 2, 0)?;
        let fyy = spectral_derivative(g, f, 0, 2)?;
        let fxy = spectral_derivative(g, f, 1, 1)?;
        let hs: Vec<f64> = (0..f.len()).map(|k| fxx[k].powi(2) + 2.0 * fxy[k].powi(2) + fyy[k].powi(2)).collect();
        let ls: Vec<f64> = (0..f.len()).map(|k| (fxx[k] + fyy[k]).powi(2)).collect();
        Ok((integrate_values(g, &hs).sqrt(), integrate_values(g, &ls).sqrt()))
    } else {
        let l = lap(g, f);
        Ok((integrate_values(g, &hessian_sq(g, f)).sqrt(), l2_sq_values(g, &l).sqrt()))
    }
}

/// Both sides of `||grad^2 d_j|| <= 2 ||lap d_j|| + 6 ||grad^2 d0_j||` per component.
pub fn elliptic_estimate_monitor(d: &DirectorField, d0: &DirectorField) -> Result<EllipticReport> {
    let g = d.grid();
    g.check_same(d0.grid(), "elliptic monitor")?;
    let mut comps = [EllipticComponent { lhs: 0.0, rhs: 0.0, margin: 0.0, hessian_minus_laplacian: 0.0 }; 2];
    for (j, (c, c0)) in [(d.d1(), d0.d1()), (d.d2(), d0.d2())].into_iter().enumerate() {
        let (hess, lp) = second_order_norms(g, c)?;
        let (hess0, _) = second_order_norms(g, c0)?;
        let rhs = 2.0 * lp + 6.0 * hess0;
        comps[j] = EllipticComponent { lhs: hess, rhs, margin: hess - rhs, hessian_minus_laplacian: hess - lp };
    }
    Ok(EllipticReport {
        components: comps,
        asserted: g.is_periodic(),
        holds: comps.iter().all(|c| c.margin <= 0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigiditySample {
    /// `int |grad d|^4`.
    pub grad_l4_pow4: f64,
    /// `int |lap d|^2`.
    pub lap_sq: f64,
    /// `int |lap d + |grad d|^2 d|^2`.
    pub tension_sq: f64,
    /// `grad_l4_pow4 / lap_sq`.
    pub rho4: f64,
    /// `tension_sq / (lap_sq + grad_l4_pow4)`.
    pub coercivity: f64,
}

impl RigiditySample {
    fn from_parts(grad_l4_pow4: f64, lap_sq: f64, tension_sq: f64) -> Option<Self> {
        (lap_sq > 0.0).then(|| RigiditySample {
            grad_l4_pow4,
            lap_sq,
            tension_sq,
            rho4: grad_l4_pow4 / lap_sq,
            coercivity: tension_sq / (lap_sq + grad_l4_pow4),
        })
    }
}

/// Spectral evaluation of the rigidity quantities for a director on the torus;
/// `None` for a constant director.
pub fn rigidity_sample(d: &DirectorField) -> Result<Option<RigiditySample>> {
    let g = d.grid();
    let n = g.node_count();
    let mut e = vec![0.0; n];
    let mut lap_sq = vec![0.0; n];
    let mut tens = [vec![0.0; n], vec![0.0; n]];
    let mut laps = Vec::new();
    for c in [d.d1(), d.d2()] {
        let cx = spectral_derivative(g, c, 1, 0)?;
        let cy = spectral_derivative(g, c, 0, 1)?;
        let l: Vec<f64> = spectral_derivative(g, c, 2, 0)?.iter().zip(spectral_derivative(g, c, 0, 2)?).map(|(a, b)| a + b).collect();
        for k in 0..n {
            e[k] += cx[k] * cx[k] + cy[k] * cy[k];
            lap_sq[k] += l[k] * l[k];
        }
        laps.push(l);
    }
    for k in 0..n {
        let (d1, d2) = (d.d1()[k], d.d2()[k]);
        tens[0][k] = laps[0][k] + e[k] * d1;
        tens[1][k] = laps[1][k] + e[k] * d2;
    }
    let e2: Vec<f64> = e.iter().map(|x| x * x).collect();
    let t = l2_sq_values(g, &tens[0]) + l2_sq_values(g, &tens[1]);
    Ok(RigiditySample::from_parts(integrate_values(g, &e2), integrate_values(g, &lap_sq), t))
}

/// Angle-space oracle: with `d = (sin phi, cos phi)`, `|grad d|^2 = |grad phi|^2`
/// and `|lap d|^2 = (lap phi)^2 + |grad phi|^4`, so the tension norm is
/// `int (lap phi)^2`. Takes nodal `phi_x`, `phi_y`, `lap phi`.
pub fn rigidity_oracle(g: &GridSpec, phi_x: &[f64], phi_y: &[f64], phi_lap: &[f64]) -> Option<RigiditySample> {
    let e2: Vec<f64> = phi_x.iter().zip(phi_y).map(|(a, b)| (a * a + b * b).powi(2)).collect();
    let l2: Vec<f64> = phi_lap.iter().map(|x| x * x).collect();
    let g4 = integrate_values(g, &e2);
    let ll = integrate_values(g, &l2);
    RigiditySample::from_parts(g4, ll + g4, ll)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub d2_min: f64,
    pub samples: usize,
    pub max_rho4: f64,
    /// Smallest tension-coercivity ratio over the ensemble.
    pub min_coercivity: f64,
    /// `1 - max rho4`, the largest rigidity constant consistent with the ensemble.
    pub varpi0: f64,
    /// `min coercivity >= varpi0 / 2`.
    pub coercive_bound_holds: bool,
    /// Largest relative disagreement with the angle-space oracle.
    pub oracle_error: f64,
}

/// Rigidity and coercivity over an angle-director ensemble on the torus.
pub fn rigidity_check(ens: &SampleEnsemble) -> Result<RigidityReport> {
    ens.validate()?;
    let Generator::AngleDirector { d2_min } = ens.generator else {
        return Err(Error::Config("rigidity needs an angle-director ensemble".into()));
    };
    let g = ens.grid;
    let out = (0..ens.count)
        .into_par_iter()
        .map(|i| {
            let (phi, d) = ens.director(i)?;
            let s = rigidity_sample(&d)?;
            let px = spectral_derivative(&g, &phi, 1, 0)?;
            let py = spectral_derivative(&g, &phi, 0, 1)?;
            let pl: Vec<f64> = spectral_derivative(&g, &phi, 2, 0)?.iter().zip(spectral_derivative(&g, &phi, 0, 2)?).map(|(a, b)| a + b).collect();
            let o = rigidity_oracle(&g, &px, &py, &pl);
            Ok(match (s, o) {
                (Some(s), Some(o)) => Some((s, rigidity_disagreement(&s, &o))),
                _ => None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let kept: Vec<(RigiditySample, f64)> = out.into_iter().flatten().collect();
    if kept.is_empty() {
        return Err(Error::Diagnostic("every rigidity sample was degenerate".into()));
    }
    let max_rho4 = kept.iter().map(|(s, _)| s.rho4).fold(0.0, f64::max);
    let min_coercivity = kept.iter().map(|(s, _)| s.coercivity).fold(f64::INFINITY, f64::min);
    let varpi0 = 1.0 - max_rho4;
    Ok(RigidityReport {
        d2_min,
        samples: kept.len(),
        max_rho4,
        min_coercivity,
        varpi0,
        coercive_bound_holds: min_coercivity >= 0.5 * varpi0,
        oracle_error: kept.iter().map(|(_, e)| *e).fold(0.0, f64::max),
    })
}

/// Director and oracle evaluations for `phi = 0.3 sin x b(y)` on the
/// `2 pi` torus, `b` a bump of radius `pi` centered at `y = pi`, with analytic derivatives.
pub fn angle_oracle_example(n: usize) -> Result<(RigiditySample, RigiditySample)> {
    let g = GridSpec::torus(2.0 * PI, 2.0 * PI, n, n)?;
    let (c, r) = (PI, PI);
    let nn = g.node_count();
    let (mut phi, mut px, mut py, mut pl) = (vec![0.0; nn], vec![0.0; nn], vec![0.0; nn], vec![0.0; nn]);
    for k in 0..nn {
        let (i, j) = g.ij(k);
        let (x, y) = g.coords(i, j);
        let (b, b1, b2) = bump_profile((y - c) / r);
        phi[k] = 0.3 * x.sin() * b;
        px[k] = 0.3 * x.cos() * b;
        py[k] = 0.3 * x.sin() * b1 / r;
        pl[k] = 0.3 * x.sin() * (-b + b2 / (r * r));
    }
    let d = DirectorField::new(g, phi.iter().map(|p| p.sin()).collect(), phi.iter().map(|p| p.cos()).collect())?;
    let degenerate = || Error::Diagnostic("oracle example degenerated".into());
    Ok((rigidity_sample(&d)?.ok_or_else(degenerate)?, rigidity_oracle(&g, &px, &py, &pl).ok_or_else(degenerate)?))
}

/// Largest relative disagreement between two rigidity evaluations.
pub fn rigidity_disagreement(a: &RigiditySample, b: &RigiditySample) -> f64 {
    let rel = |x: f64, y: f64| ((x - y) / y.abs().max(1e-300)).abs();
    rel(a.rho4, b.rho4).max(rel(a.coercivity, b.coercivity))
}
