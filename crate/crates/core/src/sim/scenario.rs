//! Declarative run descriptions and the shipped presets.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::density::DensityScheme;
use crate::director::PicardConfig;
use crate::energy::{PhysParams, SchemeParams};
use crate::error::{Error, Result};
use crate::field_core::{DirectorField, DomainKind, GridSpec, ScalarField, VectorField2};
use crate::galerkin::MomentumConfig;

/// Approximation level being simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `eps > 0`, `delta >= 0`.
    #[default]
    ThirdApprox,
    /// `eps = 0`, `delta > 0`.
    DeltaLevel,
    /// `eps = delta = 0`.
    GammaLevel,
    /// Momentum and density on boxes of growing radius inside a large torus.
    CauchyExpandingBalls,
}

/// Named initial-data generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    /// `rho = rho0`, `v = 0`, `d = e2`.
    Equilibrium { rho: f64 },
    /// Seeded sums of low trigonometric harmonics; velocity and director
    /// perturbations vanish on box walls.
    Smooth {
        rho_mean: f64,
        rho_amp: f64,
        v_amp: f64,
        /// Peak director angle in radians.
        d_amp: f64,
        harmonics: usize,
    },
    /// Smooth bump of the given radius: density excess, swirl and director
    /// tilt all supported in the disk.
    Bump {
        #[serde(default)]
        center: Option<[f64; 2]>,
        radius: f64,
        rho_base: f64,
        rho_amp: f64,
        v_amp: f64,
        d_amp: f64,
    },
}

/// Director sub-solver settings (`theta` comes from the physical parameters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DirectorOptions {
    pub max_iters: usize,
    pub contraction_tol: f64,
    pub renormalize: bool,
    pub shifted: bool,
}

impl Default for DirectorOptions {
    fn default() -> Self {
        let p = PicardConfig::new(1.0);
        DirectorOptions {
            max_iters: p.max_iters,
            contraction_tol: p.contraction_tol,
            renormalize: p.renormalize,
            shifted: p.shifted,
        }
    }
}

impl DirectorOptions {
    pub fn picard(&self, theta: f64) -> PicardConfig {
        PicardConfig {
            max_iters: self.max_iters,
            contraction_tol: self.contraction_tol,
            renormalize: self.renormalize,
            theta,
            shifted: self.shifted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub density_scheme: DensityScheme,
    pub density_tol: f64,
    pub director: DirectorOptions,
    pub momentum: MomentumConfig,
    /// Keep `rho` and `v` at their initial values and evolve only `d`.
    pub freeze_flow: bool,
    /// Extra sweeps of the density, director, momentum triple with the new
    /// velocity; 0 disables the outer loop.
    pub outer_iters: usize,
    pub outer_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            density_scheme: DensityScheme::default(),
            density_tol: 1e-12,
            director: DirectorOptions::default(),
            momentum: MomentumConfig::default(),
            freeze_flow: false,
            outer_iters: 0,
            outer_tol: 1e-8,
        }
    }
}

/// Constants used only for monitored ledger columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorOptions {
    /// Interpolation constant in the a priori bounds, usually from `calibrate`.
    pub c1: f64,
    /// Integrability gain in `delta^(1/(beta+q)) ||rho||_(beta+q)`; defaults to `(gamma-1)/2`.
    pub theta_prime: Option<f64>,
    /// Evaluate the coefficient time derivative every step.
    pub dvdt: bool,
}

impl Default for MonitorOptions {
    fn default() -> Self {
        MonitorOptions {
            c1: 1.0,
            theta_prime: None,
            dvdt: true,
        }
    }
}

/// One continuation stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub eps: f64,
    pub delta: f64,
    pub n_modes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default)]
    pub mode: Mode,
    pub domain: GridSpec,
    #[serde(default)]
    pub phys: PhysParams,
    pub scheme: SchemeParams,
    pub initial: InitialData,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub monitor: MonitorOptions,
    #[serde(default)]
    pub continuation: Vec<Stage>,
    #[serde(default)]
    pub expanding_radii: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

/// Fields at one time level.
#[derive(Debug, Clone)]
pub struct InitialFields {
    pub rho: ScalarField,
    pub v: VectorField2,
    pub d: DirectorField,
}

fn bump(r: f64, radius: f64) -> f64 {
    let s = r / radius;
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Random trigonometric sum normalized to `max |S| <= 1`.
struct TrigSum {
    terms: Vec<(f64, f64, f64, f64)>,
}

impl TrigSum {
    fn new(rng: &mut ChaCha8Rng, harmonics: usize, g: &GridSpec) -> Self {
        let (cx, cy) = (2.0 * PI / g.lx, 2.0 * PI / g.ly);
        let mut terms = Vec::new();
        let mut total = 0.0;
        for kx in 0..=harmonics as i64 {
            for ky in -(harmonics as i64)..=harmonics as i64 {
                if (kx == 0 && ky <= 0) || kx.abs().max(ky.abs()) > harmonics as i64 {
                    continue;
                }
                let a: f64 = rng.random_range(-1.0..1.0);
                let ph: f64 = rng.random_range(0.0..2.0 * PI);
                total += a.abs();
                terms.push((a, cx * kx as f64, cy * ky as f64, ph));
            }
        }
        let norm = if total > 0.0 { total } else { 1.0 };
        for t in terms.iter_mut() {
            t.0 /= norm;
        }
        TrigSum { terms }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms.iter().map(|(a, kx, ky, ph)| a * (kx * x + ky * y + ph).cos()).sum()
    }
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        let pos = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(key, "> 0", v))
            }
        };
        match *self {
            InitialData::Equilibrium { rho } => pos("initial.rho", rho),
            InitialData::Smooth { rho_mean, rho_amp, v_amp, d_amp, harmonics } => {
                pos("initial.rho_mean", rho_mean)?;
                if !(0.0..1.0).contains(&rho_amp) {
                    return Err(Error::param("initial.rho_amp", "in [0, 1)", rho_amp));
                }
                if !v_amp.is_finite() {
                    return Err(Error::param("initial.v_amp", "finite", v_amp));
                }
                if !(d_amp.abs() < PI / 2.0) {
                    return Err(Error::param("initial.d_amp", "|d_amp| < pi/2", d_amp));
                }
                if harmonics < 1 {
                    return Err(Error::param("initial.harmonics", ">= 1", harmonics));
                }
                Ok(())
            }
            InitialData::Bump { radius, rho_base, rho_amp, v_amp, d_amp, .. } => {
                pos("initial.radius", radius)?;
                pos("initial.rho_base", rho_base)?;
                if !(rho_amp > -1.0) {
                    return Err(Error::param("initial.rho_amp", "> -1", rho_amp));
                }
                if !v_amp.is_finite() {
                    return Err(Error::param("initial.v_amp", "finite", v_amp));
                }
                if !(d_amp.abs() < PI / 2.0) {
                    return Err(Error::param("initial.d_amp", "|d_amp| < pi/2", d_amp));
                }
                Ok(())
            }
        }
    }

    /// Radius of the support of the perturbation, if compact.
    pub fn support_radius(&self) -> Option<f64> {
        match *self {
            InitialData::Equilibrium { .. } => Some(0.0),
            InitialData::Bump { radius, .. } => Some(radius),
            InitialData::Smooth { .. } => None,
        }
    }

    /// Samples the initial fields; `seed` drives the random harmonics.
    pub fn sample(&self, g: &GridSpec, seed: u64) -> InitialFields {
        let g = *g;
        // Factor vanishing on box walls.
        let wall = move |x: f64, y: f64| match g.domain_kind {
            DomainKind::PeriodicTorus => 1.0,
            DomainKind::DirichletBox => (PI * x / g.lx).sin() * (PI * y / g.ly).sin(),
        };
        match *self {
            InitialData::Equilibrium { rho } => InitialFields {
                rho: ScalarField::constant(g, rho),
                v: VectorField2::zeros(g),
                d: DirectorField::vertical(g),
            },
            InitialData::Smooth { rho_mean, rho_amp, v_amp, d_amp, harmonics } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let sr = TrigSum::new(&mut rng, harmonics, &g);
                let su = TrigSum::new(&mut rng, harmonics, &g);
                let sw = TrigSum::new(&mut rng, harmonics, &g);
                let sd = TrigSum::new(&mut rng, harmonics, &g);
                InitialFields {
                    rho: ScalarField::from_fn(g, |x, y| rho_mean * (1.0 + rho_amp * sr.eval(x, y))),
                    v: VectorField2::from_fn(g, |x, y| {
                        let b = v_amp * wall(x, y);
                        [b * su.eval(x, y), b * sw.eval(x, y)]
                    }),
                    d: DirectorField::from_angle(g, |x, y| d_amp * wall(x, y) * sd.eval(x, y)),
                }
            }
            InitialData::Bump { center, radius, rho_base, rho_amp, v_amp, d_amp } => {
                let [cx, cy] = center.unwrap_or([0.5 * g.lx, 0.5 * g.ly]);
                let b = move |x: f64, y: f64| bump((x - cx).hypot(y - cy), radius);
                InitialFields {
                    rho: ScalarField::from_fn(g, |x, y| rho_base * (1.0 + rho_amp * b(x, y))),
                    v: VectorField2::from_fn(g, |x, y| {
                        let s = v_amp * b(x, y) / radius;
                        [-s * (y - cy), s * (x - cx)]
                    }),
                    d: DirectorField::from_angle(g, |x, y| d_amp * b(x, y)),
                }
            }
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::param("name", "non-empty", "\"\""));
        }
        self.domain.validate()?;
        self.phys.validate()?;
        self.scheme.validate(&self.phys)?;
        self.initial.validate()?;
        match self.mode {
            Mode::ThirdApprox if !(self.scheme.eps > 0.0) => {
                return Err(Error::param("scheme.eps", "> 0 in third-approx mode", self.scheme.eps));
            }
            Mode::DeltaLevel => {
                if self.scheme.eps != 0.0 {
                    return Err(Error::param("scheme.eps", "= 0 in delta-level mode", self.scheme.eps));
                }
                if !(self.scheme.delta > 0.0) {
                    return Err(Error::param("scheme.delta", "> 0 in delta-level mode", self.scheme.delta));
                }
            }
            Mode::GammaLevel if self.scheme.eps != 0.0 || self.scheme.delta != 0.0 => {
                return Err(Error::param(
                    "scheme.eps, scheme.delta",
                    "both 0 in gamma-level mode",
                    format!("{}, {}", self.scheme.eps, self.scheme.delta),
                ));
            }
            Mode::CauchyExpandingBalls => {
                if self.domain.domain_kind != DomainKind::PeriodicTorus {
                    return Err(Error::param("domain.domain_kind", "periodic-torus for expanding balls", self.domain.domain_kind));
                }
                if self.expanding_radii.len() < 2 {
                    return Err(Error::param("expanding_radii", "at least two radii", self.expanding_radii.len()));
                }
            }
            _ => {}
        }
        if self.solver.density_tol <= 0.0 {
            return Err(Error::param("solver.density_tol", "> 0", self.solver.density_tol));
        }
        self.solver.director.picard(self.phys.theta).validate()?;
        if !(self.solver.momentum.picard_tol > 0.0) || self.solver.momentum.max_iters < 1 {
            return Err(Error::param(
                "solver.momentum",
                "picard_tol > 0 and max_iters >= 1",
                format!("{} / {}", self.solver.momentum.picard_tol, self.solver.momentum.max_iters),
            ));
        }
        if !(self.monitor.c1 > 0.0) {
            return Err(Error::param("monitor.c1", "> 0", self.monitor.c1));
        }
        if let Some(q) = self.monitor.theta_prime {
            if !(q > 0.0 && q < self.phys.gamma - 1.0) {
                return Err(Error::param("monitor.theta_prime", "in (0, gamma - 1)", q));
            }
        }
        self.validate_stages()?;
        self.validate_radii()
    }

    fn validate_stages(&self) -> Result<()> {
        for (k, st) in self.continuation.iter().enumerate() {
            let s = SchemeParams { eps: st.eps, delta: st.delta, n_modes: st.n_modes, ..self.scheme };
            s.validate(&self.phys)
                .map_err(|e| Error::Config(format!("continuation stage {k}: {e}")))?;
            if k > 0 {
                let prev = &self.continuation[k - 1];
                if st.eps > prev.eps {
                    return Err(Error::param(
                        format!("continuation[{k}].eps"),
                        format!("non-increasing (<= {})", prev.eps),
                        st.eps,
                    ));
                }
                if st.delta > prev.delta {
                    return Err(Error::param(
                        format!("continuation[{k}].delta"),
                        format!("non-increasing (<= {})", prev.delta),
                        st.delta,
                    ));
                }
            }
        }
        Ok(())
    }

    fn validate_radii(&self) -> Result<()> {
        let r = &self.expanding_radii;
        if r.is_empty() {
            return Ok(());
        }
        for (k, w) in r.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::param(
                    format!("expanding_radii[{}]", k + 1),
                    format!("strictly increasing (> {})", w[0]),
                    w[1],
                ));
            }
        }
        if !(r[0] > 0.0) {
            return Err(Error::param("expanding_radii[0]", "> 0", r[0]));
        }
        if let Some(sup) = self.initial.support_radius() {
            if sup > r[0] {
                return Err(Error::Config(format!(
                    "initial data support radius {sup} exceeds the smallest ball radius {}",
                    r[0]
                )));
            }
        } else {
            return Err(Error::Config("expanding balls need compactly supported initial data".into()));
        }
        let rmax = r[r.len() - 1];
        if (self.domain.lx - 4.0 * rmax).abs() > 1e-9 * rmax || (self.domain.ly - 4.0 * rmax).abs() > 1e-9 * rmax {
            return Err(Error::param("domain.lx, domain.ly", format!("4 * max radius = {}", 4.0 * rmax), self.domain.lx));
        }
        Ok(())
    }

    /// Scheme parameters with a continuation stage applied.
    pub fn with_stage(&self, st: &Stage) -> ScenarioSpec {
        let mut s = self.clone();
        s.scheme.eps = st.eps;
        s.scheme.delta = st.delta;
        s.scheme.n_modes = st.n_modes;
        s.continuation.clear();
        s
    }

    pub fn theta_prime(&self) -> f64 {
        self.monitor.theta_prime.unwrap_or(0.5 * (self.phys.gamma - 1.0))
    }
}

/// Names of the shipped presets.
pub const PRESETS: [&str; 5] = ["equilibrium", "small-energy", "director-only", "continuation", "expanding-balls"];

pub fn preset(name: &str) -> Result<ScenarioSpec> {
    let torus = GridSpec::torus(2.0 * PI, 2.0 * PI, 64, 64)?;
    let base = ScenarioSpec {
        name: name.to_string(),
        mode: Mode::ThirdApprox,
        domain: torus,
        phys: PhysParams::default(),
        scheme: SchemeParams {
            eps: 0.05,
            delta: 1e-3,
            beta: 8.0,
            n_modes: 24,
            dt: 1e-3,
            t_end: 1.0,
        },
        initial: InitialData::Equilibrium { rho: 1.0 },
        solver: SolverOptions::default(),
        monitor: MonitorOptions::default(),
        continuation: Vec::new(),
        expanding_radii: Vec::new(),
        seed: 7,
    };
    let small = InitialData::Smooth {
        rho_mean: 1.0,
        rho_amp: 0.02,
        v_amp: 0.02,
        d_amp: 0.02,
        harmonics: 2,
    };
    match name {
        "equilibrium" => Ok(ScenarioSpec {
            scheme: SchemeParams { n_modes: 16, ..base.scheme },
            ..base
        }),
        "small-energy" => Ok(ScenarioSpec {
            initial: small,
            scheme: SchemeParams { dt: 2e-3, t_end: 0.5, ..base.scheme },
            ..base
        }),
        "director-only" => Ok(ScenarioSpec {
            initial: InitialData::Smooth {
                rho_mean: 1.0,
                rho_amp: 0.0,
                v_amp: 0.0,
                d_amp: 0.6,
                harmonics: 2,
            },
            scheme: SchemeParams { n_modes: 8, dt: 2e-3, t_end: 0.2, ..base.scheme },
            solver: SolverOptions {
                freeze_flow: true,
                director: DirectorOptions { renormalize: false, ..DirectorOptions::default() },
                ..SolverOptions::default()
            },
            ..base
        }),
        "continuation" => Ok(ScenarioSpec {
            initial: small,
            scheme: SchemeParams { dt: 2e-3, t_end: 0.5, ..base.scheme },
            continuation: vec![
                Stage { eps: 0.04, delta: 1e-3, n_modes: 24 },
                Stage { eps: 0.02, delta: 1e-3, n_modes: 24 },
                Stage { eps: 0.01, delta: 1e-3, n_modes: 24 },
            ],
            ..base
        }),
        "expanding-balls" => {
            let radii = vec![1.0, 1.2, 1.4];
            let side = 4.0 * 1.4;
            Ok(ScenarioSpec {
                mode: Mode::CauchyExpandingBalls,
                domain: GridSpec::torus(side, side, 56, 56)?,
                initial: InitialData::Bump {
                    center: None,
                    radius: 0.5,
                    rho_base: 1.0,
                    rho_amp: 0.05,
                    v_amp: 0.05,
                    d_amp: 0.3,
                },
                scheme: SchemeParams { n_modes: 32, dt: 2e-3, t_end: 0.5, ..base.scheme },
                expanding_radii: radii,
                ..base
            })
        }
        other => Err(Error::Config(format!(
            "unknown preset `{other}` (expected one of {})",
            PRESETS.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn non_monotone_eps_is_rejected() {
        let mut s = preset("continuation").unwrap();
        s.continuation[2].eps = 0.1;
        let e = s.validate().unwrap_err().to_string();
        assert!(e.contains("continuation[2].eps"), "{e}");
    }

    #[test]
    fn radii_must_increase_and_contain_support() {
        let mut s = preset("expanding-balls").unwrap();
        s.expanding_radii = vec![1.0, 1.0, 2.0];
        assert!(s.validate().is_err());
        let mut s = preset("expanding-balls").unwrap();
        s.initial = InitialData::Bump { center: None, radius: 1.5, rho_base: 1.0, rho_amp: 0.0, v_amp: 0.0, d_amp: 0.1 };
        assert!(s.validate().unwrap_err().to_string().contains("support"));
    }

    #[test]
    fn sampling_is_seeded() {
        let s = preset("small-energy").unwrap();
        let a = s.initial.sample(&s.domain, 3);
        let b = s.initial.sample(&s.domain, 3);
        let c = s.initial.sample(&s.domain, 4);
        assert_eq!(a.rho, b.rho);
        assert_eq!(a.d, b.d);
        assert_ne!(a.rho, c.rho);
    }

    #[test]
    fn box_perturbations_vanish_on_walls() {
        let g = GridSpec::dirichlet_box(1.0, 1.0, 16, 16).unwrap();
        let init = InitialData::Smooth { rho_mean: 1.0, rho_amp: 0.1, v_amp: 1.0, d_amp: 0.5, harmonics: 2 };
        let f = init.sample(&g, 1);
        for j in 0..g.my() {
            for i in 0..g.mx() {
                if g.is_boundary(i, j) {
                    let k = g.idx(i, j);
                    assert!(f.v.u()[k].abs() < 1e-12 && f.v.w()[k].abs() < 1e-12);
                    assert!((f.d.d2()[k] - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
