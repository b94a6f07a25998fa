//! Time loop: density, director, momentum per step, with ledger rows.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::density::{density_step, face_gradient_pairing, DensityStepConfig, DensityUpdate};
use crate::director::{director_step, PicardConfig};
use crate::energy::{director_grad_sq, director_norms, enthalpy, q_unchecked, tension_sq};
use crate::error::{Error, Result};
use crate::field_core::l2_sq_values;
use crate::field_core::ops::integrate_values;
use crate::field_core::snapshot::write_snapshot;
use crate::field_core::{DirectorField, ScalarField, VectorField2};
use crate::inequality::ladyzhenskaya_ratio;
use crate::galerkin::{build_basis, GalerkinBasis, GalerkinCoeffs, MomentumSolver, Transport};
use crate::linalg::norm2;

use super::ledger::{Ledger, LedgerRow, LedgerWriter};
use super::scenario::{InitialFields, ScenarioSpec};

/// Simulation state at one time level.
#[derive(Debug, Clone)]
pub struct State {
    pub t: f64,
    pub rho: ScalarField,
    pub a: GalerkinCoeffs,
    pub v: VectorField2,
    pub d: DirectorField,
}

#[derive(Debug, Clone, Copy, Default)]
struct StepInfo {
    density_iters: usize,
    director_iters: usize,
    momentum_iters: usize,
    outer_iters: usize,
    dvdt_norm: f64,
}

/// Running integrals feeding the cumulative ledger columns.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulators {
    grad_rho_sq: f64,
    rho_pow: f64,
    l4: f64,
}

pub struct Simulation {
    spec: ScenarioSpec,
    solver: MomentumSolver,
    state: State,
    transport: VectorField2,
    step: usize,
    acc: Accumulators,
    prev_energy: f64,
    energy0: f64,
    g1: f64,
    d0_h2_sq: f64,
}

fn tag_step(e: Error, step: usize) -> Error {
    match e {
        Error::StepFailure { stage, reason, .. } => Error::StepFailure { stage, step, reason },
        other => other,
    }
}

impl Simulation {
    pub fn new(spec: ScenarioSpec) -> Result<Self> {
        spec.validate()?;
        let basis = build_basis(&spec.domain, &spec.phys, spec.scheme.n_modes)?;
        Self::with_basis(spec, basis)
    }

    /// Uses a prebuilt basis on the scenario grid.
    pub fn with_basis(spec: ScenarioSpec, basis: GalerkinBasis) -> Result<Self> {
        let init = spec.initial.sample(&spec.domain, spec.seed);
        Self::with_fields(spec, basis, init)
    }

    pub fn with_fields(spec: ScenarioSpec, basis: GalerkinBasis, init: InitialFields) -> Result<Self> {
        spec.domain.check_same(&basis.grid, "scenario basis")?;
        let solver = MomentumSolver::new(basis);
        let InitialFields { rho, v, d } = init;
        if !(rho.min() > 0.0) {
            return Err(Error::param("initial density", "> 0 everywhere", rho.min()));
        }
        d.check_unit(1e-12)?;
        let n = rho.grid().node_count();
        let m = VectorField2::new(
            *rho.grid(),
            (0..n).map(|k| rho.values()[k] * v.u()[k]).collect(),
            (0..n).map(|k| rho.values()[k] * v.w()[k]).collect(),
        )?;
        let a = if spec.solver.freeze_flow && v.max_magnitude() == 0.0 {
            GalerkinCoeffs::zeros(solver.n())
        } else {
            solver.coefficients_from_momentum(&rho, &m)?
        };
        let v = solver.velocity(&a);
        let transport = v.clone();
        let state = State { t: 0.0, rho, a, v, d };
        let mut sim = Simulation {
            spec,
            solver,
            state,
            transport,
            step: 0,
            acc: Accumulators::default(),
            prev_energy: 0.0,
            energy0: 0.0,
            g1: 0.0,
            d0_h2_sq: 0.0,
        };
        sim.init_monitors();
        Ok(sim)
    }

    fn init_monitors(&mut self) {
        let (p, d) = (&self.spec.phys, &self.state.d);
        let g = d.grid();
        let nrm = director_norms(d);
        let l2: f64 = l2_sq_values(g, d.d1()) + l2_sq_values(g, d.d2());
        self.d0_h2_sq = l2 + crate::energy::director_dirichlet(d) + nrm.hess_sq;
        let e0 = self.energy_terms().energy;
        self.energy0 = e0;
        self.prev_energy = e0;
        self.g1 = 128.0 * p.nu * p.theta * (self.spec.monitor.c1 + 12.0) * self.d0_h2_sq * (self.d0_h2_sq + 2.0 * e0 / p.nu);
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn solver(&self) -> &MomentumSolver {
        &self.solver
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    /// Velocity that carried the density in the last accepted step.
    pub fn transport(&self) -> &VectorField2 {
        &self.transport
    }

    fn picard(&self) -> PicardConfig {
        self.spec.solver.director.picard(self.spec.phys.theta)
    }

    fn density_cfg(&self) -> DensityStepConfig {
        DensityStepConfig {
            eps: self.spec.scheme.eps,
            dt: self.spec.scheme.dt,
            scheme: self.spec.solver.density_scheme,
            linear_tol: self.spec.solver.density_tol,
        }
    }

    /// Advances one step and returns its ledger row.
    pub fn advance(&mut self) -> Result<LedgerRow> {
        let k = self.step + 1;
        let info = self.try_advance().map_err(|e| tag_step(e, k))?;
        self.step = k;
        self.state.t = k as f64 * self.spec.scheme.dt;
        for (ok, field) in [
            (self.state.rho.is_finite(), "density"),
            (self.state.v.is_finite(), "velocity"),
            (self.state.d.is_finite(), "director"),
        ] {
            if !ok {
                return Err(Error::NonFinite { field, step: k });
            }
        }
        let row = self.row(info);
        if let Some(c) = row.non_finite() {
            return Err(Error::NonFinite { field: c, step: k });
        }
        Ok(row)
    }

    fn try_advance(&mut self) -> Result<StepInfo> {
        let (sp, s, p) = (&self.spec.solver, &self.spec.scheme, &self.spec.phys);
        let dt = s.dt;
        let mut info = StepInfo::default();
        if sp.freeze_flow {
            let dir = director_step(&self.state.d, &self.state.v, &self.picard(), dt)?;
            info.director_iters = dir.iters;
            self.state.d = dir.d;
            return Ok(info);
        }
        let old = self.state.clone();
        let mut v_transport = old.v.clone();
        let mut accepted = None;
        for sweep in 0..=sp.outer_iters {
            let dens: DensityUpdate = density_step(&old.rho, &v_transport, &self.density_cfg())?;
            let dir = director_step(&old.d, &v_transport, &self.picard(), dt)?;
            let tr = Transport { flux_div: &dens.flux_div, lap_rho: &dens.lap_rho };
            let mom = self.solver.step(&old.a, &old.rho, &dens.rho, &dir.d, Some(tr), p, s, &sp.momentum)?;
            info.density_iters = dens.iterations;
            info.director_iters = dir.iters;
            info.momentum_iters = mom.iters;
            info.outer_iters = sweep;
            let change = {
                let prev = self.solver.modes().project(v_transport.u(), v_transport.w());
                let diff: Vec<f64> = mom.a.a.iter().zip(&prev).map(|(x, y)| x - y).collect();
                norm2(&diff) / norm2(&mom.a.a).max(1e-300)
            };
            let used = std::mem::replace(&mut v_transport, mom.v.clone());
            accepted = Some((dens, dir.d, mom, used));
            if sweep > 0 && change <= sp.outer_tol {
                break;
            }
        }
        let (dens, d_new, mom, used) = accepted.expect("at least one sweep");
        self.transport = used;
        if self.spec.monitor.dvdt {
            let rho_t = ScalarField::new(
                *dens.rho.grid(),
                dens.rho.values().iter().zip(old.rho.values()).map(|(a, b)| (a - b) / dt).collect(),
            )?;
            let tr = Transport { flux_div: &dens.flux_div, lap_rho: &dens.lap_rho };
            let adot = self.solver.dvdt(&mom.a, &dens.rho, &rho_t, &d_new, Some(tr), p, s, &sp.momentum.forcing)?;
            info.dvdt_norm = norm2(&adot.a);
        }
        self.state.rho = dens.rho;
        self.state.d = d_new;
        self.state.a = mom.a;
        self.state.v = mom.v;
        Ok(info)
    }

    fn energy_terms(&self) -> EnergyTerms {
        let (p, s) = (&self.spec.phys, &self.spec.scheme);
        let st = &self.state;
        let g = st.rho.grid();
        let r = st.rho.values();
        let kin: Vec<f64> = (0..g.node_count())
            .map(|k| 0.5 * r[k] * (st.v.u()[k].powi(2) + st.v.w()[k].powi(2)))
            .collect();
        let q: Vec<f64> = r.iter().map(|&x| q_unchecked(x, p)).collect();
        let kinetic = integrate_values(g, &kin);
        let pressure = integrate_values(g, &q);
        let director = 0.5 * p.nu * integrate_values(g, &director_grad_sq(&st.d));
        let art_p = if s.delta > 0.0 {
            let rb: Vec<f64> = r.iter().map(|&x| x.powf(s.beta)).collect();
            s.delta / (s.beta - 1.0) * integrate_values(g, &rb)
        } else {
            0.0
        };
        EnergyTerms {
            kinetic,
            pressure,
            director,
            energy: kinetic + pressure + director,
            energy_delta: kinetic + pressure + director + art_p,
        }
    }

    /// Ledger row of the current state.
    fn row(&mut self, info: StepInfo) -> LedgerRow {
        let (p, s) = (&self.spec.phys, &self.spec.scheme);
        let st = &self.state;
        let g = *st.rho.grid();
        let r = st.rho.values();
        let e = self.energy_terms();
        let nrm = director_norms(&st.d);
        let visc = self.solver.viscous_dissipation(&st.a);
        let tens = tension_sq(&st.d);
        let nt = p.nu * p.theta;
        let h: Vec<f64> = r.iter().map(|&x| enthalpy(x, p, s)).collect();
        let art = s.eps * face_gradient_pairing(&g, &h, r);
        let dt = s.dt;
        let first = self.step == 0;
        let q = s.beta + self.spec.theta_prime();
        if !first {
            self.acc.grad_rho_sq += dt * face_gradient_pairing(&g, r, r);
            let rq: Vec<f64> = r.iter().map(|&x| x.powf(q)).collect();
            self.acc.rho_pow += dt * integrate_values(&g, &rq);
            self.acc.l4 += dt * nrm.grad_l4_pow4;
        }
        let de_dt = if first { 0.0 } else { (e.energy - self.prev_energy) / dt };
        self.prev_energy = e.energy;
        let e0 = self.energy0;
        let g2_rhs = 2.0 * ((e0 / nt).sqrt() + (4.0 * (self.g1 * st.t + e0) / (3.0 * nt)).sqrt()).powi(2);
        let lady = ladyzhenskaya_ratio(&st.v).unwrap_or(0.0);
        LedgerRow {
            step: self.step,
            t: st.t,
            energy: e.energy,
            dissipation: visc + nt * tens,
            energy_delta: e.energy_delta,
            kinetic: e.kinetic,
            pressure_energy: e.pressure,
            director_energy: e.director,
            visc_diss: visc,
            tension_sq: tens,
            dissipation_l4: visc + nt * (nrm.lap_sq - nrm.grad_l4_pow4),
            art_diss: art,
            mass: integrate_values(&g, r),
            rho_min: st.rho.min(),
            rho_max: st.rho.max(),
            d2_min: st.d.min_d2(),
            unit_violation: st.d.unit_residual(),
            grad_d_l4_pow4: nrm.grad_l4_pow4,
            lap_d_l2_sq: nrm.lap_sq,
            hess_d_l2_sq: nrm.hess_sq,
            eps_grad_rho_qt: (s.eps * self.acc.grad_rho_sq).sqrt(),
            delta_rho_qt: if s.delta > 0.0 { s.delta.powf(1.0 / q) * self.acc.rho_pow.powf(1.0 / q) } else { 0.0 },
            g1_lhs: de_dt + visc + 0.75 * nt * nrm.lap_sq,
            g1_rhs: self.g1,
            g2_lhs: self.acc.l4,
            g2_rhs,
            lady_ratio: lady,
            dvdt_norm: info.dvdt_norm,
            density_iters: info.density_iters,
            director_iters: info.director_iters,
            momentum_iters: info.momentum_iters,
            outer_iters: info.outer_iters,
        }
    }

    /// Row for the initial state.
    pub fn initial_row(&mut self) -> LedgerRow {
        self.row(StepInfo::default())
    }

    pub fn into_state(self) -> State {
        self.state
    }
}

#[derive(Debug, Clone, Copy)]
struct EnergyTerms {
    kinetic: f64,
    pressure: f64,
    director: f64,
    energy: f64,
    energy_delta: f64,
}

/// Where a run writes its files.
#[derive(Debug, Clone)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Snapshot cadence in steps; 0 disables snapshots.
    pub snap_every: usize,
}

/// Echo of a run, sufficient to reproduce it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub spec: ScenarioSpec,
    pub code_version: String,
    pub wall_time_s: f64,
    pub steps: usize,
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    Failed { step: usize, error: String },
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub ledger: Ledger,
    pub final_state: State,
    pub snapshots: Vec<PathBuf>,
}

pub const LEDGER_FILE: &str = "ledger.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const SNAPSHOT_DIR: &str = "snapshots";

fn snapshot(dir: &Path, st: &State, step: usize) -> Result<PathBuf> {
    let dir = dir.join(SNAPSHOT_DIR);
    std::fs::create_dir_all(&dir)?;
    let path = dir.join(format!("snap_{step:06}.csv"));
    let (d1, d2) = (st.d.d1(), st.d.d2());
    write_snapshot(
        &path,
        st.rho.grid(),
        &[("rho", st.rho.values()), ("u", st.v.u()), ("w", st.v.w()), ("d1", d1), ("d2", d2)],
    )?;
    Ok(path)
}

/// Runs a scenario to `t_end`. With `out`, the ledger is streamed to disk and
/// a manifest written even when the run fails.
pub fn run(spec: &ScenarioSpec, out: Option<&OutputSpec>) -> Result<RunOutput> {
    let basis = build_basis(&spec.domain, &spec.phys, spec.scheme.n_modes)?;
    run_with_basis(spec, basis, out)
}

pub fn run_with_basis(spec: &ScenarioSpec, basis: GalerkinBasis, out: Option<&OutputSpec>) -> Result<RunOutput> {
    spec.validate()?;
    let started = Instant::now();
    let mut writer = match out {
        Some(o) => {
            std::fs::create_dir_all(&o.dir)?;
            Some(LedgerWriter::create(&o.dir.join(LEDGER_FILE))?)
        }
        None => None,
    };
    let mut snapshots = Vec::new();
    let result = (|| -> Result<(Ledger, State)> {
        let mut sim = Simulation::with_basis(spec.clone(), basis)?;
        let mut ledger = Ledger::default();
        let mut push = |row: LedgerRow, ledger: &mut Ledger| -> Result<()> {
            if let Some(w) = writer.as_mut() {
                w.push(&row)?;
            }
            ledger.rows.push(row);
            Ok(())
        };
        let r0 = sim.initial_row();
        push(r0, &mut ledger)?;
        let snap_every = out.map(|o| o.snap_every).unwrap_or(0);
        if snap_every > 0 {
            snapshots.push(snapshot(&out.unwrap().dir, sim.state(), 0)?);
        }
        for _ in 0..spec.scheme.steps() {
            let row = sim.advance()?;
            push(row, &mut ledger)?;
            if snap_every > 0 && sim.step_index() % snap_every == 0 {
                snapshots.push(snapshot(&out.unwrap().dir, sim.state(), sim.step_index())?);
            }
            log::debug!("step {} t={:.4} E={:.6e}", row.step, row.t, row.energy);
        }
        Ok((ledger, sim.into_state()))
    })();
    let wall = started.elapsed().as_secs_f64();
    if let Some(w) = writer {
        w.finish()?;
    }
    let (status, steps) = match &result {
        Ok((l, _)) => (RunStatus::Completed, l.rows.len().saturating_sub(1)),
        Err(e) => {
            let step = e.step().unwrap_or(0);
            (RunStatus::Failed { step, error: e.to_string() }, step.saturating_sub(1))
        }
    };
    if let Some(o) = out {
        let manifest = RunManifest {
            spec: spec.clone(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: wall,
            steps,
            status,
        };
        std::fs::write(o.dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    }
    let (ledger, final_state) = result?;
    Ok(RunOutput { ledger, final_state, snapshots })
}
