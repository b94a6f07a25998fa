//! Acceptance gate: one verdict line per criterion, all must pass.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nematic2d::density::{density_bounds_check, density_step, DensityStepConfig};
use nematic2d::energy::{PhysParams, SchemeParams};
use nematic2d::field_core::{DirectorField, GridSpec, ScalarField, VectorField2};
use nematic2d::galerkin::{
    build_basis, BasisKind, ForcingOptions, ForcingTerms, GalerkinCoeffs, ModeFamily, MomentumConfig, MomentumSolver,
};
use nematic2d::inequality::{run_suite, Suite, SuiteOptions, ORACLE_TOL};
use nematic2d::sim::{
    continuation_run, expanding_ball_run, ledger_invariants, preset, refinement_study, run, Ledger, OutputSpec,
    ScenarioSpec, Simulation, Stage, LEDGER_FILE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn within(r: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&r)
}

fn sci(x: &[f64]) -> String {
    format!("[{}]", x.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", "))
}

fn out_spec(dir: &Path) -> OutputSpec {
    OutputSpec { dir: dir.to_path_buf(), snap_every: 0 }
}

/// Every ledger file below `dir`, in sorted order.
fn ledger_files(dir: &Path) -> Vec<PathBuf> {
    let mut found = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n == LEDGER_FILE) {
                found.push(p);
            }
        }
    }
    found.sort();
    found
}

/// Runs a preset once into `dir` through the entry point it is meant for.
fn run_preset(name: &str, dir: &Path) -> Vec<Ledger> {
    let spec = preset(name).unwrap();
    let out = out_spec(dir);
    if !spec.continuation.is_empty() {
        continuation_run(&spec, Some(&out)).unwrap().ledgers
    } else if !spec.expanding_radii.is_empty() {
        expanding_ball_run(&spec, Some(&out)).unwrap().ledgers
    } else {
        vec![run(&spec, Some(&out)).unwrap().ledger]
    }
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

fn equilibrium(dir: &Path) -> (Verdict, Ledger) {
    let spec = preset("equilibrium").unwrap();
    let start = Instant::now();
    let res = run(&spec, Some(&out_spec(dir))).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let init = spec.initial.sample(&spec.domain, spec.seed);
    let fin = &res.final_state;
    let drift = [
        max_rel_diff(fin.rho.values(), init.rho.values()),
        max_rel_diff(fin.v.u(), init.v.u()),
        max_rel_diff(fin.v.w(), init.v.w()),
        max_rel_diff(fin.d.d1(), init.d.d1()),
        max_rel_diff(fin.d.d2(), init.d.d2()),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let energy = res.ledger.rows.iter().map(|r| r.energy.abs()).fold(0.0, f64::max);
    let steps = res.ledger.rows.len() - 1;
    let passed = drift <= 1e-12 && energy == 0.0 && steps == 1000 && secs < 30.0;
    let detail = format!("{steps} steps, field drift {drift:.2e}, max |E| {energy:.2e}, {secs:.1} s");
    (Verdict { id: 1, name: "equilibrium exactness", passed, detail }, res.ledger)
}

fn energy_law_convergence() -> Verdict {
    let rep = refinement_study(&preset("small-energy").unwrap(), 3).unwrap();
    let halving = |r: &[Option<f64>]| r.iter().all(|x| x.is_some_and(|x| within(x, 1.7, 2.3)));
    let positive_ok = |pos: &[f64], r: &[Option<f64>]| pos.iter().all(|&p| p == 0.0) || halving(r);
    let pos_e: Vec<f64> = rep.levels.iter().map(|l| l.energy_law.max_positive).collect();
    let pos_l: Vec<f64> = rep.levels.iter().map(|l| l.l4_identity.max_positive).collect();
    let abs_e: Vec<f64> = rep.levels.iter().map(|l| l.energy_law.max_abs).collect();
    let abs_l: Vec<f64> = rep.levels.iter().map(|l| l.l4_identity.max_abs).collect();
    let passed = positive_ok(&pos_e, &rep.energy_law_ratios)
        && positive_ok(&pos_l, &rep.l4_identity_ratios)
        && halving(&rep.energy_law_abs_ratios)
        && halving(&rep.l4_identity_abs_ratios);
    let fmt = |r: &[Option<f64>]| r.iter().map(|x| x.map_or("-".into(), |x| format!("{x:.3}"))).collect::<Vec<_>>().join("/");
    let detail = format!(
        "max positive {} / {}; max |r| {} ratios {} (energy law), {} ratios {} (l4)",
        sci(&pos_e),
        sci(&pos_l),
        sci(&abs_e),
        fmt(&rep.energy_law_abs_ratios),
        sci(&abs_l),
        fmt(&rep.l4_identity_abs_ratios)
    );
    Verdict { id: 2, name: "energy-law residual convergence", passed, detail }
}

fn max_unit_violation(led: &Ledger) -> f64 {
    led.rows.iter().map(|r| r.unit_violation).fold(0.0, f64::max)
}

fn constraint_propagation(director_only: &Ledger, all: &[&Ledger]) -> Verdict {
    let base = preset("director-only").unwrap();
    let dt = base.scheme.dt;
    let mut half = base.clone();
    half.scheme.dt = 0.5 * dt;
    let coarse = max_unit_violation(director_only);
    let fine = max_unit_violation(&run(&half, None).unwrap().ledger);
    let ratio = coarse / fine;
    let mut renorm = base.clone();
    renorm.solver.director.renormalize = true;
    let on = max_unit_violation(&run(&renorm, None).unwrap().ledger);
    let d2_drop = all
        .iter()
        .map(|l| {
            let d0 = l.rows[0].d2_min;
            l.rows.iter().map(|r| d0 - r.d2_min).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let passed = coarse <= 1.0 * dt && within(ratio, 1.7, 2.3) && on <= 1e-13 && d2_drop <= 1e-8;
    let detail = format!(
        "off: {coarse:.3e} at dt, {fine:.3e} at dt/2 (ratio {ratio:.3}, C = {:.3}); on: {on:.1e}; worst d2 drop {d2_drop:.1e} over {} ledgers",
        coarse / dt,
        all.len()
    );
    Verdict { id: 3, name: "constraint propagation", passed, detail }
}

/// Max error of the Neumann heat solution `1 + 0.5 cos x cos y exp(-2t)` on `[0, pi]^2`.
fn heat_error(n: usize, dt: f64, t_end: f64) -> f64 {
    let g = GridSpec::dirichlet_box(PI, PI, n, n).unwrap();
    let exact = |t: f64| ScalarField::from_fn(g, |x, y| 1.0 + 0.5 * x.cos() * y.cos() * (-2.0 * t).exp());
    let v = VectorField2::zeros(g);
    let cfg = DensityStepConfig::new(1.0, dt);
    let steps = (t_end / dt).round() as usize;
    let mut rho = exact(0.0);
    for _ in 0..steps {
        rho = density_step(&rho, &v, &cfg).unwrap().rho;
    }
    max_rel_diff(rho.values(), exact(steps as f64 * dt).values())
}

/// Two-sided exponential density bound along a coupled run.
fn bound_holds(spec: &ScenarioSpec) -> Result<(), String> {
    let mut sim = Simulation::new(spec.clone()).map_err(|e| e.to_string())?;
    let mut rho = vec![sim.state().rho.clone()];
    let mut vel = Vec::new();
    let steps = (spec.scheme.t_end / spec.scheme.dt).round() as usize;
    for _ in 0..steps {
        sim.advance().map_err(|e| e.to_string())?;
        rho.push(sim.state().rho.clone());
        vel.push(sim.transport().clone());
    }
    let (lo, hi) = (rho[0].min(), rho[0].max());
    density_bounds_check(&rho, &vel, lo, hi, spec.scheme.dt).map(|_| ()).map_err(|e| e.to_string())
}

fn density_solver(all: &[&Ledger]) -> Verdict {
    let time: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&dt| heat_error(64, dt, 0.4)).collect();
    let space: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| {
            let h = PI / n as f64;
            heat_error(n, 0.05 * h * h, 0.1)
        })
        .collect();
    let orders = |e: &[f64]| e.windows(2).map(|w| (w[0] / w[1]).log2()).collect::<Vec<_>>();
    let (ot, os) = (orders(&time), orders(&space));
    let mass_ok = all.iter().all(|l| ledger_invariants(l).iter().all(|c| c.name != "mass-conserved" || c.passed));
    let drift = all
        .iter()
        .map(|l| {
            let m0 = l.rows[0].mass;
            l.rows.iter().map(|r| ((r.mass - m0) / m0).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let mut strong = preset("small-energy").unwrap();
    strong.domain = GridSpec::torus(2.0 * PI, 2.0 * PI, 32, 32).unwrap();
    strong.scheme = SchemeParams { n_modes: 16, dt: 5e-3, t_end: 0.25, ..strong.scheme };
    strong.initial = nematic2d::sim::InitialData::Smooth { rho_mean: 1.0, rho_amp: 0.3, v_amp: 0.5, d_amp: 0.3, harmonics: 3 };
    let bounds: Vec<Result<(), String>> = [preset("small-energy").unwrap(), strong].iter().map(bound_holds).collect();
    let bounds_ok = bounds.iter().all(|m| m.is_ok());
    let passed = ot.iter().all(|&o| o >= 0.9) && os.iter().all(|&o| o >= 1.9) && mass_ok && drift <= 1e-9 && bounds_ok;
    let detail = format!(
        "time orders {ot:.3?}, space orders {os:.3?}, mass drift {drift:.1e}, exponential bound {}",
        if bounds_ok { "holds on 2 coupled runs".to_string() } else { format!("{bounds:?}") }
    );
    Verdict { id: 4, name: "density sub-solver", passed, detail }
}

fn stokes_error(solver: &MomentumSolver, mode: usize, dt: f64) -> f64 {
    let g = solver.basis().grid;
    let (rho, d) = (ScalarField::constant(g, 1.0), DirectorField::vertical(g));
    let s = SchemeParams { dt, ..SchemeParams::default() };
    let cfg = MomentumConfig {
        forcing: ForcingOptions {
            terms: ForcingTerms { viscous: true, convection: false, pressure: false, elastic: false, artificial: false },
            ..Default::default()
        },
        ..Default::default()
    };
    let p = PhysParams::default();
    let t_end = 0.5;
    let mut a = GalerkinCoeffs::unit(solver.n(), mode);
    for _ in 0..(t_end / dt).round() as usize {
        a = solver.step(&a, &rho, &rho, &d, None, &p, &s, &cfg).unwrap().a;
    }
    (a.a[mode] - (-solver.basis().eigvals[mode] * t_end).exp()).abs()
}

fn galerkin_machinery() -> Verdict {
    let p = PhysParams { mu: 0.7, lambda: 0.4, ..PhysParams::default() };
    let torus = build_basis(&GridSpec::torus(2.0 * PI, 2.0 * PI, 64, 64).unwrap(), &p, 24).unwrap();
    let boxed = build_basis(&GridSpec::dirichlet_box(PI, PI, 32, 32).unwrap(), &p, 12).unwrap();
    let gram = torus.gram_error().max(boxed.gram_error());
    let eig_res = boxed.eigen_residuals().unwrap().into_iter().fold(0.0, f64::max);
    let BasisKind::Fourier(labels) = &torus.kind else { panic!("torus basis is Fourier") };
    let symbol = labels
        .iter()
        .zip(&torus.eigvals)
        .map(|(l, &lam)| {
            let q2 = (2.0 * PI * l.kx as f64 / torus.grid.lx).powi(2) + (2.0 * PI * l.ky as f64 / torus.grid.ly).powi(2);
            let expect = match l.family {
                ModeFamily::Solenoidal => p.mu * q2,
                ModeFamily::Gradient => (2.0 * p.mu + p.lambda) * q2,
            };
            (lam - expect).abs() / expect.max(1.0)
        })
        .fold(0.0, f64::max);

    let solver = MomentumSolver::new(build_basis(&GridSpec::torus(2.0 * PI, 2.0 * PI, 32, 32).unwrap(), &PhysParams::default(), 8).unwrap());
    let errs: Vec<f64> = [0.01, 0.005, 0.0025].iter().map(|&dt| stokes_error(&solver, 4, dt)).collect();
    let stokes_ok = errs.windows(2).all(|w| within(w[0] / w[1], 1.8, 2.2)) && errs[0] <= 0.01;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = solver.basis().grid;
    let mut solve_res = 0.0f64;
    for _ in 0..20 {
        let rho = ScalarField::new(g, (0..g.node_count()).map(|_| rng.random_range(0.2..3.0)).collect()).unwrap();
        let m = solver.mass(&rho).unwrap();
        let b: Vec<f64> = (0..solver.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = m.solve(&b).unwrap();
        let r = m.apply(&x).iter().zip(&b).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        solve_res = solve_res.max(r / b.iter().map(|c| c * c).sum::<f64>().sqrt());
    }
    let passed = gram <= 1e-8 && eig_res <= 1e-6 && symbol <= 1e-10 && stokes_ok && solve_res <= 1e-10;
    let detail = format!(
        "gram {gram:.1e}, eigen residual {eig_res:.1e}, symbol error {symbol:.1e}, stokes errors {}, mass solve {solve_res:.1e}",
        sci(&errs)
    );
    Verdict { id: 5, name: "galerkin machinery", passed, detail }
}

fn inequality_suite() -> Verdict {
    let lady = |cells: usize| {
        let opts = SuiteOptions { cells, samples: 200, ..SuiteOptions::default() };
        run_suite(Suite::Ladyzhenskaya, &opts).unwrap().ladyzhenskaya.unwrap().worst_ratio
    };
    let (w128, w256) = (lady(128), lady(256));
    let rig = run_suite(Suite::Rigidity, &SuiteOptions::default()).unwrap();
    let oracle = rig.rigidity.iter().map(|r| r.oracle_error).fold(rig.oracle_example_error.unwrap(), f64::max);
    let coercivity = rig.rigidity.iter().map(|r| r.min_coercivity).fold(f64::INFINITY, f64::min);
    let passed = w128 <= 2.02 && w256 <= 2.005 && oracle <= ORACLE_TOL && coercivity > 0.0;
    let detail = format!(
        "worst ratio {w128:.5} at 128, {w256:.5} at 256; oracle error {oracle:.1e}; min coercivity {coercivity:.3e} over {} ensembles",
        rig.rigidity.len()
    );
    Verdict { id: 6, name: "inequality suite", passed, detail }
}

fn continuation_uniformity(dir: &Path) -> (Verdict, Vec<Ledger>) {
    let spec = preset("continuation").unwrap();
    let rep = continuation_run(&spec, Some(&out_spec(dir))).unwrap();
    let cols: Vec<f64> = rep.stages.iter().map(|s| s.eps_grad_rho_qt).collect();
    let mut deltas = spec.clone();
    deltas.continuation = [4e-3, 2e-3, 1e-3].iter().map(|&delta| Stage { eps: 0.02, delta, n_modes: 24 }).collect();
    let drep = continuation_run(&deltas, None).unwrap();
    let passed = rep.eps_column_bounded && drep.traces_converging;
    let detail = format!(
        "sqrt(eps)|grad rho| columns {} (bound 2x stage 0); delta-halving trace gaps {}",
        sci(&cols),
        sci(&drep.trace_differences)
    );
    let mut ledgers = rep.ledgers;
    ledgers.extend(drep.ledgers);
    (Verdict { id: 7, name: "continuation uniformity", passed, detail }, ledgers)
}

fn expanding_balls(dir: &Path) -> (Verdict, Vec<Ledger>) {
    let rep = expanding_ball_run(&preset("expanding-balls").unwrap(), Some(&out_spec(dir))).unwrap();
    let passed = rep.differences_decreasing && rep.angle_condition;
    let detail = format!(
        "radii {:?}, trace differences {}, min d2 {:.4} vs initial {:.4}",
        rep.balls.iter().map(|b| b.radius).collect::<Vec<_>>(),
        sci(&rep.cauchy_differences),
        rep.d2_min,
        rep.d2_initial_min
    );
    (Verdict { id: 8, name: "expanding-ball cauchy proxy", passed, detail }, rep.ledgers)
}

fn determinism(first: &Path, second: &Path) -> Verdict {
    let mut mismatched = Vec::new();
    let mut compared = 0;
    for name in nematic2d::sim::PRESETS {
        run_preset(name, &second.join(name));
        let (a, b) = (ledger_files(&first.join(name)), ledger_files(&second.join(name)));
        if a.is_empty() || a.len() != b.len() {
            mismatched.push(name.to_string());
            continue;
        }
        for (x, y) in a.iter().zip(&b) {
            compared += 1;
            if std::fs::read(x).unwrap() != std::fs::read(y).unwrap() {
                mismatched.push(format!("{name}:{}", x.display()));
            }
        }
    }
    let passed = mismatched.is_empty();
    let detail = format!("{compared} ledger pairs over {} presets, mismatches {mismatched:?}", nematic2d::sim::PRESETS.len());
    Verdict { id: 9, name: "determinism", passed, detail }
}

#[test]
fn acceptance() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let mut verdicts = Vec::new();
    let mut report = |v: Verdict, secs: f64| {
        println!("criterion {} {} {}: {} ({secs:.0} s)", v.id, if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
        verdicts.push((v.id, v.passed));
    };
    fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
        let t = Instant::now();
        let out = f();
        (out, t.elapsed().as_secs_f64())
    }

    let ((v1, eq), s1) = timed(|| equilibrium(&a.join("equilibrium")));
    let (v2, s2) = timed(energy_law_convergence);
    let small = run_preset("small-energy", &a.join("small-energy"));
    let director_only = run_preset("director-only", &a.join("director-only"));
    let ((v7, cont), s7) = timed(|| continuation_uniformity(&a.join("continuation")));
    let ((v8, balls), s8) = timed(|| expanding_balls(&a.join("expanding-balls")));
    let all: Vec<&Ledger> = std::iter::once(&eq).chain(&small).chain(&director_only).chain(&cont).chain(&balls).collect();

    report(v1, s1);
    report(v2, s2);
    let (v, s) = timed(|| constraint_propagation(&director_only[0], &all));
    report(v, s);
    let (v, s) = timed(|| density_solver(&all));
    report(v, s);
    let (v, s) = timed(galerkin_machinery);
    report(v, s);
    let (v, s) = timed(inequality_suite);
    report(v, s);
    report(v7, s7);
    report(v8, s8);
    let (v, s) = timed(|| determinism(&a, &b));
    report(v, s);

    let failed: Vec<usize> = verdicts.iter().filter(|v| !v.1).map(|v| v.0).collect();
    println!("acceptance: {}/{} criteria passed", verdicts.len() - failed.len(), verdicts.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
