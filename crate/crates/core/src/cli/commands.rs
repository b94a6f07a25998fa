use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_core::GridSpec;
use crate::inequality::{eng_study, run_suite, EngReport, SuiteOptions};
use crate::sim::{
    continuation_run, energy_law_audit, expanding_ball_run, l4_identity_audit, ledger_invariants, run, AuditReport,
    InvariantCheck, Ledger, Mode, OutputSpec, LEDGER_FILE,
};

use super::config::{parse_radii, parse_stages, RunConfig};
use super::{Command, ScenarioArgs};

pub const CONFIG_ECHO: &str = "config.toml";
pub const AUDIT_FILE: &str = "audit.json";
pub const CONTINUATION_FILE: &str = "continuation.json";
pub const EXPAND_FILE: &str = "expand.json";
pub const INEQ_FILE: &str = "inequality_report.json";

pub(crate) enum Outcome {
    Passed,
    /// An asserted invariant failed; the message says which.
    Violated(String),
}

/// Output of `calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub c1: f64,
    pub samples: usize,
    pub seed: u64,
    pub report: EngReport,
}

pub fn calibrate(samples: usize, seed: u64) -> Result<Calibration> {
    let report = eng_study(PI, &[32, 64, 128], &[PI, 2.0 * PI, 4.0 * PI], samples, seed)?;
    Ok(Calibration { c1: report.c1, samples, seed, report })
}

pub fn read_calibration(path: &Path) -> Result<f64> {
    let c: Calibration = serde_json::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok(c.c1)
}

/// Runs one command. The second value is where a failure record should go.
pub(crate) fn dispatch(cmd: &Command, log_explicit: bool) -> (Result<Outcome>, Option<PathBuf>) {
    let mut out_dir = None;
    let r = match cmd {
        Command::Run { scenario, stages, print_config } => {
            cmd_run(scenario, stages.as_deref(), *print_config, log_explicit, &mut out_dir)
        }
        Command::Audit { ledger, out, max_positive } => {
            out_dir = out.clone().or_else(|| ledger.parent().map(Path::to_path_buf));
            cmd_audit(ledger, out_dir.as_deref(), *max_positive)
        }
        Command::Ineq { suite, grid, samples, seed, out } => {
            out_dir = Some(out.clone());
            let opts = SuiteOptions { cells: *grid, samples: *samples, seed: *seed, ..SuiteOptions::default() };
            cmd_ineq(*suite, &opts, out)
        }
        Command::Expand { scenario, radii } => cmd_expand(scenario, radii.as_deref(), log_explicit, &mut out_dir),
        Command::Calibrate { out, samples, seed } => {
            out_dir = out.parent().map(Path::to_path_buf);
            calibrate(*samples, *seed).and_then(|c| {
                write_json(out, &c)?;
                println!("c1 = {:.6}", c.c1);
                Ok(Outcome::Passed)
            })
        }
    };
    (r, out_dir)
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    if let Some(p) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(p)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(v)?)?;
    Ok(())
}

fn resolve(args: &ScenarioArgs, log_explicit: bool, out_dir: &mut Option<PathBuf>) -> Result<RunConfig> {
    *out_dir = args.out.clone();
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(name)) => RunConfig::from_preset(name)?,
        (None, None) => return Err(Error::param("--config / --preset", "one of the two", "neither")),
    };
    if let Some(o) = &args.out {
        cfg.output.dir = o.clone();
    }
    *out_dir = Some(cfg.output.dir.clone());
    if let Some(s) = args.snap_every {
        cfg.output.snap_every = s;
    }
    if let Some(s) = args.seed {
        cfg.scenario.seed = s;
    }
    if let Some(p) = &args.calibration {
        cfg.scenario.monitor.c1 = read_calibration(p)?;
    }
    if !log_explicit {
        log::set_max_level(cfg.log.level.filter());
    }
    Ok(cfg)
}

fn prepare_dir(cfg: &RunConfig) -> Result<OutputSpec> {
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::param("output.dir", "a writable directory", format!("{} ({e})", dir.display())))?;
    std::fs::write(dir.join(CONFIG_ECHO), cfg.to_toml()?)?;
    Ok(OutputSpec { dir: dir.clone(), snap_every: cfg.output.snap_every })
}

#[derive(Debug, Serialize)]
struct AuditSummary {
    ledger: PathBuf,
    energy_law: Option<AuditReport>,
    l4_identity: Option<AuditReport>,
    invariants: Vec<InvariantCheck>,
}

fn audit_ledger(path: &Path, ledger: &Ledger, energy_law: bool, l4: bool) -> Result<AuditSummary> {
    let two = ledger.rows.len() >= 2;
    Ok(AuditSummary {
        ledger: path.to_path_buf(),
        energy_law: if energy_law && two { Some(energy_law_audit(ledger)?) } else { None },
        l4_identity: if l4 && two { Some(l4_identity_audit(ledger)?) } else { None },
        invariants: ledger_invariants(ledger),
    })
}

fn report_audit(s: &AuditSummary) -> Vec<String> {
    for a in s.energy_law.iter().chain(&s.l4_identity) {
        println!(
            "{:?}: max positive residual {:.3e}, max |residual| {:.3e} at step {}",
            a.kind, a.max_positive, a.max_abs, a.worst_step
        );
    }
    s.invariants
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} ({}): {}", c.name, s.ledger.display(), c.detail))
        .collect()
}

fn verdict(failures: Vec<String>) -> Outcome {
    if failures.is_empty() {
        Outcome::Passed
    } else {
        Outcome::Violated(failures.join("; "))
    }
}

fn cmd_run(
    args: &ScenarioArgs,
    stages: Option<&str>,
    print_config: bool,
    log_explicit: bool,
    out_dir: &mut Option<PathBuf>,
) -> Result<Outcome> {
    let mut cfg = resolve(args, log_explicit, out_dir)?;
    if let Some(s) = stages {
        cfg.scenario.continuation = parse_stages(s)?;
    }
    cfg.validate()?;
    if print_config {
        print!("{}", cfg.to_toml()?);
        return Ok(Outcome::Passed);
    }
    let out = prepare_dir(&cfg)?;
    let spec = &cfg.scenario;
    let (aud_e, aud_l4) = (cfg.audit.energy_law, cfg.audit.l4_identity);
    if !spec.continuation.is_empty() {
        log::info!("continuation run `{}` with {} stages", spec.name, spec.continuation.len());
        let rep = continuation_run(spec, Some(&out))?;
        write_json(&out.dir.join(CONTINUATION_FILE), &rep)?;
        let mut failures = Vec::new();
        for (k, led) in rep.ledgers.iter().enumerate() {
            let dir = out.dir.join(format!("stage_{k}"));
            let s = audit_ledger(&dir.join(LEDGER_FILE), led, aud_e, aud_l4)?;
            write_json(&dir.join(AUDIT_FILE), &s)?;
            failures.extend(report_audit(&s));
        }
        println!(
            "trace differences {:?}; eps column bounded: {}; delta column bounded: {}",
            rep.trace_differences, rep.eps_column_bounded, rep.delta_column_bounded
        );
        return Ok(verdict(failures));
    }
    log::info!("running `{}`: {} steps of {}", spec.name, spec.scheme.steps(), spec.scheme.dt);
    let res = run(spec, Some(&out))?;
    let s = audit_ledger(&out.dir.join(LEDGER_FILE), &res.ledger, aud_e, aud_l4)?;
    write_json(&out.dir.join(AUDIT_FILE), &s)?;
    let failures = report_audit(&s);
    if let Some(last) = res.ledger.last() {
        println!("t = {:.4}, energy = {:.6e}, rho in [{:.6}, {:.6}]", last.t, last.energy, last.rho_min, last.rho_max);
    }
    Ok(verdict(failures))
}

fn cmd_audit(ledger: &Path, out: Option<&Path>, max_positive: Option<f64>) -> Result<Outcome> {
    let led = Ledger::read_csv(ledger)?;
    let s = audit_ledger(ledger, &led, true, true)?;
    if let Some(dir) = out {
        write_json(&dir.join(AUDIT_FILE), &s)?;
    }
    let mut failures = report_audit(&s);
    if let Some(tol) = max_positive {
        for a in s.energy_law.iter().chain(&s.l4_identity) {
            if a.max_positive > tol {
                failures.push(format!("{:?} max positive residual {:.3e} above {tol:.3e}", a.kind, a.max_positive));
            }
        }
    }
    Ok(verdict(failures))
}

fn cmd_ineq(suite: crate::inequality::Suite, opts: &SuiteOptions, out: &Path) -> Result<Outcome> {
    let rep = run_suite(suite, opts)?;
    write_json(&out.join(INEQ_FILE), &rep)?;
    if let Some(l) = &rep.ladyzhenskaya {
        println!("ladyzhenskaya: worst ratio {:.6} (bound {:.6}) over {} samples", l.worst_ratio, l.bound, l.samples);
    }
    if let Some(e) = &rep.eng {
        println!("eng: c1 = {:.6}, refinement ratios {:?}, domain spread {:.4}", e.c1, e.refinement_ratios, e.domain_spread);
    }
    if let Some(e) = &rep.elliptic {
        println!("elliptic: relative change under refinement {:.3e}", e.relative_change);
    }
    for r in &rep.rigidity {
        println!("rigidity: min coercivity {:.4}, oracle error {:.3e}", r.min_coercivity, r.oracle_error);
    }
    Ok(verdict(rep.failures))
}

/// Torus of side `4 r_max` with the spacing of `g`.
fn resized_torus(g: &GridSpec, r_max: f64) -> Result<GridSpec> {
    let side = 4.0 * r_max;
    let nx = (side / g.hx()).round() as usize;
    let ny = (side / g.hy()).round() as usize;
    GridSpec::torus(side, side, nx, ny)
}

fn cmd_expand(args: &ScenarioArgs, radii: Option<&str>, log_explicit: bool, out_dir: &mut Option<PathBuf>) -> Result<Outcome> {
    let mut cfg = resolve(args, log_explicit, out_dir)?;
    if let Some(r) = radii {
        let r = parse_radii(r)?;
        let r_max = r.iter().copied().fold(0.0, f64::max);
        cfg.scenario.domain = resized_torus(&cfg.scenario.domain, r_max)?;
        cfg.scenario.expanding_radii = r;
        cfg.scenario.mode = Mode::CauchyExpandingBalls;
    }
    if cfg.scenario.expanding_radii.is_empty() {
        return Err(Error::param("--radii", "at least two radii (flag or expanding_radii)", "none"));
    }
    cfg.validate()?;
    let out = prepare_dir(&cfg)?;
    let rep = expanding_ball_run(&cfg.scenario, Some(&out))?;
    write_json(&out.dir.join(EXPAND_FILE), &rep)?;
    let mut failures = Vec::new();
    for (k, led) in rep.ledgers.iter().enumerate() {
        let dir = out.dir.join(format!("radius_{k}"));
        let s = audit_ledger(&dir.join(LEDGER_FILE), led, cfg.audit.energy_law, cfg.audit.l4_identity)?;
        write_json(&dir.join(AUDIT_FILE), &s)?;
        failures.extend(report_audit(&s));
    }
    println!(
        "cauchy differences {:?} (decreasing: {}); min d2 {:.6} vs initial {:.6}",
        rep.cauchy_differences, rep.differences_decreasing, rep.d2_min, rep.d2_initial_min
    );
    if !rep.angle_condition {
        failures.push(format!("angle condition: min d2 {} below half of {}", rep.d2_min, rep.d2_initial_min));
    }
    Ok(verdict(failures))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resized_torus_keeps_spacing() {
        let g = GridSpec::torus(5.6, 5.6, 56, 56).unwrap();
        let t = resized_torus(&g, 2.0).unwrap();
        assert_eq!((t.nx, t.ny), (80, 80));
        assert!((t.hx() - g.hx()).abs() < 1e-12);
    }
}
