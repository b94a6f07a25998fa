use std::f64::consts::PI;

use nematic2d::energy::SchemeParams;
use nematic2d::field_core::snapshot::read_snapshot;
use nematic2d::field_core::GridSpec;
use nematic2d::sim::{
    energy_law_audit, ledger_invariants, preset, run, InitialData, Ledger, Mode, OutputSpec, RunManifest, RunStatus,
    ScenarioSpec, LEDGER_FILE, MANIFEST_FILE, SNAPSHOT_DIR,
};
use proptest::prelude::*;

fn small(seed: u64) -> ScenarioSpec {
    let mut s = preset("small-energy").unwrap();
    s.name = "small-test".into();
    s.domain = GridSpec::torus(2.0 * PI, 2.0 * PI, 16, 16).unwrap();
    s.scheme = SchemeParams { n_modes: 8, dt: 0.01, t_end: 0.1, ..s.scheme };
    s.initial = InitialData::Smooth { rho_mean: 1.0, rho_amp: 0.1, v_amp: 0.1, d_amp: 0.3, harmonics: 2 };
    s.seed = seed;
    s
}

#[test]
fn ledgers_are_byte_identical_and_manifest_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str| OutputSpec { dir: dir.path().join(name), snap_every: 0 };
    let spec = small(3);
    run(&spec, Some(&out("a"))).unwrap();
    run(&spec, Some(&out("b"))).unwrap();
    let bytes = |name: &str| std::fs::read(dir.path().join(name).join(LEDGER_FILE)).unwrap();
    assert_eq!(bytes("a"), bytes("b"));

    let manifest: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a").join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest.status, RunStatus::Completed);
    assert_eq!(manifest.steps, 10);
    run(&manifest.spec, Some(&out("c"))).unwrap();
    assert_eq!(bytes("a"), bytes("c"));

    let ledger = Ledger::read_csv(&dir.path().join("a").join(LEDGER_FILE)).unwrap();
    assert_eq!(ledger.rows.len(), 11);
}

#[test]
fn snapshots_carry_the_grid_header() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small(1);
    let out = OutputSpec { dir: dir.path().to_path_buf(), snap_every: 5 };
    let res = run(&spec, Some(&out)).unwrap();
    assert_eq!(res.snapshots.len(), 3);
    let first = std::fs::read_to_string(dir.path().join(SNAPSHOT_DIR).join("snap_000005.csv")).unwrap();
    let header = first.lines().next().unwrap();
    assert_eq!(header, format!("# grid 16 16 {} {} periodic-torus", 2.0 * PI, 2.0 * PI));
    let snap = read_snapshot(&res.snapshots[2]).unwrap();
    assert_eq!(snap.grid, spec.domain);
    assert_eq!(snap.column("rho").unwrap(), res.final_state.rho.values());
}

#[test]
fn delta_and_gamma_levels_run_with_positive_density() {
    for (mode, eps, delta) in [(Mode::DeltaLevel, 0.0, 1e-3), (Mode::GammaLevel, 0.0, 0.0)] {
        let mut s = small(2);
        s.mode = mode;
        s.scheme.eps = eps;
        s.scheme.delta = delta;
        let out = run(&s, None).unwrap();
        assert!(ledger_invariants(&out.ledger).iter().all(|c| c.passed), "{mode:?}");
        assert!(energy_law_audit(&out.ledger).unwrap().max_positive <= 1e-10, "{mode:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn every_row_satisfies_the_ledger_invariants(seed in 0u64..1000) {
        let out = run(&small(seed), None).unwrap();
        for c in ledger_invariants(&out.ledger) {
            prop_assert!(c.passed, "{}: {}", c.name, c.detail);
        }
        let d2_0 = out.ledger.rows[0].d2_min;
        prop_assert!(out.ledger.rows.iter().all(|r| r.d2_min >= d2_0 - 1e-8));
    }
}
