//! Coupled time stepping, ledgers, audits and study drivers.

mod audit;
mod ledger;
mod run;
mod scenario;
mod studies;

pub use audit::{energy_law_audit, l4_identity_audit, ledger_invariants, InvariantCheck, refinement_study, AuditKind, AuditReport, RefinementLevel, RefinementReport};
pub use ledger::{header_line, Ledger, LedgerRow, LedgerWriter};
pub use run::{run, run_with_basis, OutputSpec, RunManifest, RunOutput, RunStatus, Simulation, State, LEDGER_FILE, MANIFEST_FILE, SNAPSHOT_DIR};
pub use scenario::{
    preset, DirectorOptions, InitialData, InitialFields, Mode, MonitorOptions, ScenarioSpec, SolverOptions, Stage, PRESETS,
};
pub use studies::{
    ball_box, continuation_run, expanding_ball_run, modes_for_radius, trace_difference, BallSummary, ContinuationReport,
    ExpandingBallReport, StageSummary,
};
