//! Numerical checks of the functional inequalities behind the a priori bounds.

mod checks;
mod ensemble;
mod report;

pub use checks::{
    elliptic_estimate_monitor, eng_ensembles, eng_interpolation_check, eng_ratios, eng_study, ladyzhenskaya_check,
    ladyzhenskaya_ratio, ladyzhenskaya_slack, ladyzhenskaya_slack_decay, rigidity_check, rigidity_disagreement, rigidity_oracle, rigidity_sample, angle_oracle_example,
    EllipticComponent, EllipticReport, EngEstimate, EngReport, LadyzhenskayaReport, RigidityReport, RigiditySample,
    SlackDecay,
};
pub use ensemble::{bump_profile, sine_series, Generator, SampleEnsemble};
pub use report::{run_suite, EllipticStudy, InequalityReport, Suite, SuiteOptions, ELLIPTIC_REFINEMENT_TOL, ORACLE_TOL};
