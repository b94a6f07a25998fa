use std::collections::HashMap;
use std::path::PathBuf;

use nematic2d::cli::RunConfig;
use nematic2d::field_core::GridSpec;
use nematic2d::inequality::{ladyzhenskaya_check, Generator, SampleEnsemble};
use nematic2d::sim::{energy_law_audit, l4_identity_audit, preset, run, Ledger, OutputSpec, PRESETS};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: nematic2d::Error) -> PyErr {
    match e.kind() {
        "param" | "config" | "invalid-grid" => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Ledger as a column-name to values map.
fn columns(ledger: &Ledger) -> HashMap<String, Vec<f64>> {
    let mut out: HashMap<String, Vec<f64>> = HashMap::new();
    for row in &ledger.rows {
        out.entry("step".into()).or_default().push(row.step as f64);
        for (name, v) in row.floats() {
            out.entry(name.into()).or_default().push(v);
        }
    }
    out
}

/// Names of the shipped scenario presets.
#[pyfunction]
fn presets() -> Vec<&'static str> {
    PRESETS.to_vec()
}

/// TOML configuration for a preset, editable and accepted by `run`.
#[pyfunction]
fn preset_config(name: &str) -> PyResult<String> {
    RunConfig::from_preset(name).and_then(|c| c.to_toml()).map_err(to_py)
}

/// Runs a preset or a TOML configuration and returns the ledger columns.
/// `t_end` and `seed` override the scenario values.
#[pyfunction]
#[pyo3(signature = (preset_name=None, config=None, out=None, t_end=None, seed=None))]
fn run_scenario(
    py: Python<'_>,
    preset_name: Option<&str>,
    config: Option<&str>,
    out: Option<PathBuf>,
    t_end: Option<f64>,
    seed: Option<u64>,
) -> PyResult<HashMap<String, Vec<f64>>> {
    let mut spec = match (preset_name, config) {
        (Some(name), None) => preset(name).map_err(to_py)?,
        (None, Some(text)) => RunConfig::parse(text).map_err(to_py)?.scenario,
        _ => return Err(PyValueError::new_err("pass exactly one of preset_name and config")),
    };
    if let Some(t) = t_end {
        spec.scheme.t_end = t;
    }
    if let Some(s) = seed {
        spec.seed = s;
    }
    let out = out.map(|dir| OutputSpec { dir, snap_every: 0 });
    let res = py.detach(|| run(&spec, out.as_ref())).map_err(to_py)?;
    Ok(columns(&res.ledger))
}

/// Energy-law and l4-identity audit summaries of a ledger CSV.
#[pyfunction]
fn audit(path: PathBuf) -> PyResult<HashMap<String, f64>> {
    let ledger = Ledger::read_csv(&path).map_err(to_py)?;
    let e = energy_law_audit(&ledger).map_err(to_py)?;
    let l = l4_identity_audit(&ledger).map_err(to_py)?;
    Ok(HashMap::from([
        ("energy_law_max_positive".into(), e.max_positive),
        ("energy_law_max_abs".into(), e.max_abs),
        ("l4_identity_max_positive".into(), l.max_positive),
        ("l4_identity_max_abs".into(), l.max_abs),
    ]))
}

/// Worst Ladyzhenskaya ratio and its bound on a `cells x cells` box of side pi.
#[pyfunction]
#[pyo3(signature = (cells=64, samples=20, seed=2024))]
fn ladyzhenskaya(py: Python<'_>, cells: usize, samples: usize, seed: u64) -> PyResult<(f64, f64)> {
    let grid = GridSpec::dirichlet_box(std::f64::consts::PI, std::f64::consts::PI, cells, cells).map_err(to_py)?;
    let ens = SampleEnsemble { generator: Generator::RandomBandLimited, count: samples, seed, grid };
    let rep = py.detach(|| ladyzhenskaya_check(&ens)).map_err(to_py)?;
    Ok((rep.worst_ratio, rep.bound))
}

#[pymodule]
fn nematic2d_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(preset_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(audit, m)?)?;
    m.add_function(wrap_pyfunction!(ladyzhenskaya, m)?)?;
    Ok(())
}
