//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{preset, ScenarioSpec, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputOptions {
    pub dir: PathBuf,
    /// Snapshot cadence in steps; 0 disables snapshots.
    pub snap_every: usize,
}

impl Default for OutputOptions {
    fn default() -> Self {
        OutputOptions { dir: PathBuf::from("out"), snap_every: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditToggles {
    pub energy_law: bool,
    pub l4_identity: bool,
}

impl Default for AuditToggles {
    fn default() -> Self {
        AuditToggles { energy_law: true, l4_identity: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum LogLevel {
    Error,
    Warn,
    #[default]
    Info,
    Debug,
    Trace,
}

impl LogLevel {
    pub fn filter(self) -> log::LevelFilter {
        match self {
            LogLevel::Error => log::LevelFilter::Error,
            LogLevel::Warn => log::LevelFilter::Warn,
            LogLevel::Info => log::LevelFilter::Info,
            LogLevel::Debug => log::LevelFilter::Debug,
            LogLevel::Trace => log::LevelFilter::Trace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogOptions {
    pub level: LogLevel,
}

/// Everything a run needs: the scenario plus output, audit and logging settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub output: OutputOptions,
    #[serde(default)]
    pub audit: AuditToggles,
    #[serde(default)]
    pub log: LogOptions,
}

impl RunConfig {
    pub fn from_preset(name: &str) -> Result<Self> {
        Ok(RunConfig {
            scenario: preset(name)?,
            output: OutputOptions::default(),
            audit: AuditToggles::default(),
            log: LogOptions::default(),
        })
    }

    /// Parses and validates; unknown keys, missing keys and range violations
    /// are errors naming the key.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()
    }
}

/// Parses `eps:delta:n` stage lists separated by commas.
pub fn parse_stages(s: &str) -> Result<Vec<Stage>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|part| {
            let f: Vec<&str> = part.trim().split(':').collect();
            let bad = || Error::param("--stages", "eps:delta:n_modes[,eps:delta:n_modes...]", part);
            if f.len() != 3 {
                return Err(bad());
            }
            Ok(Stage {
                eps: f[0].parse().map_err(|_| bad())?,
                delta: f[1].parse().map_err(|_| bad())?,
                n_modes: f[2].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Parses a comma-separated list of radii.
pub fn parse_radii(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::param("--radii", "comma-separated numbers", p)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::PRESETS;

    const MINIMAL: &str = r#"
[scenario]
name = "minimal"

[scenario.domain]
domain_kind = "periodic-torus"
lx = 6.283185307179586
ly = 6.283185307179586
nx = 16
ny = 16

[scenario.scheme]
eps = 0.05
delta = 0.001
beta = 8.0
n_modes = 8
dt = 0.001
t_end = 0.01

[scenario.initial]
kind = "equilibrium"
rho = 1.0
"#;

    #[test]
    fn minimal_config_gets_documented_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.output, OutputOptions::default());
        assert_eq!(c.audit, AuditToggles::default());
        assert_eq!(c.log.level, LogLevel::Info);
        assert_eq!(c.scenario.phys, crate::energy::PhysParams::default());
        assert_eq!(c.scenario.seed, 0);
        assert!(c.scenario.continuation.is_empty());
    }

    #[test]
    fn gamma_range_error_names_key() {
        let text = format!("{MINIMAL}\n[scenario.phys]\nmu = 1.0\nlambda = 0.0\nnu = 1.0\ntheta = 1.0\na = 1.0\ngamma = 0.5\nrho_inf = 1.0\n");
        let e = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(e.contains("`gamma`") && e.contains("> 1"), "{e}");
    }

    #[test]
    fn unknown_and_missing_keys_are_errors() {
        let e = RunConfig::parse(&MINIMAL.replace("nx = 16", "nx = 16\nbogus = 1")).unwrap_err().to_string();
        assert!(e.contains("bogus"), "{e}");
        let e = RunConfig::parse(&MINIMAL.replace("dt = 0.001\n", "")).unwrap_err().to_string();
        assert!(e.contains("dt"), "{e}");
    }

    #[test]
    fn non_monotone_stages_are_rejected() {
        let text = format!("{MINIMAL}\n[[scenario.continuation]]\neps = 0.02\ndelta = 0.001\nn_modes = 8\n[[scenario.continuation]]\neps = 0.04\ndelta = 0.001\nn_modes = 8\n");
        let e = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(e.contains("continuation[1].eps"), "{e}");
    }

    #[test]
    fn presets_round_trip_through_toml() {
        for name in PRESETS {
            let c = RunConfig::from_preset(name).unwrap();
            let text = c.to_toml().unwrap();
            assert_eq!(RunConfig::parse(&text).unwrap(), c, "{name}");
        }
    }

    #[test]
    fn stage_and_radius_lists() {
        let s = parse_stages("0.04:1e-3:24, 0.02:1e-3:24").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1], Stage { eps: 0.02, delta: 1e-3, n_modes: 24 });
        assert!(parse_stages("0.1:2").is_err());
        assert_eq!(parse_radii("1,1.2, 1.4").unwrap(), vec![1.0, 1.2, 1.4]);
        assert!(parse_radii("1,x").is_err());
    }
}
