//! Per-step energy ledger with a fixed CSV schema.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One ledger row. Column order is the CSV schema.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LedgerRow {
    pub step: usize,
    pub t: f64,
    /// Kinetic + pressure potential + director energy.
    pub energy: f64,
    /// Viscous dissipation + `nu theta int |tension|^2`.
    pub dissipation: f64,
    /// `energy + delta/(beta-1) int rho^beta`.
    pub energy_delta: f64,
    pub kinetic: f64,
    pub pressure_energy: f64,
    pub director_energy: f64,
    pub visc_diss: f64,
    pub tension_sq: f64,
    /// Viscous dissipation + `nu theta (int |lap d|^2 - int |grad d|^4)`.
    pub dissipation_l4: f64,
    /// Discrete `eps int h'(rho) |grad rho|^2` from the artificial viscosity.
    pub art_diss: f64,
    pub mass: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub d2_min: f64,
    pub unit_violation: f64,
    pub grad_d_l4_pow4: f64,
    pub lap_d_l2_sq: f64,
    pub hess_d_l2_sq: f64,
    /// `sqrt(eps int_0^t int |grad rho|^2)`.
    pub eps_grad_rho_qt: f64,
    /// `delta^(1/q) ||rho||_(L^q(Q_t))` with `q = beta + theta'`.
    pub delta_rho_qt: f64,
    pub g1_lhs: f64,
    pub g1_rhs: f64,
    pub g2_lhs: f64,
    pub g2_rhs: f64,
    /// `||v||_4^4 / (||grad v||^2 ||v||^2)`, 0 for `v = 0`.
    pub lady_ratio: f64,
    pub dvdt_norm: f64,
    pub density_iters: usize,
    pub director_iters: usize,
    pub momentum_iters: usize,
    pub outer_iters: usize,
}

impl LedgerRow {
    pub fn floats(&self) -> [(&'static str, f64); 28] {
        [
            ("t", self.t),
            ("energy", self.energy),
            ("dissipation", self.dissipation),
            ("energy_delta", self.energy_delta),
            ("kinetic", self.kinetic),
            ("pressure_energy", self.pressure_energy),
            ("director_energy", self.director_energy),
            ("visc_diss", self.visc_diss),
            ("tension_sq", self.tension_sq),
            ("dissipation_l4", self.dissipation_l4),
            ("art_diss", self.art_diss),
            ("mass", self.mass),
            ("rho_min", self.rho_min),
            ("rho_max", self.rho_max),
            ("d2_min", self.d2_min),
            ("unit_violation", self.unit_violation),
            ("grad_d_l4_pow4", self.grad_d_l4_pow4),
            ("lap_d_l2_sq", self.lap_d_l2_sq),
            ("hess_d_l2_sq", self.hess_d_l2_sq),
            ("eps_grad_rho_qt", self.eps_grad_rho_qt),
            ("delta_rho_qt", self.delta_rho_qt),
            ("g1_lhs", self.g1_lhs),
            ("g1_rhs", self.g1_rhs),
            ("g2_lhs", self.g2_lhs),
            ("g2_rhs", self.g2_rhs),
            ("lady_ratio", self.lady_ratio),
            ("dvdt_norm", self.dvdt_norm),
            ("step", self.step as f64),
        ]
    }

    /// Name of the first non-finite column.
    pub fn non_finite(&self) -> Option<&'static str> {
        self.floats().into_iter().find(|(_, v)| !v.is_finite()).map(|(k, _)| k)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub rows: Vec<LedgerRow>,
}

impl Ledger {
    pub fn column(&self, f: impl Fn(&LedgerRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn last(&self) -> Option<&LedgerRow> {
        self.rows.last()
    }

    /// Checks strictly increasing `t` and finite entries.
    pub fn check(&self) -> Result<()> {
        for (k, r) in self.rows.iter().enumerate() {
            if let Some(c) = r.non_finite() {
                return Err(Error::NonFinite { field: c, step: r.step });
            }
            if k > 0 && !(r.t > self.rows[k - 1].t) {
                return Err(Error::Diagnostic(format!("ledger time not increasing at row {k}")));
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = LedgerWriter::create(path)?;
        for r in &self.rows {
            w.push(r)?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Ledger> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        let expected = header_line();
        let got: Vec<&str> = headers.iter().collect();
        if got.join(",") != expected {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: "ledger header does not match the schema".into(),
            });
        }
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<LedgerRow>, _>>()?;
        Ok(Ledger { rows })
    }
}

/// Comma-separated column names.
pub fn header_line() -> String {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.serialize(LedgerRow::default()).expect("in-memory write");
        w.flush().expect("in-memory flush");
    }
    let s = String::from_utf8(buf).expect("utf8");
    s.lines().next().unwrap_or_default().to_string()
}

/// Streaming CSV writer that flushes each row, so a failed run leaves a
/// complete prefix on disk.
pub struct LedgerWriter {
    inner: csv::Writer<File>,
}

impl LedgerWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(LedgerWriter {
            inner: csv::Writer::from_path(path)?,
        })
    }

    pub fn push(&mut self, row: &LedgerRow) -> Result<()> {
        self.inner.serialize(row)?;
        self.inner.flush()?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}
