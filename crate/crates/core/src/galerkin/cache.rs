//! On-disk cache of box eigenbases.
//!
//! File layout, version 1:
//! line 1: `nematic2d-basis 1`
//! line 2: JSON header `{grid, mu, lambda, n, hash}`
//! then little-endian f64 data: `n` eigenvalues, followed by each mode's
//! `u` then `w` node arrays in row-major order.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::energy::PhysParams;
use crate::error::{Error, Result};
use crate::field_core::{GridSpec, VectorField2};

use super::basis::{BasisKind, GalerkinBasis};

const MAGIC: &str = "nematic2d-basis 1";

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct Header {
    grid: GridSpec,
    mu: f64,
    lambda: f64,
    n: usize,
    hash: String,
}

/// Content hash of everything that determines the basis.
pub fn basis_key(grid: &GridSpec, mu: f64, lambda: f64, n: usize) -> String {
    let mut h = Sha256::new();
    h.update(MAGIC.as_bytes());
    h.update(serde_json::to_vec(grid).expect("grid serializes"));
    h.update(mu.to_le_bytes());
    h.update(lambda.to_le_bytes());
    h.update((n as u64).to_le_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("basis-{}.bin", &key[..24]))
}

pub fn store(dir: &Path, b: &GalerkinBasis) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let key = basis_key(&b.grid, b.mu, b.lambda, b.n());
    let header = Header {
        grid: b.grid,
        mu: b.mu,
        lambda: b.lambda,
        n: b.n(),
        hash: key.clone(),
    };
    let mut buf = Vec::new();
    writeln!(buf, "{MAGIC}")?;
    writeln!(buf, "{}", serde_json::to_string(&header)?)?;
    for v in &b.eigvals {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for m in &b.modes {
        for v in m.u().iter().chain(m.w()) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let path = cache_path(dir, &key);
    // Write then rename, so concurrent readers never see a partial file.
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, &buf)?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

pub fn load(dir: &Path, grid: &GridSpec, p: &PhysParams, n: usize) -> Result<Option<GalerkinBasis>> {
    let key = basis_key(grid, p.mu, p.lambda, n);
    let path = cache_path(dir, &key);
    if !path.exists() {
        return Ok(None);
    }
    let fmt = |reason: &str| Error::Format {
        path: path.clone(),
        reason: reason.to_string(),
    };
    let mut r = BufReader::new(fs::File::open(&path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != MAGIC {
        return Err(fmt("unknown basis cache version"));
    }
    line.clear();
    r.read_line(&mut line)?;
    let header: Header = serde_json::from_str(line.trim_end()).map_err(|e| fmt(&e.to_string()))?;
    let expected = Header {
        grid: *grid,
        mu: p.mu,
        lambda: p.lambda,
        n,
        hash: key,
    };
    if header != expected {
        return Err(fmt("header does not match the requested basis"));
    }
    let mut raw = Vec::new();
    r.read_to_end(&mut raw)?;
    let nn = grid.node_count();
    if raw.len() != 8 * (n + 2 * n * nn) {
        return Err(fmt("truncated data block"));
    }
    let vals: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let eigvals = vals[..n].to_vec();
    let mut modes = Vec::with_capacity(n);
    for i in 0..n {
        let base = n + 2 * nn * i;
        modes.push(VectorField2::new(
            *grid,
            vals[base..base + nn].to_vec(),
            vals[base + nn..base + 2 * nn].to_vec(),
        )?);
    }
    Ok(Some(GalerkinBasis {
        grid: *grid,
        mu: p.mu,
        lambda: p.lambda,
        eigvals,
        modes,
        kind: BasisKind::BoxLame,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::build_basis_cached;

    #[test]
    fn cache_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::dirichlet_box(1.0, 1.0, 8, 8).unwrap();
        let p = PhysParams::default();
        let a = build_basis_cached(&g, &p, 5, Some(dir.path())).unwrap();
        let key = basis_key(&g, p.mu, p.lambda, 5);
        assert!(cache_path(dir.path(), &key).exists());
        let b = load(dir.path(), &g, &p, 5).unwrap().unwrap();
        assert_eq!(a.eigvals, b.eigvals);
        assert_eq!(a.modes, b.modes);
        let c = build_basis_cached(&g, &p, 5, Some(dir.path())).unwrap();
        assert_eq!(c.modes, a.modes);
    }

    #[test]
    fn key_depends_on_parameters() {
        let g = GridSpec::dirichlet_box(1.0, 1.0, 8, 8).unwrap();
        assert_ne!(basis_key(&g, 1.0, 0.0, 5), basis_key(&g, 1.0, 0.1, 5));
        assert_ne!(basis_key(&g, 1.0, 0.0, 5), basis_key(&g, 1.0, 0.0, 6));
    }

    #[test]
    fn corrupt_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::dirichlet_box(1.0, 1.0, 8, 8).unwrap();
        let p = PhysParams::default();
        let key = basis_key(&g, p.mu, p.lambda, 3);
        fs::write(cache_path(dir.path(), &key), "garbage\n").unwrap();
        assert!(matches!(load(dir.path(), &g, &p, 3), Err(Error::Format { .. })));
    }
}
