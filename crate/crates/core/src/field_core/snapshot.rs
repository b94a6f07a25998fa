//! Field snapshot files.
//!
//! A snapshot is a CSV file. The first line is
//! `# grid <nx> <ny> <lx> <ly> <domain_kind>`, the second is the column
//! header, and each following row holds one node in row-major order
//! (`i` fastest), so row `k` is node `j*mx + i`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::grid::GridSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: GridSpec,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl Snapshot {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

pub fn grid_header(g: &GridSpec) -> String {
    format!("# grid {} {} {} {} {}", g.nx, g.ny, g.lx, g.ly, g.domain_kind)
}

pub fn parse_grid_header(line: &str) -> Option<GridSpec> {
    let mut it = line.split_whitespace();
    if it.next()? != "#" || it.next()? != "grid" {
        return None;
    }
    let nx = it.next()?.parse().ok()?;
    let ny = it.next()?.parse().ok()?;
    let lx = it.next()?.parse().ok()?;
    let ly = it.next()?.parse().ok()?;
    let kind = it.next()?.parse().ok()?;
    GridSpec::new(kind, lx, ly, nx, ny).ok()
}

pub fn write_snapshot(path: &Path, grid: &GridSpec, columns: &[(&str, &[f64])]) -> Result<()> {
    for (name, c) in columns {
        if c.len() != grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "snapshot column {name}: {} values for {} nodes",
                c.len(),
                grid.node_count()
            )));
        }
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", grid_header(grid))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["i".to_string(), "j".to_string()];
    header.extend(columns.iter().map(|(n, _)| n.to_string()));
    w.write_record(&header)?;
    for k in 0..grid.node_count() {
        let (i, j) = grid.ij(k);
        let mut rec = vec![i.to_string(), j.to_string()];
        rec.extend(columns.iter().map(|(_, c)| c[k].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let fmt_err = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = BufReader::new(File::open(path)?);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let grid = parse_grid_header(first.trim_end())
        .ok_or_else(|| fmt_err(format!("bad grid header line: {:?}", first.trim_end())))?;
    let mut r = csv::Reader::from_reader(reader);
    let names: Vec<String> = r.headers()?.iter().skip(2).map(str::to_string).collect();
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.node_count()); names.len()];
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != names.len() + 2 {
            return Err(fmt_err(format!("row {row} has {} fields", rec.len())));
        }
        let (i, j) = grid.ij(row);
        if rec[0].parse::<usize>().ok() != Some(i) || rec[1].parse::<usize>().ok() != Some(j) {
            return Err(fmt_err(format!("row {row} is out of row-major order")));
        }
        for (c, col) in cols.iter_mut().enumerate() {
            let v = rec[c + 2]
                .parse::<f64>()
                .map_err(|e| fmt_err(format!("row {row}: {e}")))?;
            col.push(v);
        }
    }
    if cols.iter().any(|c| c.len() != grid.node_count()) {
        return Err(fmt_err("row count does not match grid".into()));
    }
    Ok(Snapshot {
        grid,
        columns: names.into_iter().zip(cols).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let g = GridSpec::dirichlet_box(1.5, 0.1 + 0.2, 8, 9).unwrap();
        let a: Vec<f64> = (0..g.node_count()).map(|k| (k as f64).sqrt() / 3.0).collect();
        let b: Vec<f64> = (0..g.node_count()).map(|k| -(k as f64) * 1e-17).collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_snapshot(&p, &g, &[("rho", &a), ("d1", &b)]).unwrap();
        let first = std::fs::read_to_string(&p).unwrap();
        assert!(first.starts_with("# grid 8 9 1.5 0.30000000000000004 dirichlet-box\n"));
        let s = read_snapshot(&p).unwrap();
        assert_eq!(s.grid, g);
        assert_eq!(s.column("rho").unwrap(), a.as_slice());
        assert_eq!(s.column("d1").unwrap(), b.as_slice());
    }

    #[test]
    fn rejects_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        std::fs::write(&p, "# grd 8 8 1 1 periodic-torus\ni,j\n").unwrap();
        assert!(matches!(read_snapshot(&p), Err(Error::Format { .. })));
    }
}
