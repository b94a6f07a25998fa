//! Eigenbases of the Lame operator `-mu lap - (mu+lambda) grad div`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::PhysParams;
use crate::error::{Error, Result};
use crate::field_core::ops::integrate_values;
use crate::field_core::spectral::spectral_derivative;
use crate::field_core::{inner_vec, DomainKind, GridSpec, VectorField2};
use crate::linalg::norm2;

use super::cache;
use super::eigen::{lowest_eigenpairs, SparseSym};

/// Environment variable naming the basis cache directory.
pub const CACHE_ENV: &str = "NEMATIC2D_CACHE";

/// Mode family on the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeFamily {
    Solenoidal,
    Gradient,
}

/// Identification of a closed-form torus mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FourierLabel {
    pub kx: i64,
    pub ky: i64,
    pub family: ModeFamily,
    /// `false` for the cosine phase, `true` for sine.
    pub sine: bool,
}

/// Where the modes came from; decides which operator the eigen-residual uses.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisKind {
    Fourier(Vec<FourierLabel>),
    BoxLame,
    /// Box modes zero-extended into a larger grid; `(oi, oj)` is the target
    /// node of the box's node `(0, 0)`.
    Embedded { source: GridSpec, offset: (usize, usize) },
}

#[derive(Debug, Clone)]
pub struct GalerkinBasis {
    pub grid: GridSpec,
    pub mu: f64,
    pub lambda: f64,
    pub eigvals: Vec<f64>,
    pub modes: Vec<VectorField2>,
    pub kind: BasisKind,
}

/// Coefficients `a` of `v = sum a_i Psi_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinCoeffs {
    pub a: Vec<f64>,
}

impl GalerkinCoeffs {
    pub fn zeros(n: usize) -> Self {
        GalerkinCoeffs { a: vec![0.0; n] }
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut a = vec![0.0; n];
        a[i] = 1.0;
        GalerkinCoeffs { a }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

fn fourier_modes(grid: &GridSpec, p: &PhysParams, n: usize) -> Result<GalerkinBasis> {
    let (cx, cy) = (2.0 * PI / grid.lx, 2.0 * PI / grid.ly);
    let kxmax = ((grid.nx - 1) / 2) as i64;
    let kymax = ((grid.ny - 1) / 2) as i64;
    struct Cand {
        lam: f64,
        k2: i64,
        label: FourierLabel,
    }
    let mut cands = Vec::new();
    for ky in -kymax..=kymax {
        for kx in 0..=kxmax {
            if kx == 0 && ky <= 0 {
                continue;
            }
            let q2 = (cx * kx as f64).powi(2) + (cy * ky as f64).powi(2);
            for family in [ModeFamily::Solenoidal, ModeFamily::Gradient] {
                let lam = match family {
                    ModeFamily::Solenoidal => p.mu * q2,
                    ModeFamily::Gradient => (2.0 * p.mu + p.lambda) * q2,
                };
                for sine in [false, true] {
                    cands.push(Cand {
                        lam,
                        k2: kx * kx + ky * ky,
                        label: FourierLabel { kx, ky, family, sine },
                    });
                }
            }
        }
    }
    if n > cands.len() {
        return Err(Error::param(
            "n_modes",
            format!("<= {} resolvable torus modes", cands.len()),
            n,
        ));
    }
    let fam_rank = |f: ModeFamily| match f {
        ModeFamily::Solenoidal => 0,
        ModeFamily::Gradient => 1,
    };
    cands.sort_by(|a, b| {
        a.lam
            .total_cmp(&b.lam)
            .then(a.k2.cmp(&b.k2))
            .then(a.label.kx.cmp(&b.label.kx))
            .then(a.label.ky.cmp(&b.label.ky))
            .then(fam_rank(a.label.family).cmp(&fam_rank(b.label.family)))
            .then(a.label.sine.cmp(&b.label.sine))
    });
    cands.truncate(n);
    let amp = (2.0 / grid.area()).sqrt();
    let mut modes = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut eigvals = Vec::with_capacity(n);
    for c in &cands {
        let l = c.label;
        let (qx, qy) = (cx * l.kx as f64, cy * l.ky as f64);
        let q = qx.hypot(qy);
        let dir = match l.family {
            ModeFamily::Solenoidal => [-qy / q, qx / q],
            ModeFamily::Gradient => [qx / q, qy / q],
        };
        let mut u = vec![0.0; grid.node_count()];
        let mut w = vec![0.0; grid.node_count()];
        for j in 0..grid.my() {
            for i in 0..grid.mx() {
                // Integer phase keeps the sampled trig values exact-periodic.
                let ph = 2.0 * PI
                    * (((l.kx * i as i64).rem_euclid(grid.nx as i64)) as f64 / grid.nx as f64
                        + ((l.ky * j as i64).rem_euclid(grid.ny as i64)) as f64 / grid.ny as f64);
                let s = if l.sine { ph.sin() } else { ph.cos() } * amp;
                let k = grid.idx(i, j);
                u[k] = dir[0] * s;
                w[k] = dir[1] * s;
            }
        }
        modes.push(VectorField2::new(*grid, u, w)?);
        labels.push(l);
        eigvals.push(c.lam);
    }
    Ok(GalerkinBasis {
        grid: *grid,
        mu: p.mu,
        lambda: p.lambda,
        eigvals,
        modes,
        kind: BasisKind::Fourier(labels),
    })
}

/// Interior node numbering of a box: `p = (j-1)(nx-1) + (i-1)`; dof `2p + c`.
fn interior_index(g: &GridSpec, i: usize, j: usize) -> Option<usize> {
    if g.is_boundary(i, j) {
        None
    } else {
        Some((j - 1) * (g.nx - 1) + (i - 1))
    }
}

/// Lame matrix `mu (-lap5) + (mu+lambda) D^T D` over interior box dofs, with
/// `D` the cell-centered divergence. Scaled so that its eigenpairs are those
/// of the operator in the node-weighted inner product.
pub fn box_lame_matrix(g: &GridSpec, mu: f64, lambda: f64) -> SparseSym {
    let np = (g.nx - 1) * (g.ny - 1);
    let (hx, hy) = (g.hx(), g.hy());
    let mut t = Vec::new();
    for j in 1..g.ny {
        for i in 1..g.nx {
            let p = interior_index(g, i, j).unwrap();
            for c in 0..2 {
                let r = 2 * p + c;
                t.push((r, r, mu * (2.0 / (hx * hx) + 2.0 / (hy * hy))));
                for (ii, jj, h) in [(i + 1, j, hx), (i - 1, j, hx), (i, j + 1, hy), (i, j - 1, hy)] {
                    if let Some(q) = interior_index(g, ii, jj) {
                        t.push((r, 2 * q + c, -mu / (h * h)));
                    }
                }
            }
        }
    }
    let s = mu + lambda;
    if s != 0.0 {
        for cj in 0..g.ny {
            for ci in 0..g.nx {
                let mut entries: Vec<(usize, f64)> = Vec::with_capacity(8);
                for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    if let Some(q) = interior_index(g, ci + di, cj + dj) {
                        let sx = if di == 1 { 1.0 } else { -1.0 };
                        let sy = if dj == 1 { 1.0 } else { -1.0 };
                        entries.push((2 * q, sx / (2.0 * hx)));
                        entries.push((2 * q + 1, sy / (2.0 * hy)));
                    }
                }
                for &(a, ca) in &entries {
                    for &(b, cb) in &entries {
                        t.push((a, b, s * ca * cb));
                    }
                }
            }
        }
    }
    SparseSym::from_triplets(2 * np, t)
}

/// Lowest modes of the vector Dirichlet Laplacian, used as a starting block.
fn sine_start(g: &GridSpec, count: usize) -> Vec<Vec<f64>> {
    let np = (g.nx - 1) * (g.ny - 1);
    let mut cands = Vec::new();
    for b in 1..g.ny {
        for a in 1..g.nx {
            let lam = (a as f64 / g.lx).powi(2) + (b as f64 / g.ly).powi(2);
            for c in 0..2 {
                cands.push((lam, a, b, c));
            }
        }
    }
    cands.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2, x.3).cmp(&(y.1, y.2, y.3))));
    cands
        .into_iter()
        .take(count)
        .map(|(_, a, b, c)| {
            let mut v = vec![0.0; 2 * np];
            for j in 1..g.ny {
                for i in 1..g.nx {
                    let p = interior_index(g, i, j).unwrap();
                    v[2 * p + c] = (PI * (a * i) as f64 / g.nx as f64).sin()
                        * (PI * (b * j) as f64 / g.ny as f64).sin();
                }
            }
            v
        })
        .collect()
}

fn box_modes(grid: &GridSpec, p: &PhysParams, n: usize) -> Result<GalerkinBasis> {
    let np = (grid.nx - 1) * (grid.ny - 1);
    if n > 2 * np {
        return Err(Error::param(
            "n_modes",
            format!("<= {} interior degrees of freedom", 2 * np),
            n,
        ));
    }
    let mat = box_lame_matrix(grid, p.mu, p.lambda);
    let block = (n + (n / 2).max(12)).min(2 * np);
    let pairs = lowest_eigenpairs(&mat, n, sine_start(grid, block), 1e-10)?;
    let scale = 1.0 / (grid.hx() * grid.hy()).sqrt();
    let mut modes = Vec::with_capacity(n);
    for v in &pairs.vectors {
        let mut u = vec![0.0; grid.node_count()];
        let mut w = vec![0.0; grid.node_count()];
        for j in 1..grid.ny {
            for i in 1..grid.nx {
                let q = interior_index(grid, i, j).unwrap();
                let k = grid.idx(i, j);
                u[k] = v[2 * q] * scale;
                w[k] = v[2 * q + 1] * scale;
            }
        }
        modes.push(VectorField2::new(*grid, u, w)?);
    }
    if !(pairs.values[0] > 0.0) {
        return Err(Error::Eigen(format!("lowest eigenvalue {} is not positive", pairs.values[0])));
    }
    Ok(GalerkinBasis {
        grid: *grid,
        mu: p.mu,
        lambda: p.lambda,
        eigvals: pairs.values,
        modes,
        kind: BasisKind::BoxLame,
    })
}

/// Builds the `n` lowest Lame eigenpairs on `grid`, consulting the cache
/// directory named by `NEMATIC2D_CACHE` for box grids.
pub fn build_basis(grid: &GridSpec, p: &PhysParams, n: usize) -> Result<GalerkinBasis> {
    let dir = std::env::var_os(CACHE_ENV).map(std::path::PathBuf::from);
    build_basis_cached(grid, p, n, dir.as_deref())
}

pub fn build_basis_cached(grid: &GridSpec, p: &PhysParams, n: usize, cache_dir: Option<&Path>) -> Result<GalerkinBasis> {
    grid.validate()?;
    p.validate()?;
    if n < 1 {
        return Err(Error::param("n_modes", ">= 1", n));
    }
    match grid.domain_kind {
        DomainKind::PeriodicTorus => fourier_modes(grid, p, n),
        DomainKind::DirichletBox => {
            if let Some(dir) = cache_dir {
                if let Some(b) = cache::load(dir, grid, p, n)? {
                    return Ok(b);
                }
                let b = box_modes(grid, p, n)?;
                if let Err(e) = cache::store(dir, &b) {
                    log::warn!("could not write basis cache: {e}");
                }
                Ok(b)
            } else {
                box_modes(grid, p, n)
            }
        }
    }
}

impl GalerkinBasis {
    pub fn n(&self) -> usize {
        self.modes.len()
    }

    /// `a_i = <f, Psi_i>`.
    pub fn project(&self, f: &VectorField2) -> Result<GalerkinCoeffs> {
        let a = self
            .modes
            .iter()
            .map(|m| inner_vec(f, m))
            .collect::<Result<Vec<f64>>>()?;
        Ok(GalerkinCoeffs { a })
    }

    /// `sum a_i Psi_i`.
    pub fn reconstruct(&self, c: &GalerkinCoeffs) -> Result<VectorField2> {
        if c.len() != self.n() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for {} modes",
                c.len(),
                self.n()
            )));
        }
        let nn = self.grid.node_count();
        let mut u = vec![0.0; nn];
        let mut w = vec![0.0; nn];
        for (m, &a) in self.modes.iter().zip(&c.a) {
            if a == 0.0 {
                continue;
            }
            for k in 0..nn {
                u[k] += a * m.u()[k];
                w[k] += a * m.w()[k];
            }
        }
        VectorField2::new(self.grid, u, w)
    }

    /// Largest entry of `|G - I|` for the Gram matrix `G_ij = <Psi_i, Psi_j>`.
    pub fn gram_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n() {
            for j in 0..=i {
                let g = inner_vec(&self.modes[i], &self.modes[j]).expect("same grid");
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    /// Relative eigen-residuals `||L Psi_i - lambda_i Psi_i|| / lambda_i` with
    /// the operator the basis was built from: spectral on the torus, the
    /// assembled finite-difference matrix on boxes.
    pub fn eigen_residuals(&self) -> Result<Vec<f64>> {
        match &self.kind {
            BasisKind::Fourier(_) => {
                let g = &self.grid;
                let mut out = Vec::with_capacity(self.n());
                for (m, &lam) in self.modes.iter().zip(&self.eigvals) {
                    let d = |f: &[f64], ox, oy| spectral_derivative(g, f, ox, oy);
                    let (uxx, uyy, uxy) = (d(m.u(), 2, 0)?, d(m.u(), 0, 2)?, d(m.u(), 1, 1)?);
                    let (wxx, wyy, wxy) = (d(m.w(), 2, 0)?, d(m.w(), 0, 2)?, d(m.w(), 1, 1)?);
                    let s = self.mu + self.lambda;
                    let mut r2 = vec![0.0; g.node_count()];
                    for k in 0..g.node_count() {
                        let lu = -self.mu * (uxx[k] + uyy[k]) - s * (uxx[k] + wxy[k]);
                        let lw = -self.mu * (wxx[k] + wyy[k]) - s * (uxy[k] + wyy[k]);
                        let (ru, rw) = (lu - lam * m.u()[k], lw - lam * m.w()[k]);
                        r2[k] = ru * ru + rw * rw;
                    }
                    out.push(integrate_values(g, &r2).sqrt() / lam);
                }
                Ok(out)
            }
            BasisKind::BoxLame => self.box_residuals(&self.grid, (0, 0)),
            BasisKind::Embedded { source, offset } => self.box_residuals(source, *offset),
        }
    }

    fn box_residuals(&self, src: &GridSpec, off: (usize, usize)) -> Result<Vec<f64>> {
        let mat = box_lame_matrix(src, self.mu, self.lambda);
        let np = (src.nx - 1) * (src.ny - 1);
        let h = (src.hx() * src.hy()).sqrt();
        let mut out = Vec::with_capacity(self.n());
        for (m, &lam) in self.modes.iter().zip(&self.eigvals) {
            let mut x = vec![0.0; 2 * np];
            for j in 1..src.ny {
                for i in 1..src.nx {
                    let q = interior_index(src, i, j).unwrap();
                    let k = self.grid.idx(
                        (i + off.0) % self.grid.mx(),
                        (j + off.1) % self.grid.my(),
                    );
                    x[2 * q] = m.u()[k] * h;
                    x[2 * q + 1] = m.w()[k] * h;
                }
            }
            let mut y = vec![0.0; 2 * np];
            mat.apply(&x, &mut y);
            let r: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - lam * b).collect();
            out.push(norm2(&r) / lam);
        }
        Ok(out)
    }

    /// Zero-extends box modes into `target`, placing box node `(0,0)` at
    /// target node `offset`. Spacings must agree.
    pub fn embed(&self, target: &GridSpec, offset: (usize, usize)) -> Result<GalerkinBasis> {
        if self.kind != BasisKind::BoxLame {
            return Err(Error::GridMismatch("only box bases can be embedded".into()));
        }
        let src = &self.grid;
        let rel = |a: f64, b: f64| ((a - b) / a).abs() < 1e-12;
        if !rel(src.hx(), target.hx()) || !rel(src.hy(), target.hy()) {
            return Err(Error::GridMismatch("embedding needs equal spacings".into()));
        }
        let fits = |o: usize, len: usize, m: usize| {
            if target.is_periodic() {
                len < m
            } else {
                o + len < m
            }
        };
        if !fits(offset.0, src.nx, target.mx()) || !fits(offset.1, src.ny, target.my()) {
            return Err(Error::GridMismatch("box does not fit inside the target grid".into()));
        }
        let mut modes = Vec::with_capacity(self.n());
        for m in &self.modes {
            let mut u = vec![0.0; target.node_count()];
            let mut w = vec![0.0; target.node_count()];
            for j in 0..src.my() {
                for i in 0..src.mx() {
                    let ks = src.idx(i, j);
                    let kt = target.idx((i + offset.0) % target.mx(), (j + offset.1) % target.my());
                    u[kt] = m.u()[ks];
                    w[kt] = m.w()[ks];
                }
            }
            modes.push(VectorField2::new(*target, u, w)?);
        }
        Ok(GalerkinBasis {
            grid: *target,
            mu: self.mu,
            lambda: self.lambda,
            eigvals: self.eigvals.clone(),
            modes,
            kind: BasisKind::Embedded {
                source: *src,
                offset,
            },
        })
    }
}
