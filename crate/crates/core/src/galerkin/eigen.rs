//! Sparse symmetric matrices, banded Cholesky, and lowest eigenpairs by
//! shift-invert subspace iteration.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};

/// Compressed sparse rows of a symmetric matrix (both triangles stored).
#[derive(Debug, Clone)]
pub struct SparseSym {
    pub n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSym {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseSym { n, row_ptr, cols, vals }
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut s = 0.0;
            for q in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[q] * x[self.cols[q]];
            }
            y[r] = s;
        }
    }

    pub fn bandwidth(&self) -> usize {
        let mut b = 0;
        for r in 0..self.n {
            for q in self.row_ptr[r]..self.row_ptr[r + 1] {
                b = b.max(r.abs_diff(self.cols[q]));
            }
        }
        b
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for q in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[q])] = self.vals[q];
            }
        }
        m
    }
}

/// Lower band Cholesky factor, `band[i][k]` = `L[i][i - b + k]`.
struct BandCholesky {
    n: usize,
    b: usize,
    band: Vec<f64>,
}

impl BandCholesky {
    fn factor(a: &SparseSym) -> Result<Self> {
        let n = a.n;
        let b = a.bandwidth();
        let w = b + 1;
        let mut band = vec![0.0; n * w];
        for r in 0..n {
            for q in a.row_ptr[r]..a.row_ptr[r + 1] {
                let c = a.cols[q];
                if c <= r {
                    band[r * w + (c + b - r)] = a.vals[q];
                }
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(b);
            for j in j0..=i {
                let mut s = band[i * w + (j + b - i)];
                let k0 = j0.max(j.saturating_sub(b));
                for k in k0..j {
                    s -= band[i * w + (k + b - i)] * band[j * w + (k + b - j)];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::Eigen(format!(
                            "operator is not positive definite (pivot {s:.3e} at {i})"
                        )));
                    }
                    band[i * w + b] = s.sqrt();
                } else {
                    band[i * w + (j + b - i)] = s / band[j * w + b];
                }
            }
        }
        Ok(BandCholesky { n, b, band })
    }

    fn solve(&self, x: &mut [f64]) {
        let (n, b, w) = (self.n, self.b, self.b + 1);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(b)..i {
                s -= self.band[i * w + (k + b - i)] * x[k];
            }
            x[i] = s / self.band[i * w + b];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n.min(i + b + 1) {
                s -= self.band[k * w + (i + b - k)] * x[k];
            }
            x[i] = s / self.band[i * w + b];
        }
    }
}

/// Eigenpairs in ascending order; vectors are unit in the Euclidean norm and
/// sign-normalized so that their largest-magnitude entry is positive.
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for k in 0..v.len() {
        if v[k].abs() > v[best].abs() * (1.0 + 1e-9) {
            best = k;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

fn dense_lowest(a: &SparseSym, count: usize) -> Result<EigenPairs> {
    let eig = SymmetricEigen::new(a.to_dense());
    let mut order: Vec<usize> = (0..a.n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut values = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    for &i in order.iter().take(count) {
        values.push(eig.eigenvalues[i]);
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        fix_sign(&mut v);
        vectors.push(v);
    }
    Ok(EigenPairs { values, vectors })
}

/// Modified Gram-Schmidt, applied twice.
fn orthonormalize(cols: &mut [Vec<f64>]) -> Result<()> {
    for pass in 0..2 {
        for i in 0..cols.len() {
            let (head, tail) = cols.split_at_mut(i);
            let ci = &mut tail[0];
            for cj in head.iter() {
                let r = dot(cj, ci);
                for (a, b) in ci.iter_mut().zip(cj) {
                    *a -= r * b;
                }
            }
            let nrm = norm2(ci);
            if !(nrm > 1e-300) {
                return Err(Error::Eigen(format!("subspace collapsed at column {i} (pass {pass})")));
            }
            for a in ci.iter_mut() {
                *a /= nrm;
            }
        }
    }
    Ok(())
}

/// Lowest `count` eigenpairs of an SPD sparse matrix.
///
/// `start` provides an initial block (at least `count` columns); its quality
/// only affects the iteration count.
pub fn lowest_eigenpairs(
    a: &SparseSym,
    count: usize,
    start: Vec<Vec<f64>>,
    rel_tol: f64,
) -> Result<EigenPairs> {
    let n = a.n;
    if count > n {
        return Err(Error::Eigen(format!("{count} eigenpairs requested of a {n}-dimensional operator")));
    }
    let block = start.len();
    if n <= 600 || 2 * block >= n {
        return dense_lowest(a, count);
    }
    if block < count {
        return Err(Error::Eigen("starting block smaller than the requested count".into()));
    }
    let chol = BandCholesky::factor(a)?;
    let mut x = start;
    orthonormalize(&mut x)?;
    let mut history = Vec::new();
    let mut ax = vec![0.0; n];
    for _iter in 0..500 {
        for col in x.iter_mut() {
            chol.solve(col);
        }
        orthonormalize(&mut x)?;
        // Rayleigh-Ritz on span(x).
        let lx: Vec<Vec<f64>> = x
            .iter()
            .map(|c| {
                let mut y = vec![0.0; n];
                a.apply(c, &mut y);
                y
            })
            .collect();
        let mut h = DMatrix::zeros(block, block);
        for i in 0..block {
            for j in 0..=i {
                let v = 0.5 * (dot(&x[i], &lx[j]) + dot(&x[j], &lx[i]));
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let mut nx = vec![vec![0.0; n]; block];
        for (dst, &src) in nx.iter_mut().zip(&order) {
            for (k, c) in x.iter().enumerate() {
                let coef = eig.eigenvectors[(k, src)];
                for (a, b) in dst.iter_mut().zip(c) {
                    *a += coef * b;
                }
            }
        }
        x = nx;
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut worst: f64 = 0.0;
        for i in 0..count {
            a.apply(&x[i], &mut ax);
            let r: Vec<f64> = ax.iter().zip(&x[i]).map(|(p, q)| p - values[i] * q).collect();
            worst = worst.max(norm2(&r) / values[i].abs().max(1e-300));
        }
        history.push(worst);
        if worst <= rel_tol {
            let mut vectors: Vec<Vec<f64>> = x.into_iter().take(count).collect();
            for v in vectors.iter_mut() {
                fix_sign(v);
            }
            return Ok(EigenPairs {
                values: values.into_iter().take(count).collect(),
                vectors,
            });
        }
    }
    let tail: Vec<String> = history.iter().rev().take(5).map(|r| format!("{r:.2e}")).collect();
    Err(Error::Eigen(format!(
        "subspace iteration did not reach {rel_tol:.1e}; last residuals {}",
        tail.join(", ")
    )))
}
