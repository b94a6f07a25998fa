//! Density-weighted Gram operator `M_ij = <rho Psi_i, Psi_j>` on the span.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::field_core::{ScalarField, VectorField2};
use crate::linalg::norm2;

use super::basis::{GalerkinBasis, GalerkinCoeffs};

/// Mode values restricted to the nodes where some mode is nonzero, packed
/// for matrix products.
#[derive(Debug, Clone)]
pub struct ModeMatrix {
    n: usize,
    rows: Vec<usize>,
    weights: Vec<f64>,
    u: DMatrix<f64>,
    w: DMatrix<f64>,
}

impl ModeMatrix {
    pub fn new(basis: &GalerkinBasis) -> Self {
        let g = &basis.grid;
        let rows: Vec<usize> = (0..g.node_count())
            .filter(|&k| basis.modes.iter().any(|m| m.u()[k] != 0.0 || m.w()[k] != 0.0))
            .collect();
        let n = basis.n();
        let u = DMatrix::from_fn(rows.len(), n, |r, i| basis.modes[i].u()[rows[r]]);
        let w = DMatrix::from_fn(rows.len(), n, |r, i| basis.modes[i].w()[rows[r]]);
        let weights = rows
            .iter()
            .map(|&k| {
                let (i, j) = g.ij(k);
                g.weight(i, j)
            })
            .collect();
        ModeMatrix { n, rows, weights, u, w }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `sum_k w_k s_k (Psi_i . Psi_j)(x_k)` for nodal values `s`.
    pub fn weighted_gram(&self, s: &[f64]) -> DMatrix<f64> {
        let scale: Vec<f64> = self.rows.iter().zip(&self.weights).map(|(&k, w)| w * s[k]).collect();
        let mut su = self.u.clone();
        let mut sw = self.w.clone();
        for (r, c) in scale.iter().enumerate() {
            su.row_mut(r).scale_mut(*c);
            sw.row_mut(r).scale_mut(*c);
        }
        let mut m = self.u.tr_mul(&su);
        m += self.w.tr_mul(&sw);
        // Exact symmetry regardless of the product kernel.
        let mt = m.transpose();
        (m + mt) * 0.5
    }

    /// `a_i = <f, Psi_i>` for nodal components.
    pub fn project(&self, fu: &[f64], fw: &[f64]) -> Vec<f64> {
        let bu = DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().zip(&self.weights).map(|(&k, w)| w * fu[k]),
        );
        let bw = DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().zip(&self.weights).map(|(&k, w)| w * fw[k]),
        );
        let mut a = self.u.tr_mul(&bu);
        a += self.w.tr_mul(&bw);
        a.iter().copied().collect()
    }

    pub fn project_field(&self, f: &VectorField2) -> GalerkinCoeffs {
        GalerkinCoeffs {
            a: self.project(f.u(), f.w()),
        }
    }

    /// `sum a_i Psi_i` written into full node arrays.
    pub fn reconstruct_into(&self, a: &[f64], u: &mut [f64], w: &mut [f64]) {
        let av = DVector::from_column_slice(a);
        let ru = &self.u * &av;
        let rw = &self.w * &av;
        u.iter_mut().for_each(|x| *x = 0.0);
        w.iter_mut().for_each(|x| *x = 0.0);
        for (r, &k) in self.rows.iter().enumerate() {
            u[k] = ru[r];
            w[k] = rw[r];
        }
    }
}

/// Symmetric positive definite mass matrix with its factorization.
#[derive(Debug, Clone)]
pub struct MassOperator {
    m: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl MassOperator {
    pub fn assemble(modes: &ModeMatrix, rho: &ScalarField) -> Result<Self> {
        Self::from_matrix(modes.weighted_gram(rho.values()))
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        let chol = Cholesky::new(m.clone()).ok_or_else(|| {
            Error::NotPositiveDefinite("Cholesky factorization failed (vacuum or negative density?)".into())
        })?;
        Ok(MassOperator { m, chol })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.m * DVector::from_column_slice(x)).iter().copied().collect()
    }

    /// `M^-1 b` with one refinement sweep; fails if the residual stays above
    /// `1e-10 ||b||`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let bv = DVector::from_column_slice(b);
        let mut x = self.chol.solve(&bv);
        let mut r = &bv - &self.m * &x;
        let bn = norm2(b);
        let rn = |r: &DVector<f64>| norm2(r.as_slice());
        if rn(&r) > 1e-10 * bn {
            x += self.chol.solve(&r);
            r = &bv - &self.m * &x;
        }
        if rn(&r) > 1e-10 * bn {
            return Err(Error::SolverDiverged {
                solver: "mass solve",
                iters: 2,
                residual: rn(&r) / bn.max(f64::MIN_POSITIVE),
            });
        }
        Ok(x.iter().copied().collect())
    }

    /// Extreme eigenvalues of the coefficient-space matrix.
    pub fn spectrum_bounds(&self) -> (f64, f64) {
        let e = SymmetricEigen::new(self.m.clone()).eigenvalues;
        let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}
