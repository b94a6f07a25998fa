//! Deterministic reductions and Krylov solvers on plain slices.

use crate::error::{Error, Result};

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise summation with a fixed split tree, so the result depends only on
/// the input order.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= PAIRWISE_BLOCK {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

/// Sum of `f(k)` for `k in 0..n` with the pairwise tree.
pub fn pairwise_sum_by(n: usize, f: impl Fn(usize) -> f64) -> f64 {
    fn rec(lo: usize, hi: usize, f: &dyn Fn(usize) -> f64) -> f64 {
        if hi - lo <= PAIRWISE_BLOCK {
            return (lo..hi).map(f).sum();
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, n, &f)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    pairwise_sum_by(a.len(), |k| a[k] * b[k])
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    /// Relative tolerance on `||b - Ax|| / ||b||`.
    pub rel_tol: f64,
    /// Absolute floor, for right-hand sides that are tiny or zero.
    pub abs_tol: f64,
    pub max_iters: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            rel_tol: 1e-12,
            abs_tol: 1e-300,
            max_iters: 5000,
        }
    }
}

impl KrylovOptions {
    fn target(&self, bnorm: f64) -> f64 {
        (self.rel_tol * bnorm).max(self.abs_tol)
    }
}

/// Conjugate gradients for a symmetric positive definite operator.
/// `x` holds the initial guess and receives the solution.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    opts: KrylovOptions,
) -> Result<SolveStats> {
    let n = b.len();
    let bnorm = norm2(b);
    let target = opts.target(bnorm);
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    let mut rr = dot(&r, &r);
    if rr.sqrt() <= target {
        return Ok(SolveStats {
            iterations: 0,
            residual: rr.sqrt(),
        });
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    for it in 1..=opts.max_iters {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverDiverged {
                solver: "conjugate gradient",
                iters: it,
                residual: rr.sqrt(),
            });
        }
        let alpha = rr / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            return Ok(SolveStats {
                iterations: it,
                residual: rr_new.sqrt(),
            });
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    Err(Error::SolverDiverged {
        solver: "conjugate gradient",
        iters: opts.max_iters,
        residual: rr.sqrt(),
    })
}

/// BiCGSTAB for general nonsingular operators.
pub fn bicgstab(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    opts: KrylovOptions,
) -> Result<SolveStats> {
    let n = b.len();
    let bnorm = norm2(b);
    let target = opts.target(bnorm);
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    let mut rnorm = norm2(&r);
    if rnorm <= target {
        return Ok(SolveStats {
            iterations: 0,
            residual: rnorm,
        });
    }
    let r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=opts.max_iters {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for k in 0..n {
            p[k] = r[k] + beta * (p[k] - omega * v[k]);
        }
        apply(&p, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            break;
        }
        alpha = rho / rv;
        for k in 0..n {
            s[k] = r[k] - alpha * v[k];
        }
        let snorm = norm2(&s);
        if snorm <= target {
            axpy(alpha, &p, x);
            return Ok(SolveStats {
                iterations: it,
                residual: snorm,
            });
        }
        apply(&s, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for k in 0..n {
            x[k] += alpha * p[k] + omega * s[k];
            r[k] = s[k] - omega * t[k];
        }
        rnorm = norm2(&r);
        if rnorm <= target {
            return Ok(SolveStats {
                iterations: it,
                residual: rnorm,
            });
        }
    }
    Err(Error::SolverDiverged {
        solver: "BiCGSTAB",
        iters: opts.max_iters,
        residual: rnorm,
    })
}
