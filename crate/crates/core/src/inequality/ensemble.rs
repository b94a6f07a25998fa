//! Seeded sample generators satisfying each inequality's hypotheses.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_core::{DirectorField, DomainKind, GridSpec};

/// Sample family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Generator {
    /// Sine series with modes `1..=max_mode` per axis and uniform coefficients.
    TrigPolynomial { max_mode: usize },
    /// Sine series with a random cutoff up to half the Nyquist mode and a
    /// random spectral decay.
    RandomBandLimited,
    /// Smooth radial bump of random radius in `[r_min, r_max]` and random
    /// position, times a low trigonometric sum.
    Localized { r_min: f64, r_max: f64 },
    /// `d = (sin phi, cos phi)` with `|phi| <= arccos(d2_min)` and `grad phi`
    /// supported away from the edges.
    AngleDirector { d2_min: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleEnsemble {
    pub generator: Generator,
    pub count: usize,
    pub seed: u64,
    pub grid: GridSpec,
}

/// `exp(1 - 1/(1 - s^2))` for `|s| < 1`, else 0, with its first two derivatives.
pub fn bump_profile(s: f64) -> (f64, f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = 1.0 - s * s;
    let g = (1.0 - 1.0 / q).exp();
    let g1 = g * (-2.0 * s / (q * q));
    let g2 = g * (4.0 * s * s - (2.0 + 6.0 * s * s) * q) / q.powi(4);
    (g, g1, g2)
}

/// Nodal values of `sum_kl c_kl sin(k pi x / lx) sin(l pi y / ly)`, evaluated
/// as a separable matrix product.
pub fn sine_series(g: &GridSpec, coeffs: &DMatrix<f64>) -> Vec<f64> {
    let (mx, my) = (g.mx(), g.my());
    let (kx, ky) = (coeffs.nrows(), coeffs.ncols());
    let sx = DMatrix::from_fn(mx, kx, |i, k| ((k + 1) as f64 * PI * i as f64 * g.hx() / g.lx).sin());
    let sy = DMatrix::from_fn(my, ky, |j, l| ((l + 1) as f64 * PI * j as f64 * g.hy() / g.ly).sin());
    // vals[j, i] = sum_kl sy[j,l] c[k,l] sx[i,k]
    let vals = &sy * coeffs.transpose() * sx.transpose();
    let mut out = vec![0.0; g.node_count()];
    for j in 0..my {
        for i in 0..mx {
            out[g.idx(i, j)] = vals[(j, i)];
        }
    }
    out
}

impl SampleEnsemble {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.count == 0 {
            return Err(Error::param("count", ">= 1", self.count));
        }
        let boxed = self.grid.domain_kind == DomainKind::DirichletBox;
        match self.generator {
            Generator::TrigPolynomial { max_mode } => {
                if max_mode < 1 || 4 * max_mode > self.grid.nx.min(self.grid.ny) {
                    return Err(Error::param("max_mode", "in [1, n/4]", max_mode));
                }
                if !boxed {
                    return Err(Error::param("grid.domain_kind", "dirichlet-box", self.grid.domain_kind));
                }
            }
            Generator::RandomBandLimited => {
                if !boxed {
                    return Err(Error::param("grid.domain_kind", "dirichlet-box", self.grid.domain_kind));
                }
            }
            Generator::Localized { r_min, r_max } => {
                if !boxed {
                    return Err(Error::param("grid.domain_kind", "dirichlet-box", self.grid.domain_kind));
                }
                if !(r_min > 0.0 && r_max >= r_min && 2.0 * r_max < self.grid.lx.min(self.grid.ly)) {
                    return Err(Error::param("r_min, r_max", "0 < r_min <= r_max < side/2", format!("{r_min}, {r_max}")));
                }
            }
            Generator::AngleDirector { d2_min } => {
                if !(d2_min > 0.0 && d2_min < 1.0) {
                    return Err(Error::param("d2_min", "in (0, 1)", d2_min));
                }
                if boxed {
                    return Err(Error::param("grid.domain_kind", "periodic-torus", self.grid.domain_kind));
                }
            }
        }
        Ok(())
    }

    /// Independent stream per sample index, so parallel evaluation is
    /// order-independent.
    pub fn rng(&self, i: usize) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(i as u64);
        r
    }

    /// Scalar sample `i` (box generators only); never identically zero.
    pub fn scalar(&self, i: usize) -> Result<Vec<f64>> {
        let g = &self.grid;
        let mut rng = self.rng(i);
        let v = match self.generator {
            Generator::TrigPolynomial { max_mode } => {
                let c = DMatrix::from_fn(max_mode, max_mode, |_, _| rng.random_range(-1.0..1.0));
                sine_series(g, &c)
            }
            Generator::RandomBandLimited => {
                let kmax = (g.nx.min(g.ny) / 4).max(1);
                let cutoff = rng.random_range(1..=kmax);
                let decay: f64 = rng.random_range(0.0..2.0);
                let c = DMatrix::from_fn(cutoff, cutoff, |k, l| {
                    let w = 1.0 + ((k * k + l * l) as f64) / (cutoff * cutoff) as f64;
                    rng.random_range(-1.0..1.0) * w.powf(-decay)
                });
                sine_series(g, &c)
            }
            Generator::Localized { r_min, r_max } => {
                let r = if r_max > r_min { rng.random_range(r_min..r_max) } else { r_min };
                let cx = rng.random_range(r..g.lx - r);
                let cy = rng.random_range(r..g.ly - r);
                let terms: Vec<(f64, f64, f64, f64)> = (0..6)
                    .map(|_| {
                        (
                            rng.random_range(-1.0..1.0),
                            rng.random_range(-2.0..2.0),
                            rng.random_range(-2.0..2.0),
                            rng.random_range(0.0..2.0 * PI),
                        )
                    })
                    .collect();
                let base: f64 = rng.random_range(0.2..1.0);
                let mut out = vec![0.0; g.node_count()];
                for j in 0..g.my() {
                    for ii in 0..g.mx() {
                        let (x, y) = g.coords(ii, j);
                        let (sx, sy) = ((x - cx) / r, (y - cy) / r);
                        let w = bump_profile(sx.hypot(sy)).0;
                        if w > 0.0 {
                            let t: f64 = terms.iter().map(|(a, kx, ky, p)| a * (kx * sx + ky * sy + p).cos()).sum();
                            out[g.idx(ii, j)] = w * (base + 0.5 * t);
                        }
                    }
                }
                out
            }
            Generator::AngleDirector { .. } => {
                return Err(Error::Config("angle-director ensembles produce directors, not scalars".into()));
            }
        };
        if v.iter().all(|x| *x == 0.0) {
            return Err(Error::Diagnostic(format!("sample {i} vanished identically")));
        }
        Ok(v)
    }

    /// Angle field and director for sample `i` of an angle ensemble.
    pub fn director(&self, i: usize) -> Result<(Vec<f64>, DirectorField)> {
        let Generator::AngleDirector { d2_min } = self.generator else {
            return Err(Error::Config("director samples need an angle-director ensemble".into()));
        };
        let g = self.grid;
        let mut rng = self.rng(i);
        let max_angle = d2_min.acos();
        let terms: Vec<(f64, f64, f64, f64)> = (0..8)
            .map(|_| {
                (
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-3i32..=3) as f64 * 2.0 * PI / g.lx,
                    rng.random_range(-3i32..=3) as f64 * 2.0 * PI / g.ly,
                    rng.random_range(0.0..2.0 * PI),
                )
            })
            .collect();
        // Window supported in the middle nine tenths of each axis.
        let win = |t: f64, len: f64| bump_profile((t - 0.5 * len) / (0.45 * len)).0;
        let raw: Vec<f64> = (0..g.node_count())
            .map(|k| {
                let (i, j) = g.ij(k);
                let (x, y) = g.coords(i, j);
                let s: f64 = 0.3 + terms.iter().map(|(a, kx, ky, p)| a * (kx * x + ky * y + p).cos()).sum::<f64>();
                s * win(x, g.lx) * win(y, g.ly)
            })
            .collect();
        let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak == 0.0 {
            return Err(Error::Diagnostic(format!("angle sample {i} vanished identically")));
        }
        let frac: f64 = rng.random_range(0.05..1.0);
        let phi: Vec<f64> = raw.iter().map(|v| v * frac * max_angle / peak).collect();
        let d = DirectorField::new(g, phi.iter().map(|p| p.sin()).collect(), phi.iter().map(|p| p.cos()).collect())?;
        Ok((phi, d))
    }
}
