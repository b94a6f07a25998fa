//! Fourier differentiation on periodic grids.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

use super::grid::GridSpec;

fn fft2(g: &GridSpec, data: &mut [Complex64], inverse: bool) {
    let (mx, my) = (g.mx(), g.my());
    let mut planner = FftPlanner::<f64>::new();
    let (fx, fy) = if inverse {
        (planner.plan_fft_inverse(mx), planner.plan_fft_inverse(my))
    } else {
        (planner.plan_fft_forward(mx), planner.plan_fft_forward(my))
    };
    for row in data.chunks_mut(mx) {
        fx.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); my];
    for i in 0..mx {
        for j in 0..my {
            col[j] = data[j * mx + i];
        }
        fy.process(&mut col);
        for j in 0..my {
            data[j * mx + i] = col[j];
        }
    }
}

fn wavenumber(k: usize, m: usize, len: f64) -> (f64, bool) {
    let signed = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
    let nyquist = m % 2 == 0 && k == m / 2;
    (2.0 * std::f64::consts::PI * signed / len, nyquist)
}

/// `d^(ox+oy) f / dx^ox dy^oy` by FFT on a periodic grid.
pub fn spectral_derivative(g: &GridSpec, f: &[f64], ox: u32, oy: u32) -> Result<Vec<f64>> {
    if !g.is_periodic() {
        return Err(Error::InvalidGrid("spectral derivative needs a periodic grid".into()));
    }
    let (mx, my) = (g.mx(), g.my());
    let mut data: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(g, &mut data, false);
    let iu = Complex64::new(0.0, 1.0);
    for j in 0..my {
        let (ky, ny_q) = wavenumber(j, my, g.ly);
        for i in 0..mx {
            let (kx, nx_q) = wavenumber(i, mx, g.lx);
            // Odd derivatives of the Nyquist mode are not representable.
            if (nx_q && ox % 2 == 1) || (ny_q && oy % 2 == 1) {
                data[j * mx + i] = Complex64::new(0.0, 0.0);
                continue;
            }
            let factor = (iu * kx).powu(ox) * (iu * ky).powu(oy);
            data[j * mx + i] *= factor;
        }
    }
    fft2(g, &mut data, true);
    let scale = 1.0 / (mx * my) as f64;
    Ok(data.iter().map(|c| c.re * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exact_on_trig_polynomials() {
        let g = GridSpec::torus(2.0 * PI, 4.0 * PI, 16, 24).unwrap();
        let mut f = vec![0.0; g.node_count()];
        let mut fx = vec![0.0; g.node_count()];
        let mut fyy = vec![0.0; g.node_count()];
        for j in 0..g.my() {
            for i in 0..g.mx() {
                let (x, y) = g.coords(i, j);
                let k = g.idx(i, j);
                f[k] = (3.0 * x).sin() * (0.5 * y).cos();
                fx[k] = 3.0 * (3.0 * x).cos() * (0.5 * y).cos();
                fyy[k] = -0.25 * f[k];
            }
        }
        let a = spectral_derivative(&g, &f, 1, 0).unwrap();
        let b = spectral_derivative(&g, &f, 0, 2).unwrap();
        for k in 0..g.node_count() {
            assert!((a[k] - fx[k]).abs() < 1e-12);
            assert!((b[k] - fyy[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn box_is_rejected() {
        let g = GridSpec::dirichlet_box(1.0, 1.0, 8, 8).unwrap();
        assert!(spectral_derivative(&g, &vec![0.0; 81], 1, 0).is_err());
    }
}
