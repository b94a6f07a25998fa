use std::f64::consts::PI;

use nematic2d::density::{density_bounds_check, density_step, mass, DensityScheme, DensityStepConfig};
use nematic2d::field_core::{GridSpec, ScalarField, VectorField2};
use proptest::prelude::*;

const AMP: f64 = 0.5;

/// `1 + AMP cos x cos y exp(-2 eps t)` solves the Neumann heat equation on `[0, pi]^2`.
fn exact(g: GridSpec, eps: f64, t: f64) -> ScalarField {
    ScalarField::from_fn(g, |x, y| 1.0 + AMP * x.cos() * y.cos() * (-2.0 * eps * t).exp())
}

fn heat_error(n: usize, dt: f64, t_end: f64) -> f64 {
    let eps = 1.0;
    let g = GridSpec::dirichlet_box(PI, PI, n, n).unwrap();
    let v = VectorField2::zeros(g);
    let cfg = DensityStepConfig::new(eps, dt);
    let mut rho = exact(g, eps, 0.0);
    let steps = (t_end / dt).round() as usize;
    for _ in 0..steps {
        rho = density_step(&rho, &v, &cfg).unwrap().rho;
    }
    let ex = exact(g, eps, steps as f64 * dt);
    rho.values().iter().zip(ex.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[test]
fn manufactured_heat_solution_orders() {
    let time: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&dt| heat_error(64, dt, 0.4)).collect();
    let space: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| {
            let h = PI / n as f64;
            heat_error(n, 0.05 * h * h, 0.1)
        })
        .collect();
    for w in time.windows(2) {
        assert!((w[0] / w[1]).log2() >= 0.9, "time errors {time:?}");
    }
    for w in space.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.9, "space errors {space:?}");
    }
}

fn trig_velocity(g: GridSpec, c: &[f64]) -> VectorField2 {
    VectorField2::from_fn(g, |x, y| {
        [
            c[0] * (x + c[2]).sin() * y.cos() + c[1] * (2.0 * y).sin(),
            c[3] * x.cos() * (y + c[4]).sin() + c[5] * (x - y).cos(),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mass_positivity_and_exponential_bound(
        rho0 in prop::collection::vec(0.2f64..2.0, 256),
        c in prop::collection::vec(-1.5f64..1.5, 6),
        eps in 0.0f64..0.2,
        upwind in any::<bool>(),
    ) {
        let g = GridSpec::torus(2.0 * PI, 2.0 * PI, 16, 16).unwrap();
        let dt = 0.02;
        let scheme = if upwind { DensityScheme::ImplicitDiffusionUpwindAdvection } else { DensityScheme::ImplicitHybrid };
        let cfg = DensityStepConfig { scheme, ..DensityStepConfig::new(eps, dt) };
        let v = trig_velocity(g, &c);
        let mut path = vec![ScalarField::new(g, rho0.clone()).unwrap()];
        for _ in 0..10 {
            let next = density_step(path.last().unwrap(), &v, &cfg).unwrap().rho;
            path.push(next);
        }
        let m0 = mass(&path[0]);
        for r in &path {
            prop_assert!((mass(r) - m0).abs() <= 10.0 * cfg.linear_tol * m0);
            prop_assert!(r.min() > 0.0);
        }
        let (lo, hi) = (path[0].min(), path[0].max());
        let vs = vec![v; path.len() - 1];
        prop_assert!(density_bounds_check(&path, &vs, lo, hi, dt).is_ok());
    }
}
