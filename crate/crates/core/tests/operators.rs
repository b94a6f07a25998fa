use std::f64::consts::PI;

use nematic2d::field_core::{
    divergence, ericksen_stress, gradient, inner, inner_vec, laplacian, norms, vector_norms, DirectorField, GridSpec,
    ScalarField, VectorField2,
};
use proptest::prelude::*;

fn max_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn orders(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn smooth(x: f64, y: f64) -> f64 {
    (1.3 * x).sin() * (0.7 * y).cos() + 0.2 * (x * y).exp()
}

#[test]
fn gradient_divergence_laplacian_converge_at_second_order() {
    for kind in ["box", "torus"] {
        let (mut eg, mut ed, mut el) = (vec![], vec![], vec![]);
        for n in [32, 64, 128] {
            let (g, f, fx, fy, fl): (GridSpec, fn(f64, f64) -> f64, fn(f64, f64) -> f64, fn(f64, f64) -> f64, fn(f64, f64) -> f64) =
                if kind == "box" {
                    (
                        GridSpec::dirichlet_box(2.0, 1.5, n, n).unwrap(),
                        smooth,
                        |x, y| 1.3 * (1.3 * x).cos() * (0.7 * y).cos() + 0.2 * y * (x * y).exp(),
                        |x, y| -0.7 * (1.3 * x).sin() * (0.7 * y).sin() + 0.2 * x * (x * y).exp(),
                        |x, y| -(1.69 + 0.49) * (1.3 * x).sin() * (0.7 * y).cos() + 0.2 * (x * x + y * y) * (x * y).exp(),
                    )
                } else {
                    (
                        GridSpec::torus(2.0 * PI, 2.0 * PI, n, n).unwrap(),
                        |x, y| (x + 0.5).sin() * (2.0 * y).cos(),
                        |x, y| (x + 0.5).cos() * (2.0 * y).cos(),
                        |x, y| -2.0 * (x + 0.5).sin() * (2.0 * y).sin(),
                        |x, y| -5.0 * (x + 0.5).sin() * (2.0 * y).cos(),
                    )
                };
            let s = ScalarField::from_fn(g, f);
            let gr = gradient(&s);
            eg.push(max_err(gr.u(), ScalarField::from_fn(g, fx).values()).max(max_err(gr.w(), ScalarField::from_fn(g, fy).values())));
            // div(grad f) exercises the divergence on a known vector field.
            let v = VectorField2::from_fn(g, |x, y| [fx(x, y), fy(x, y)]);
            ed.push(max_err(divergence(&v).values(), ScalarField::from_fn(g, fl).values()));
            el.push(max_err(laplacian(&s).values(), ScalarField::from_fn(g, fl).values()));
        }
        for (name, e) in [("gradient", &eg), ("divergence", &ed), ("laplacian", &el)] {
            for o in orders(e) {
                assert!(o >= 1.9, "{kind} {name}: errors {e:?}, order {o}");
            }
        }
    }
}

fn sbp_defect(n: usize) -> (f64, f64) {
    let g = GridSpec::dirichlet_box(1.0, 1.0, n, n).unwrap();
    let b = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
    let f = ScalarField::from_fn(g, |x, y| b(x, y) * x.exp());
    let v = VectorField2::from_fn(g, |x, y| [b(x, y) * (y * 3.0).cos(), b(x, y) * (x - 0.3).powi(2)]);
    let defect = inner(&divergence(&v), &f).unwrap() + inner_vec(&v, &gradient(&f)).unwrap();
    let scale = inner_vec(&v, &v).unwrap().sqrt() * inner(&f, &f).unwrap().sqrt();
    (defect.abs() / scale, g.hx())
}

#[test]
fn summation_by_parts_defect_is_second_order() {
    let d: Vec<(f64, f64)> = [16, 32, 64].iter().map(|&n| sbp_defect(n)).collect();
    for w in d.windows(2) {
        let (e0, e1) = (w[0].0, w[1].0);
        // Exact summation by parts leaves only roundoff.
        if e0 > 1e-13 {
            assert!((e0 / e1).log2() >= 1.9, "{d:?}");
        }
        assert!(e0 <= 10.0 * w[0].1.powi(2), "{d:?}");
    }
}

fn field_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, (n + 1) * (n + 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn summation_by_parts_for_grid_functions(fa in field_strategy(12), fb in field_strategy(12), fc in field_strategy(12)) {
        let g = GridSpec::dirichlet_box(1.0, 1.0, 12, 12).unwrap();
        let zero_walls = |v: &[f64]| -> Vec<f64> {
            (0..g.node_count()).map(|k| { let (i, j) = g.ij(k); if g.is_boundary(i, j) { 0.0 } else { v[k] } }).collect()
        };
        let f = ScalarField::new(g, zero_walls(&fa)).unwrap();
        let v = VectorField2::new(g, zero_walls(&fb), zero_walls(&fc)).unwrap();
        let defect = inner(&divergence(&v), &f).unwrap() + inner_vec(&v, &gradient(&f)).unwrap();
        let scale = inner_vec(&v, &v).unwrap().sqrt() * inner(&f, &f).unwrap().sqrt() / g.hx();
        prop_assert!(defect.abs() <= 1e-12 * scale.max(1e-300), "defect {defect}");
    }

    #[test]
    fn ericksen_stress_is_trace_free(phi in field_strategy(10)) {
        let g = GridSpec::torus(1.0, 1.0, 11, 11).unwrap();
        let p = &phi[..g.node_count()];
        let d = DirectorField::new(g, p.iter().map(|a| (3.0 * a).sin()).collect(), p.iter().map(|a| (3.0 * a).cos()).collect()).unwrap();
        let tr = ericksen_stress(&d).trace();
        prop_assert!(tr.values().iter().all(|t| *t == 0.0));
    }

    #[test]
    fn norms_do_not_depend_on_thread_count(vals in field_strategy(16)) {
        let g = GridSpec::dirichlet_box(1.0, 2.0, 16, 16).unwrap();
        let f = ScalarField::new(g, vals.clone()).unwrap();
        let v = VectorField2::new(g, vals.clone(), vals.iter().rev().copied().collect()).unwrap();
        let pool = |t: usize| rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
        let (a, av) = pool(1).install(|| (norms(&f), vector_norms(&v)));
        let (b, bv) = pool(4).install(|| (norms(&f), vector_norms(&v)));
        prop_assert_eq!(a, b);
        prop_assert_eq!(av, bv);
    }
}
