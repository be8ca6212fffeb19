use memwave::{
    apply_cosine, apply_sine, build_elastic_moment_matrix, check_product_identity,
    solve_modal_memory, CoeffState, ControlSignal, EigenBasis, Endpoint, MemoryKernel, Scale,
    TimeGrid,
};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn state(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
}

fn to_state(v: &[(f64, f64)]) -> CoeffState {
    CoeffState::new(v.iter().map(|(a, b)| Complex64::new(*a, *b)).collect(), Scale::L2)
}

proptest! {
    #[test]
    fn product_identity(s in -20.0f64..20.0, r in -20.0f64..20.0, v in state(8)) {
        let basis = EigenBasis::interval(8, PI, Endpoint::Left).unwrap();
        let res = check_product_identity(s, r, &to_state(&v), &basis).unwrap();
        prop_assert!(res <= 1e-12);
    }

    #[test]
    fn cosine_is_even_and_bounded(t in -50.0f64..50.0, v in state(6)) {
        let basis = EigenBasis::interval(6, 2.0, Endpoint::Right).unwrap();
        let x = to_state(&v);
        let a = apply_cosine(&x, t, &basis).unwrap();
        let b = apply_cosine(&x, -t, &basis).unwrap();
        prop_assert_eq!(a.coeffs(), b.coeffs());
        prop_assert!(a.norm(&basis).unwrap() <= x.norm(&basis).unwrap() * (1.0 + 1e-12));
        let s1 = apply_sine(&x, t, &basis).unwrap();
        let s2 = apply_sine(&x, -t, &basis).unwrap();
        prop_assert!(s1.sum(&s2).unwrap().max_abs() <= 1e-15);
    }

    #[test]
    fn modal_solution_is_linear(z0 in -2.0f64..2.0, z1 in -2.0f64..2.0, c in 0.5f64..4.0) {
        let g = TimeGrid::from_horizon(3.0, 300).unwrap();
        let m = MemoryKernel::exponential(0.5, 1.0).unwrap();
        let a = solve_modal_memory(1.5, &m, z0, z1, None, &g).unwrap();
        let b = solve_modal_memory(1.5, &m, c * z0, c * z1, None, &g).unwrap();
        for (x, y) in a.z().iter().zip(b.z()) {
            prop_assert!((c * x - y).abs() <= 1e-13 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn moment_map_is_additive(amps in prop::collection::vec(-1.0f64..1.0, 101), shift in -1.0f64..1.0) {
        let basis = EigenBasis::interval(5, PI, Endpoint::Left).unwrap();
        let g = TimeGrid::from_horizon(2.0, 100).unwrap();
        let mm = build_elastic_moment_matrix(&basis, 2.0, &g, &[vec![1.0]]).unwrap();
        let f = ControlSignal::from_vector(g, vec![vec![1.0]], &amps).unwrap();
        let h = ControlSignal::from_fn(g, vec![vec![1.0]], |t, _| shift * t).unwrap();
        let lhs = mm.apply_rows(&f.sum(&h).unwrap()).unwrap();
        let rhs = mm.apply_rows(&f).unwrap() + mm.apply_rows(&h).unwrap();
        prop_assert!((lhs - rhs).amax() <= 1e-12);
    }

    #[test]
    fn control_norm_is_homogeneous(amps in prop::collection::vec(-1.0f64..1.0, 52), c in -3.0f64..3.0) {
        let basis = EigenBasis::interval(3, PI, Endpoint::Both).unwrap();
        let g = TimeGrid::from_horizon(1.0, 25).unwrap();
        let profiles = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
        // 26 nodes x 2 profiles
        let f = ControlSignal::from_vector(g, profiles.clone(), &amps).unwrap();
        let scaled: Vec<f64> = f.to_vector().iter().map(|v| c * v).collect();
        let fs = ControlSignal::from_vector(g, profiles, &scaled).unwrap();
        let (a, b) = (f.norm(&basis).unwrap(), fs.norm(&basis).unwrap());
        prop_assert!((c.abs() * a - b).abs() <= 1e-12 * (1.0 + b));
    }
}
