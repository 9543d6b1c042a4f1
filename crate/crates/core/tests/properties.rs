use lpkit_core::atoms::{build_atom, min_moment_order, verify_atom, AtomTolerances, Ball, Poly, Shape};
use lpkit_core::verify::distribution::distribution_function;
use lpkit_core::Estimate;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn level_set_measure_is_nonincreasing(v in prop::collection::vec(0.0f64..10.0, 1..200), a in 0.01f64..5.0, b in 0.01f64..5.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let m_lo = distribution_function(&v, 0.5, lo).unwrap();
        let m_hi = distribution_function(&v, 0.5, hi).unwrap();
        prop_assert!(m_hi <= m_lo);
        prop_assert!(m_lo <= 0.5 * v.len() as f64);
    }

    #[test]
    fn moment_order_matches_floor(p in 0.3f64..1.0, n in 2usize..4) {
        let s = min_moment_order(n, p).unwrap() as f64;
        let x = n as f64 * (1.0 / p - 1.0);
        prop_assert!(s <= x + 1e-9 && x < s + 1.0);
    }

    #[test]
    fn atoms_with_random_shapes_satisfy_the_contract(
        cx in -5.0f64..5.0, cy in -5.0f64..5.0, lr in -3.0f64..3.0,
        c in prop::collection::vec(-1.0f64..1.0, 6),
        p in 0.67f64..1.0,
    ) {
        let q = Poly { terms: vec![
            ([0, 0, 0], 1.0 + c[0].abs()), ([1, 0, 0], c[1]), ([0, 1, 0], c[2]),
            ([2, 0, 0], c[3]), ([1, 1, 0], c[4]), ([0, 0, 0], c[5]),
        ] };
        let s = min_moment_order(2, p).unwrap();
        let a = build_atom(2, p, Ball::new(&[cx, cy], lr.exp2()), &Shape::bump_times(q), s).unwrap();
        let r = verify_atom(&a, &AtomTolerances::default());
        prop_assert!(r.all_pass(), "{r:?}");
    }

    #[test]
    fn estimate_sqrt_brackets(v in 0.0f64..1e6, u in 0.0f64..1e3) {
        let e = Estimate::new(v, u).sqrt();
        prop_assert!(e.value * e.value <= v * (1.0 + 1e-12));
        prop_assert!(e.hi() * e.hi() >= (v + u) * (1.0 - 1e-12));
    }
}
