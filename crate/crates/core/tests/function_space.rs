use projop::function_space::{build_quadrature, integrate_against, lp_norm, PNorm, SampledFunction};
use proptest::prelude::*;

/// `∫ x^k dμ` for the normalized measure on [-1, 1].
fn moment(k: u32) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        1.0 / (k as f64 + 1.0)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_are_nonnegative_and_sum_to_one(d in 1usize..=3, ppa in 1usize..=12) {
        let q = build_quadrature(d, ppa).unwrap();
        prop_assert!(q.weights().iter().all(|&w| w >= 0.0));
        let s: f64 = q.weights().iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polynomials_integrate_exactly(
        d in 1usize..=3,
        ppa in 1usize..=10,
        raw in proptest::collection::vec((0u32..64, -2.0f64..2.0), 1..6),
    ) {
        let q = build_quadrature(d, ppa).unwrap();
        let max = 2 * ppa as u32 - 1;
        // Each term: coefficient times a monomial with per-axis exponents <= 2 ppa - 1.
        let terms: Vec<(Vec<u32>, f64)> = raw
            .iter()
            .map(|&(seed, c)| ((0..d).map(|a| (seed >> (2 * a)).wrapping_mul(7 + a as u32) % (max + 1)).collect(), c))
            .collect();
        let f = SampledFunction::from_fn(&q, |x| {
            terms.iter().map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>()).sum()
        }).unwrap();
        let exact: f64 = terms.iter().map(|(e, c)| c * e.iter().map(|&k| moment(k)).product::<f64>()).sum();
        prop_assert!((f.integral() - exact).abs() < 1e-12, "{} vs {}", f.integral(), exact);
    }

    #[test]
    fn lp_norm_is_absolutely_homogeneous(
        vals in proptest::collection::vec(-5.0f64..5.0, 8),
        c in -10.0f64..10.0,
        p in 1.01f64..8.0,
    ) {
        let q = build_quadrature(1, 8).unwrap();
        let f = SampledFunction::new(q, vals).unwrap();
        let p = PNorm::new(p).unwrap();
        let lhs = lp_norm(&f.scale(c), p).unwrap();
        let rhs = c.abs() * lp_norm(&f, p).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn holder_inequality(
        f in proptest::collection::vec(-5.0f64..5.0, 16),
        rho in proptest::collection::vec(-5.0f64..5.0, 16),
        p in 1.05f64..20.0,
    ) {
        let q = build_quadrature(2, 4).unwrap();
        let f = SampledFunction::new(q.clone(), f).unwrap();
        let rho = SampledFunction::new(q, rho).unwrap();
        let p = PNorm::new(p).unwrap();
        let lhs = integrate_against(&f, &rho).unwrap().abs();
        let rhs = lp_norm(&f, p).unwrap() * lp_norm(&rho, p.conjugate()).unwrap();
        prop_assert!(lhs <= rhs + 1e-10);
    }
}
