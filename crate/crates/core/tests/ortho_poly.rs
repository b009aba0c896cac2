use std::sync::Arc;

use projop::function_space::{build_quadrature, distance, lp_norm, PNorm, Quadrature, SampledFunction};
use projop::neural_op::seeded_rng;
use projop::ortho_poly::{
    export_basis, gram_schmidt, import_basis, project, reconstruct, tensor_legendre, uniform_bound, OrthoPolyBasis,
    WeightFunctional,
};
use proptest::prelude::*;
use rand::Rng;

fn legendre(d: usize, deg: usize, ppa: usize, p: f64) -> OrthoPolyBasis {
    let q = build_quadrature(d, ppa).unwrap();
    tensor_legendre(d, deg, &q, PNorm::new(p).unwrap()).unwrap()
}

fn weighted(deg: usize, p: f64) -> OrthoPolyBasis {
    let q = build_quadrature(1, deg + 6).unwrap();
    let rho = SampledFunction::from_fn(&q, |x| 1.0 + x[0] / 2.0).unwrap();
    gram_schmidt(1, deg, &WeightFunctional::new(rho, PNorm::new(p).unwrap()).unwrap()).unwrap()
}

fn random_values(q: &Arc<Quadrature>, seed: u64) -> SampledFunction {
    let mut rng = seeded_rng(seed);
    SampledFunction::new(q.clone(), (0..q.len()).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projection_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0, n in 0usize..=6) {
        for basis in [legendre(1, 6, 10, 2.0), legendre(2, 6, 8, 2.0), weighted(6, 2.0)] {
            let q = basis.quadrature().clone();
            let f = random_values(&q, seed);
            let g = random_values(&q, seed ^ 1);
            let combo = f.scale(a).add(&g.scale(b)).unwrap();
            let (_, lhs) = project(&basis, n, &combo).unwrap();
            let rhs = project(&basis, n, &f).unwrap().1.scale(a).add(&project(&basis, n, &g).unwrap().1.scale(b)).unwrap();
            prop_assert!(distance(&lhs, &rhs, PNorm::L2).unwrap() < 1e-10);
        }
    }

    #[test]
    fn projection_is_idempotent(seed in any::<u64>(), n in 0usize..=6) {
        for basis in [legendre(1, 6, 10, 2.0), weighted(6, 2.0)] {
            let f = random_values(basis.quadrature(), seed);
            let (_, pf) = project(&basis, n, &f).unwrap();
            let (_, ppf) = project(&basis, n, &pf).unwrap();
            prop_assert!(distance(&pf, &ppf, PNorm::L2).unwrap() < 1e-10);
        }
    }

    #[test]
    fn projection_norm_is_bounded(seed in any::<u64>(), n in 0usize..=6, p in prop::sample::select(vec![1.5, 2.0, 3.0, 6.0])) {
        for basis in [legendre(1, 6, 10, p), legendre(2, 4, 6, p), weighted(6, p)] {
            let pn = PNorm::new(p).unwrap();
            let f = random_values(basis.quadrature(), seed);
            let (_, pf) = project(&basis, n.min(basis.len() - 1), &f).unwrap();
            let bound = uniform_bound(&basis, n.min(basis.len() - 1)).unwrap();
            prop_assert!(lp_norm(&pf, pn).unwrap() <= bound * lp_norm(&f, pn).unwrap() + 1e-8);
        }
    }

    #[test]
    fn projection_is_the_best_l2_approximation(seed in any::<u64>(), n in 0usize..=8) {
        let basis = legendre(1, 8, 16, 2.0);
        let f = SampledFunction::from_fn(basis.quadrature(), |x| (3.0 * x[0]).sin() + x[0].abs()).unwrap();
        let (_, pf) = project(&basis, n, &f).unwrap();
        let best = distance(&f, &pf, PNorm::L2).unwrap();
        let mut rng = seeded_rng(seed);
        for _ in 0..50 {
            let c: Vec<f64> = (0..=n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g = reconstruct(&basis, &c).unwrap();
            prop_assert!(best <= distance(&f, &g, PNorm::L2).unwrap() + 1e-10);
        }
    }
}

#[test]
fn constructed_bases_are_orthogonal() {
    for basis in [legendre(1, 8, 12, 2.0), legendre(2, 8, 12, 2.0), legendre(3, 4, 6, 2.0), weighted(8, 2.0)] {
        assert!(basis.orthogonality_defect() < 1e-8);
    }
}

#[test]
fn exported_bases_reimport_with_identical_samples() {
    for basis in [legendre(2, 3, 5, 2.0), weighted(5, 3.0)] {
        let back = import_basis(&export_basis(&basis)).unwrap();
        assert_eq!(back.len(), basis.len());
        for k in 0..basis.len() {
            assert_eq!(back.coefficients(k), basis.coefficients(k));
            assert_eq!(back.gram(k).to_bits(), basis.gram(k).to_bits());
        }
        assert_eq!(export_basis(&back), export_basis(&basis));
    }
}
