use projop::function_space::{build_quadrature, distance, lp_norm, PNorm, SampledFunction};
use projop::leray_schauder::{greedy_net, CompactSampleSet};
use projop::neural_op::seeded_rng;
use projop::operator_zoo::{
    fredholm_apply, hammerstein_apply, nemytskii_apply, separable_fredholm_solution, Field, Kernel, Nonlinearity,
};
use projop::ortho_poly::{random_band_limited, tensor_legendre};
use proptest::prelude::*;
use rand::Rng;

fn field_tags() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["x0", "x0^2", "x0^3", "exp:x0", "sin:x0", "cos:x0", "const:0.7", "affine:0.5,-1"])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn separable_solution_satisfies_the_equation(
        a in field_tags(),
        b in field_tags(),
        f in field_tags(),
        lambda in -2.0f64..2.0,
    ) {
        let q = build_quadrature(1, 14).unwrap();
        let (a, b) = (Field::parse(a).unwrap(), Field::parse(b).unwrap());
        let f = Field::parse(f).unwrap().sample(&q).unwrap();
        let ab = a.sample(&q).unwrap().mul(&b.sample(&q).unwrap()).unwrap().integral();
        prop_assume!((1.0 - lambda * ab).abs() > 1e-3);
        let x = separable_fredholm_solution(&a, &b, lambda, &f).unwrap();
        let k = Kernel::Separable { a, b };
        let rhs = fredholm_apply(&k, lambda, &x).add(&f).unwrap();
        prop_assert!(distance(&x, &rhs, PNorm::L2).unwrap() < 1e-12);
    }

    #[test]
    fn fredholm_is_linear(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0, smooth in any::<bool>()) {
        let q = build_quadrature(2, 5).unwrap();
        let mut rng = seeded_rng(seed);
        let mut draw = || SampledFunction::new(q.clone(), (0..q.len()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let (f, g) = (draw(), draw());
        let k = if smooth { Kernel::Gaussian { length_scale: 0.4 } } else { Kernel::product() };
        let lhs = fredholm_apply(&k, 0.8, &f.scale(alpha).add(&g.scale(beta)).unwrap());
        let rhs = fredholm_apply(&k, 0.8, &f).scale(alpha).add(&fredholm_apply(&k, 0.8, &g).scale(beta)).unwrap();
        prop_assert!(distance(&lhs, &rhs, PNorm::L2).unwrap() < 1e-12);
    }
}

#[test]
fn nemytskii_examples() {
    let q = build_quadrature(1, 8).unwrap();
    let s = Field::coordinate(0).sample(&q).unwrap();
    assert_eq!(nemytskii_apply(&Nonlinearity::Identity, &s).unwrap(), s);
    let sq = nemytskii_apply(&Nonlinearity::Square, &s).unwrap();
    assert_eq!(sq, Field::parse("x0^2").unwrap().sample(&q).unwrap());
    let half_pi = SampledFunction::constant(&q, std::f64::consts::FRAC_PI_2);
    assert!(nemytskii_apply(&Nonlinearity::Sin, &half_pi).unwrap().values().iter().all(|&v| v == 1.0));
    let huge = SampledFunction::constant(&q, 1e200);
    assert!(nemytskii_apply(&Nonlinearity::Cube, &huge).is_err());
}

#[test]
fn hammerstein_examples() {
    let q = build_quadrature(1, 8).unwrap();
    let s = Field::coordinate(0).sample(&q).unwrap();
    let k = Kernel::Gaussian { length_scale: 0.3 };
    let h = hammerstein_apply(&k, &Nonlinearity::Identity, 0.7, &s).unwrap();
    assert_eq!(h, fredholm_apply(&k, 0.7, &s));
    let z = hammerstein_apply(&k, &Nonlinearity::Cube, 0.0, &s).unwrap();
    assert!(z.values().iter().all(|&v| v == 0.0));
    let odd = hammerstein_apply(&Kernel::product(), &Nonlinearity::Square, 1.0, &s).unwrap();
    assert!(lp_norm(&odd, PNorm::L2).unwrap() < 1e-16);
}

/// Fredholm images of the unit ball form a set whose greedy nets never need
/// more centers than members.
#[test]
fn fredholm_images_admit_small_nets() {
    let q = build_quadrature(1, 12).unwrap();
    let basis = tensor_legendre(1, 10, &q, PNorm::L2).unwrap();
    let mut rng = seeded_rng(8);
    let images: Vec<SampledFunction> = (0..100)
        .map(|_| {
            let f = random_band_limited(&basis, &mut rng);
            let unit = f.scale(1.0 / lp_norm(&f, PNorm::L2).unwrap());
            fredholm_apply(&Kernel::Gaussian { length_scale: 0.5 }, 1.0, &unit)
        })
        .collect();
    let set = CompactSampleSet::new(images, PNorm::L2).unwrap();
    for eps in [0.5, 0.1, 0.02, 0.005] {
        let net = greedy_net(&set, eps).unwrap();
        assert!(net.centers().len() <= set.len());
        println!("eps {eps}: {} centers", net.centers().len());
    }
}
