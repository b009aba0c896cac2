use projop::function_space::{build_quadrature, distance, PNorm, SampledFunction};
use projop::leray_schauder::{greedy_net, ls_coordinates, ls_project, CompactSampleSet};
use projop::neural_op::seeded_rng;
use projop::ortho_poly::{random_band_limited, tensor_legendre};
use proptest::prelude::*;

fn compact(seed: u64, count: usize, d: usize) -> CompactSampleSet {
    let q = build_quadrature(d, 6).unwrap();
    let basis = tensor_legendre(d, 4, &q, PNorm::L2).unwrap();
    let mut rng = seeded_rng(seed);
    let members = (0..count).map(|_| random_band_limited(&basis, &mut rng)).collect();
    CompactSampleSet::new(members, PNorm::L2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn members_are_projected_within_epsilon(seed in any::<u64>(), count in 5usize..=40, d in 1usize..=2, eps in 0.05f64..1.5) {
        let k = compact(seed, count, d);
        let net = greedy_net(&k, eps).unwrap();
        for x in k.members() {
            prop_assert!(distance(x, &ls_project(&net, x).unwrap(), PNorm::L2).unwrap() < eps);
        }
    }

    #[test]
    fn centers_are_fixed_points(seed in any::<u64>(), count in 5usize..=30, eps in 0.05f64..1.5) {
        let k = compact(seed, count, 1);
        let net = greedy_net(&k, eps).unwrap();
        for z in net.centers() {
            prop_assert!(distance(z, &ls_project(&net, z).unwrap(), PNorm::L2).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn coordinates_are_a_partition_of_unity(seed in any::<u64>(), count in 5usize..=30, eps in 0.05f64..1.5) {
        let k = compact(seed, count, 2);
        let net = greedy_net(&k, eps).unwrap();
        for x in k.members() {
            let c = ls_coordinates(&net, x).unwrap();
            prop_assert!(c.iter().all(|&v| v >= 0.0));
            prop_assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

/// Continuity probe along straight paths between members: the projection
/// moves by a bounded multiple of the input step. Ratios are reported only.
#[test]
fn continuity_probe_along_paths() {
    let k = compact(17, 12, 1);
    let eps = 0.6;
    let net = greedy_net(&k, eps).unwrap();
    let q = k.quadrature().clone();
    let mut worst = 0.0f64;
    for pair in k.members().windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let path = |t: f64| -> SampledFunction {
            SampledFunction::new(q.clone(), a.values().iter().zip(b.values()).map(|(u, v)| (1.0 - t) * u + t * v).collect()).unwrap()
        };
        let mut prev: Option<(SampledFunction, SampledFunction)> = None;
        for i in 0..=40 {
            let x = path(i as f64 / 40.0);
            let Ok(px) = ls_project(&net, &x) else {
                prev = None;
                continue;
            };
            if let Some((x0, p0)) = &prev {
                let dx = distance(&x, x0, PNorm::L2).unwrap();
                let dp = distance(&px, p0, PNorm::L2).unwrap();
                if dx > 0.0 {
                    worst = worst.max(dp / dx);
                }
            }
            prev = Some((x, px));
        }
    }
    assert!(worst.is_finite());
    println!("largest observed Lipschitz ratio along paths: {worst:.3}");
}
