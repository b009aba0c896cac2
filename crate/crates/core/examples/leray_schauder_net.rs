//! Greedy ε-net over a finite sample set and the hat-function projection onto it.

use projop::function_space::{build_quadrature, distance, PNorm, SampledFunction};
use projop::leray_schauder::{check_net, greedy_net, ls_coordinates, ls_project, CompactSampleSet};

fn main() -> projop::error::Result<()> {
    let q = build_quadrature(1, 24)?;
    let members = (0..40)
        .map(|i| {
            let a = i as f64 / 13.0;
            SampledFunction::from_fn(&q, move |x| (a * x[0]).sin())
        })
        .collect::<projop::error::Result<Vec<_>>>()?;
    let set = CompactSampleSet::new(members, PNorm::L2)?;

    for eps in [0.5, 0.2, 0.05] {
        let net = greedy_net(&set, eps)?;
        let check = check_net(&net, eps)?;
        let worst = set
            .members()
            .iter()
            .map(|x| ls_project(&net, x).and_then(|px| distance(x, &px, PNorm::L2)))
            .collect::<projop::error::Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0_f64, f64::max);
        println!(
            "eps {eps:<5} centers {:>2}  min separation {:.4}  max |x - Px| {:.4}",
            check.centers, check.min_distance, worst
        );
    }

    let net = greedy_net(&set, 0.2)?;
    let probe = SampledFunction::from_fn(&q, |x| (1.1 * x[0]).sin())?;
    let coords = ls_coordinates(&net, &probe)?;
    let active: Vec<String> = coords
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0.0)
        .map(|(i, c)| format!("{i}:{c:.3}"))
        .collect();
    println!("coordinates of sin(1.1 t): {}", active.join(" "));
    Ok(())
}
