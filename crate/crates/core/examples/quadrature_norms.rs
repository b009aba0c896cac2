//! Lp norms of sampled functions on the unit cube.

use projop::function_space::{build_quadrature, distance, lp_norm, PNorm, SampledFunction};

fn main() -> projop::error::Result<()> {
    let q = build_quadrature(2, 12)?;
    println!("{} nodes, exact through total degree {}", q.len(), q.exact_degree());

    let f = SampledFunction::from_fn(&q, |x| x[0] * x[1])?;
    let g = SampledFunction::from_fn(&q, |x| (x[0] + x[1]).sin())?;
    for p in [1.5, 2.0, 4.0] {
        let p = PNorm::new(p)?;
        println!(
            "p = {:<3} |f| = {:.17e}  |f - g| = {:.17e}",
            p.value(),
            lp_norm(&f, p)?,
            distance(&f, &g, p)?
        );
    }
    // ∫ x²y² over [-1,1]² with the normalized measure is 1/9.
    println!("|f|_2^2 - 1/9 = {:.3e}", lp_norm(&f, PNorm::L2)?.powi(2) - 1.0 / 9.0);
    Ok(())
}
