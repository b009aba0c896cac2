//! Orthonormal polynomial bases, truncated projection and the uniform bound B_n.

use projop::function_space::{build_quadrature, distance, PNorm, SampledFunction};
use projop::ortho_poly::{gram_schmidt, project, tensor_legendre, uniform_bound, WeightFunctional};

fn main() -> projop::error::Result<()> {
    let q = build_quadrature(1, 24)?;
    let legendre = tensor_legendre(1, 10, &q, PNorm::L2)?;
    let f = SampledFunction::from_fn(&q, |x| x[0].exp())?;

    println!("n  error             B_n");
    for n in [0, 2, 4, 6, 8, 10] {
        let (_, pf) = project(&legendre, n, &f)?;
        println!("{n:<2} {:.10e}  {:.6}", distance(&f, &pf, PNorm::L2)?, uniform_bound(&legendre, n)?);
    }

    // A non-uniform weight gives a different orthonormal family.
    let rho = SampledFunction::from_fn(&q, |x| 1.0 + 0.5 * x[0])?;
    let weighted = gram_schmidt(1, 6, &WeightFunctional::new(rho, PNorm::L2)?)?;
    println!("weighted basis: {} members, orthogonality defect {:.2e}", weighted.len(), weighted.orthogonality_defect());
    let (c, _) = project(&weighted, 6, &f)?;
    println!("coefficients {:?}", c.0.iter().map(|v| format!("{v:.5}")).collect::<Vec<_>>());
    Ok(())
}
