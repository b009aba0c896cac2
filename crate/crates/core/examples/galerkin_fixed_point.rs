//! Projected fixed-point equations x = T x + f: Picard, Newton and a convergence study.

use std::sync::Arc;

use projop::fixed_point::{convergence_study, multistart, solve, Method, ProjectedEquation, StudySettings};
use projop::function_space::{build_quadrature, PNorm, SampledFunction};
use projop::operator_zoo::{Kernel, Nonlinearity, OperatorHandle};
use projop::ortho_poly::tensor_legendre;

fn main() -> projop::error::Result<()> {
    let q = build_quadrature(1, 24)?;
    let basis = Arc::new(tensor_legendre(1, 10, &q, PNorm::L2)?);
    let f = SampledFunction::from_fn(&q, |x| x[0])?;

    // x = 0.5 ∫ t s x(s) ds + t has the solution x = 1.2 t.
    let separable = OperatorHandle::Fredholm { kernel: Kernel::product(), lambda: 0.5 };
    let settings = StudySettings { method: Method::Picard, tol: 1e-13, max_iter: 200 };
    print!("{}", convergence_study(&separable, &f, &basis, &[1, 2, 4, 8], settings)?.to_csv());

    let hammerstein = OperatorHandle::Hammerstein {
        kernel: Kernel::Gaussian { length_scale: 0.5 },
        g: Nonlinearity::Sin,
        lambda: 0.8,
    };
    let eq = ProjectedEquation::new(hammerstein, f.clone(), basis.clone(), 6)?;
    for method in [Method::Picard, Method::Newton] {
        let r = solve(&eq, method, &[0.0; 7], 1e-12, 200)?;
        println!("{:<6} iterations {:>3} residual {:.3e} converged {}", method.tag(), r.iterations, r.residual, r.converged);
    }

    // x = u² style equations may have several solutions; scan a few starts.
    let quadratic = OperatorHandle::Nemytskii { g: Nonlinearity::Square };
    let eq = ProjectedEquation::new(quadratic, SampledFunction::constant(&q, -0.2), basis, 0)?;
    let roots = multistart(&eq, &[vec![0.0], vec![2.0]], 1e-12, 50, 1e-6);
    for r in &roots.roots {
        println!("root c0 = {:.17e}", r.0[0]);
    }
    Ok(())
}
