//! Galerkin solution of `T(x) + f = x` on `span(p_0..p_n)`.
//!
//! Everything operates on coefficient vectors: `x_n = Σ c_k p_k` and the
//! projected equation reads `c = φ_n(P_n T(φ_n⁻¹ c)) + φ_n(P_n f)`.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::function_space::{distance, PNorm, SampledFunction};
use crate::operator_zoo::OperatorHandle;
use crate::ortho_poly::{project_coefficients, reconstruct, uniform_bound, CoefficientVector, OrthoPolyBasis};
use crate::textio::fmt_f64;

/// Jacobians with a condition estimate above this are treated as singular.
pub const MAX_CONDITION: f64 = 1e14;
/// Relative forward-difference step.
pub const FD_STEP: f64 = 1e-6;
/// Iterates whose residual exceeds this are reported as diverged.
pub const DIVERGENCE_CEILING: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Picard,
    Newton,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Picard => "picard",
            Method::Newton => "newton",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "picard" => Ok(Method::Picard),
            "newton" => Ok(Method::Newton),
            other => Err(Error::Usage(format!("unknown method `{other}` (picard | newton)"))),
        }
    }
}

/// `P_n T(x_n) + P_n f = x_n`.
#[derive(Debug, Clone)]
pub struct ProjectedEquation {
    operator: OperatorHandle,
    forcing: SampledFunction,
    basis: Arc<OrthoPolyBasis>,
    n: usize,
    forcing_coefficients: CoefficientVector,
}

impl ProjectedEquation {
    pub fn new(
        operator: OperatorHandle,
        forcing: SampledFunction,
        basis: Arc<OrthoPolyBasis>,
        n: usize,
    ) -> Result<Self> {
        let forcing_coefficients = project_coefficients(&basis, n, &forcing)?;
        Ok(ProjectedEquation {
            operator,
            forcing,
            basis,
            n,
            forcing_coefficients,
        })
    }

    pub fn operator(&self) -> &OperatorHandle {
        &self.operator
    }

    pub fn forcing(&self) -> &SampledFunction {
        &self.forcing
    }

    pub fn basis(&self) -> &Arc<OrthoPolyBasis> {
        &self.basis
    }

    pub fn truncation(&self) -> usize {
        self.n
    }

    /// `φ_n(P_n f)`.
    pub fn forcing_coefficients(&self) -> &CoefficientVector {
        &self.forcing_coefficients
    }

    pub fn reconstruct(&self, c: &[f64]) -> Result<SampledFunction> {
        reconstruct(&self.basis, c)
    }

    fn check_len(&self, c: &[f64]) -> Result<()> {
        if c.len() != self.n + 1 {
            return Err(Error::Usage(format!(
                "coefficient vector has length {}, expected {}",
                c.len(),
                self.n + 1
            )));
        }
        Ok(())
    }

    /// `φ_n(P_n T(φ_n⁻¹ c)) + φ_n(P_n f)`.
    pub fn map(&self, c: &[f64]) -> Result<CoefficientVector> {
        self.check_len(c)?;
        let x = reconstruct(&self.basis, c)?;
        let tx = self.operator.apply(&x)?;
        let mut out = project_coefficients(&self.basis, self.n, &tx)?;
        out.0.iter_mut().zip(self.forcing_coefficients.iter()).for_each(|(a, b)| *a += b);
        Ok(out)
    }
}

/// `c − φ_n(P_n T(φ_n⁻¹ c) + P_n f)`.
pub fn residual(eq: &ProjectedEquation, c: &[f64]) -> Result<CoefficientVector> {
    let m = eq.map(c)?;
    Ok(CoefficientVector(c.iter().zip(m.iter()).map(|(a, b)| a - b).collect()))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn guard(iteration: usize, r: f64) -> Result<()> {
    if !r.is_finite() {
        return Err(Error::Diverged {
            iteration,
            reason: "non-finite iterate".into(),
        });
    }
    if r > DIVERGENCE_CEILING {
        return Err(Error::Diverged {
            iteration,
            reason: format!("residual {r:e} exceeds {DIVERGENCE_CEILING:e}"),
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub method: Method,
    pub coefficients: CoefficientVector,
    pub solution: SampledFunction,
    pub iterations: usize,
    /// Euclidean norm of [`residual`] at `coefficients`.
    pub residual: f64,
    pub converged: bool,
}

fn report(eq: &ProjectedEquation, method: Method, c: Vec<f64>, iterations: usize, r: f64, converged: bool) -> Result<SolveReport> {
    Ok(SolveReport {
        method,
        solution: eq.reconstruct(&c)?,
        coefficients: CoefficientVector(c),
        iterations,
        residual: r,
        converged,
    })
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Usage(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Fixed-point iteration `c ← map(c)`. Running out of iterations is reported
/// through `converged = false`; a non-finite or exploding iterate is an error.
pub fn picard_solve(eq: &ProjectedEquation, c0: &[f64], tol: f64, max_iter: usize) -> Result<SolveReport> {
    check_tol(tol)?;
    eq.check_len(c0)?;
    let mut c = c0.to_vec();
    for it in 0..=max_iter {
        let m = eq.map(&c)?;
        let r = norm(&c.iter().zip(m.iter()).map(|(a, b)| a - b).collect::<Vec<_>>());
        guard(it, r)?;
        if r < tol {
            return report(eq, Method::Picard, c, it, r, true);
        }
        if it == max_iter {
            return report(eq, Method::Picard, c, it, r, false);
        }
        c = m.into_inner();
    }
    unreachable!()
}

/// `c_0, c_1, ..., c_k` of the Picard iteration.
pub fn picard_iterates(eq: &ProjectedEquation, c0: &[f64], k: usize) -> Result<Vec<CoefficientVector>> {
    eq.check_len(c0)?;
    let mut out = vec![CoefficientVector(c0.to_vec())];
    for _ in 0..k {
        let next = eq.map(out.last().unwrap())?;
        out.push(next);
    }
    Ok(out)
}

/// Forward-difference Jacobian of [`residual`] at `c`, given `r = residual(c)`.
pub fn residual_jacobian(eq: &ProjectedEquation, c: &[f64], r: &[f64]) -> Result<DMatrix<f64>> {
    let n = c.len();
    let mut j = DMatrix::zeros(n, n);
    let mut probe = c.to_vec();
    for col in 0..n {
        let h = FD_STEP * c[col].abs().max(1.0);
        probe[col] = c[col] + h;
        let rp = residual(eq, &probe)?;
        probe[col] = c[col];
        for row in 0..n {
            j[(row, col)] = (rp[row] - r[row]) / h;
        }
    }
    Ok(j)
}

/// 2-norm condition number from the singular values.
pub fn condition_number(j: &DMatrix<f64>) -> f64 {
    let sv = j.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Damped Newton on [`residual`] with a backtracking line search on `‖r‖`.
pub fn newton_solve(eq: &ProjectedEquation, c0: &[f64], tol: f64, max_iter: usize) -> Result<SolveReport> {
    check_tol(tol)?;
    eq.check_len(c0)?;
    let mut c = c0.to_vec();
    let mut r = residual(eq, &c)?.into_inner();
    let mut rn = norm(&r);
    for it in 0..=max_iter {
        guard(it, rn)?;
        if rn < tol {
            return report(eq, Method::Newton, c, it, rn, true);
        }
        if it == max_iter {
            break;
        }
        let j = residual_jacobian(eq, &c, &r)?;
        let cond = condition_number(&j);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::Singular(format!(
                "Jacobian condition estimate {cond:e} at iteration {it} exceeds {MAX_CONDITION:e}"
            )));
        }
        let rhs = -DVector::from_column_slice(&r);
        let step = j
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular(format!("Jacobian is singular at iteration {it}")))?;
        let mut t = 1.0;
        let mut accepted = None;
        while t >= 1.0 / 1024.0 {
            let trial: Vec<f64> = c.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
            let tr = residual(eq, &trial)?.into_inner();
            let tn = norm(&tr);
            if tn.is_finite() && tn < (1.0 - 1e-4 * t) * rn {
                accepted = Some((trial, tr, tn));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((nc, nr, nn)) => {
                c = nc;
                r = nr;
                rn = nn;
            }
            // No decrease along the Newton direction: stagnation.
            None => return report(eq, Method::Newton, c, it, rn, false),
        }
    }
    report(eq, Method::Newton, c, max_iter, rn, false)
}

pub fn solve(eq: &ProjectedEquation, method: Method, c0: &[f64], tol: f64, max_iter: usize) -> Result<SolveReport> {
    match method {
        Method::Picard => picard_solve(eq, c0, tol, max_iter),
        Method::Newton => newton_solve(eq, c0, tol, max_iter),
    }
}

/// Distinct roots found by Newton from several starts.
#[derive(Debug, Clone)]
pub struct Multiplicity {
    pub roots: Vec<CoefficientVector>,
    pub reports: Vec<Result<SolveReport>>,
}

impl Multiplicity {
    pub fn is_unique(&self) -> bool {
        self.roots.len() <= 1
    }
}

/// Runs Newton from every start and clusters converged solutions; roots
/// closer than `separation` (Euclidean, in coefficients) are merged.
pub fn multistart(
    eq: &ProjectedEquation,
    starts: &[Vec<f64>],
    tol: f64,
    max_iter: usize,
    separation: f64,
) -> Multiplicity {
    let mut roots: Vec<CoefficientVector> = Vec::new();
    let mut reports = Vec::with_capacity(starts.len());
    for s in starts {
        let rep = newton_solve(eq, s, tol, max_iter);
        if let Ok(r) = &rep {
            if r.converged {
                let dup = roots.iter().any(|q| {
                    norm(&q.iter().zip(r.coefficients.iter()).map(|(a, b)| a - b).collect::<Vec<_>>()) < separation
                });
                if !dup {
                    roots.push(r.coefficients.clone());
                }
            }
        }
        reports.push(rep);
    }
    Multiplicity { roots, reports }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    pub method: Method,
    pub iterations: usize,
    pub residual: Option<f64>,
    /// `None` for the row used as reference, or when the solve failed.
    pub error: Option<f64>,
    pub converged: bool,
    pub uniform_bound: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    Analytic,
    LargestN,
}

#[derive(Debug, Clone)]
pub struct StudyTable {
    pub reference: Reference,
    pub rows: Vec<StudyRow>,
}

pub const STUDY_HEADER: &str = "n,method,iterations,residual,error,converged";

impl StudyTable {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        let mut s = String::new();
        let _ = writeln!(s, "{STUDY_HEADER}");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.n,
                r.method.tag(),
                r.iterations,
                opt(r.residual),
                opt(r.error),
                r.converged
            );
        }
        s
    }
}

/// Settings shared by every row of a study.
#[derive(Debug, Clone, Copy)]
pub struct StudySettings {
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
}

/// Solves the projected equation for each `n` (starting from `c = 0`) and
/// measures the L² error against the analytic solution when the operator has
/// one, otherwise against the solve at the largest `n`.
pub fn convergence_study(
    operator: &OperatorHandle,
    f: &SampledFunction,
    basis: &Arc<OrthoPolyBasis>,
    n_list: &[usize],
    settings: StudySettings,
) -> Result<StudyTable> {
    check_tol(settings.tol)?;
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Usage("n_list must be nonempty and strictly increasing".into()));
    }
    let n_max = *n_list.last().unwrap();
    if n_max >= basis.len() {
        return Err(Error::Usage(format!(
            "n = {n_max} exceeds the basis size {}",
            basis.len()
        )));
    }
    let mut solutions = Vec::with_capacity(n_list.len());
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let attempt = ProjectedEquation::new(operator.clone(), f.clone(), basis.clone(), n)
            .and_then(|eq| solve(&eq, settings.method, &vec![0.0; n + 1], settings.tol, settings.max_iter));
        let bound = uniform_bound(basis, n).ok();
        match attempt {
            Ok(rep) => {
                rows.push(StudyRow {
                    n,
                    method: settings.method,
                    iterations: rep.iterations,
                    residual: Some(rep.residual),
                    error: None,
                    converged: rep.converged,
                    uniform_bound: bound,
                    failure: None,
                });
                solutions.push(Some(rep.solution));
            }
            Err(e) => {
                rows.push(StudyRow {
                    n,
                    method: settings.method,
                    iterations: 0,
                    residual: None,
                    error: None,
                    converged: false,
                    uniform_bound: bound,
                    failure: Some(e.to_string()),
                });
                solutions.push(None);
            }
        }
    }
    let (reference, target) = match operator.analytic_solution(f) {
        Some(sol) => (Reference::Analytic, Some(sol?)),
        None => (Reference::LargestN, solutions.last().cloned().flatten()),
    };
    if let Some(target) = target {
        let last = rows.len() - 1;
        for (i, (row, sol)) in rows.iter_mut().zip(&solutions).enumerate() {
            if reference == Reference::LargestN && i == last {
                continue;
            }
            if let Some(sol) = sol {
                row.error = Some(distance(sol, &target, PNorm::L2)?);
            }
        }
    }
    Ok(StudyTable { reference, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::{build_quadrature, lp_norm};
    use crate::operator_zoo::{separable_fredholm_solution, Field, Kernel, Nonlinearity};
    use crate::ortho_poly::tensor_legendre;

    fn basis(deg: usize, ppa: usize) -> Arc<OrthoPolyBasis> {
        let q = build_quadrature(1, ppa).unwrap();
        Arc::new(tensor_legendre(1, deg, &q, PNorm::L2).unwrap())
    }

    fn separable(lambda: f64) -> OperatorHandle {
        OperatorHandle::Fredholm {
            kernel: Kernel::product(),
            lambda,
        }
    }

    fn t(b: &OrthoPolyBasis) -> SampledFunction {
        Field::coordinate(0).sample(b.quadrature()).unwrap()
    }

    #[test]
    fn zero_operator_residuals() {
        let b = basis(4, 8);
        let f = t(&b).map(|v| v.exp());
        let eq = ProjectedEquation::new(OperatorHandle::Zero, f.clone(), b.clone(), 4).unwrap();
        let c = eq.forcing_coefficients().clone();
        assert!(residual(&eq, &c).unwrap().euclidean_norm() == 0.0);
        let z = SampledFunction::zeros(b.quadrature());
        let eq0 = ProjectedEquation::new(OperatorHandle::Zero, z, b, 4).unwrap();
        assert_eq!(residual(&eq0, &[0.0; 5]).unwrap().euclidean_norm(), 0.0);
        assert!(residual(&eq0, &[0.0; 4]).is_err());
    }

    #[test]
    fn separable_solution_has_zero_residual() {
        let b = basis(3, 8);
        let f = t(&b);
        let x = separable_fredholm_solution(&Field::coordinate(0), &Field::coordinate(0), 0.5, &f).unwrap();
        // x = 1.2 t: c = ∫ s² dμ / (1 - ½ ∫ s² dμ) = (1/3)/(5/6) = 2/5.
        assert!(distance(&x, &f.scale(1.2), PNorm::L2).unwrap() < 1e-14);
        let eq = ProjectedEquation::new(separable(0.5), f, b.clone(), 3).unwrap();
        let c = project_coefficients(&b, 3, &x).unwrap();
        assert!(residual(&eq, &c).unwrap().euclidean_norm() < 1e-12);
    }

    #[test]
    fn picard_zero_operator_converges_in_one_iteration() {
        let b = basis(4, 8);
        let f = t(&b).map(|v| v.sin());
        let eq = ProjectedEquation::new(OperatorHandle::Zero, f, b, 4).unwrap();
        let rep = picard_solve(&eq, &[0.0; 5], 1e-12, 10).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.coefficients, *eq.forcing_coefficients());
    }

    #[test]
    fn picard_separable_converges() {
        let b = basis(3, 8);
        let f = t(&b);
        let eq = ProjectedEquation::new(separable(0.5), f.clone(), b, 3).unwrap();
        let rep = picard_solve(&eq, &[0.0; 4], 1e-10, 60).unwrap();
        assert!(rep.converged && rep.residual < 1e-10);
        assert!(distance(&rep.solution, &f.scale(1.2), PNorm::L2).unwrap() < 1e-9);
    }

    #[test]
    fn picard_expanding_map_does_not_converge() {
        let b = basis(3, 8);
        let eq = ProjectedEquation::new(separable(10.0), t(&b), b, 3).unwrap();
        match picard_solve(&eq, &[0.0; 4], 1e-10, 100) {
            Ok(rep) => assert!(!rep.converged),
            Err(Error::Diverged { .. }) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn newton_linear_case_is_fast() {
        let b = basis(3, 8);
        let f = t(&b);
        let eq = ProjectedEquation::new(separable(0.5), f.clone(), b, 3).unwrap();
        let rep = newton_solve(&eq, &[0.0; 4], 1e-12, 20).unwrap();
        assert!(rep.converged && rep.iterations <= 3, "{rep:?}");
        let again = newton_solve(&eq, &rep.coefficients, 1e-12, 20).unwrap();
        assert!(again.iterations <= 1 && again.residual < 1e-12);
    }

    #[test]
    fn newton_hammerstein_cubic_matches_fine_picard() {
        let op = OperatorHandle::Hammerstein {
            kernel: Kernel::product(),
            g: Nonlinearity::Cube,
            lambda: 0.02,
        };
        let b = basis(16, 24);
        let f = t(&b).map(|v| v.exp());
        let eq = ProjectedEquation::new(op.clone(), f.clone(), b.clone(), 8).unwrap();
        let c0 = eq.forcing_coefficients().clone();
        let rep = newton_solve(&eq, &c0, 1e-11, 30).unwrap();
        assert!(rep.converged && rep.residual < 1e-9);
        let fine = ProjectedEquation::new(op, f, b, 16).unwrap();
        let oracle = picard_solve(&fine, &vec![0.0; 17], 1e-13, 500).unwrap();
        assert!(oracle.converged);
        // The Hammerstein range is span{t}, so the n = 8 and n = 16 solutions differ
        // only by the projection error of exp.
        let gap = distance(&rep.solution, &oracle.solution, PNorm::L2).unwrap();
        assert!(gap < 1e-7, "{gap}");
    }

    #[test]
    fn singular_jacobian_is_reported() {
        // T = identity makes the residual constant, so its Jacobian vanishes.
        let b = basis(2, 8);
        let id = OperatorHandle::Nemytskii { g: Nonlinearity::Identity };
        let eq = ProjectedEquation::new(id, t(&b), b.clone(), 2).unwrap();
        assert!(matches!(newton_solve(&eq, &[0.0; 3], 1e-12, 10), Err(Error::Singular(_))));
        // λ ∫ab = 1 is resonant: no solution exists along t.
        let eq = ProjectedEquation::new(separable(3.0), t(&b), b, 2).unwrap();
        match newton_solve(&eq, &[0.0; 3], 1e-12, 10) {
            Ok(rep) => assert!(!rep.converged),
            Err(e) => assert!(matches!(e, Error::Singular(_) | Error::Diverged { .. }), "{e}"),
        }
    }

    #[test]
    fn study_separable_is_exact() {
        let b = basis(8, 12);
        let table = convergence_study(
            &separable(0.5),
            &t(&b),
            &b,
            &[1, 2, 4, 8],
            StudySettings { method: Method::Picard, tol: 1e-13, max_iter: 100 },
        )
        .unwrap();
        assert_eq!(table.reference, Reference::Analytic);
        for r in &table.rows {
            assert!(r.converged && r.error.unwrap() < 1e-10, "{r:?}");
        }
        let csv = table.to_csv();
        assert!(csv.starts_with("n,method,iterations,residual,error,converged\n1,picard,"));
    }

    #[test]
    fn study_without_analytic_reference_skips_last_error() {
        let b = basis(6, 10);
        let op = OperatorHandle::Hammerstein { kernel: Kernel::product(), g: Nonlinearity::Square, lambda: 0.2 };
        let table = convergence_study(
            &op,
            &t(&b).map(|v| v.cos()),
            &b,
            &[2, 4, 6],
            StudySettings { method: Method::Newton, tol: 1e-12, max_iter: 30 },
        )
        .unwrap();
        assert_eq!(table.reference, Reference::LargestN);
        assert!(table.rows[0].error.is_some());
        assert!(table.rows[2].error.is_none());
        assert!(table.to_csv().lines().last().unwrap().contains(",,true"));
    }

    #[test]
    fn study_zero_operator_matches_projection_error() {
        let b = basis(6, 12);
        let f = t(&b).map(|v| v.exp());
        let table = convergence_study(
            &OperatorHandle::Zero,
            &f,
            &b,
            &[0, 3, 6],
            StudySettings { method: Method::Picard, tol: 1e-13, max_iter: 5 },
        )
        .unwrap();
        for r in &table.rows {
            let (_, pf) = crate::ortho_poly::project(&b, r.n, &f).unwrap();
            let want = lp_norm(&pf.sub(&f).unwrap(), PNorm::L2).unwrap();
            assert!((r.error.unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn bad_study_inputs() {
        let b = basis(4, 8);
        let s = StudySettings { method: Method::Picard, tol: 1e-10, max_iter: 5 };
        assert!(convergence_study(&OperatorHandle::Zero, &t(&b), &b, &[2, 1], s).is_err());
        assert!(convergence_study(&OperatorHandle::Zero, &t(&b), &b, &[5], s).is_err());
        assert!(convergence_study(&OperatorHandle::Zero, &t(&b), &b, &[], s).is_err());
    }

    #[test]
    fn multistart_detects_two_roots() {
        // x = λ t ∫ s x³ dμ... with f = 0 has the root x = 0 and, for λ large
        // enough, the nonzero pair x = ±α t.
        let op = OperatorHandle::Hammerstein { kernel: Kernel::product(), g: Nonlinearity::Cube, lambda: 5.0 };
        let b = basis(2, 8);
        let z = SampledFunction::zeros(b.quadrature());
        let eq = ProjectedEquation::new(op, z, b, 2).unwrap();
        let starts = vec![vec![0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, -1.0, 0.0]];
        let m = multistart(&eq, &starts, 1e-12, 50, 1e-6);
        assert_eq!(m.roots.len(), 3, "{:?}", m.roots);
        assert!(!m.is_unique());
    }
}
