//! Multivariate orthogonal polynomial bases on `[-1,1]^d` and the linear
//! projection they induce.
//!
//! A weight `ρ` defines the functional `L(f) = ∫ f ρ dμ` and the (possibly
//! indefinite) bilinear form `L(fg)`. For polynomials `p_0..p_N` orthogonal
//! under that form the truncated projection is
//!
//! ```text
//! P_n f = Σ_{k<=n} L(f p_k) / L(p_k^2) · p_k
//! ```
//!
//! Polynomials are kept as dense coefficient vectors over a graded
//! lexicographic monomial list (the source of truth) and as samples on the
//! reference quadrature (used for every integral).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::Deref;
use std::sync::{Arc, OnceLock};

use rand::Rng;

use crate::error::{Error, Result};
use crate::function_space::{
    build_quadrature, integrate_against, lp_norm, lp_norm_values, PNorm, Quadrature,
    SampledFunction,
};
use crate::textio::{fmt_f64, join_f64, parse_f64, parse_f64_list, parse_usize, Lines};

/// Points per axis of the uniform grid used to estimate `‖p_k‖_∞`, endpoints included.
pub const DENSE_GRID_POINTS: usize = 64;

/// Relative threshold below which Gram-Schmidt declares a direction degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

/// Orthogonality tolerance, relative to `sqrt(|L(p_j^2) L(p_k^2)|)`.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

/// Exponent vector of a monomial `x_0^a_0 ... x_{d-1}^a_{d-1}`.
pub type MultiIndex = Vec<u32>;

/// All multi-indices of total degree `<= max_degree`, by increasing degree and,
/// within one degree, in descending lexicographic order (`x^2, xy, y^2`).
pub fn graded_multi_indices(d: usize, max_degree: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for deg in 0..=max_degree as u32 {
        let mut cur = vec![0u32; d];
        push_with_degree(&mut out, &mut cur, 0, deg);
    }
    out
}

fn push_with_degree(out: &mut Vec<MultiIndex>, cur: &mut MultiIndex, axis: usize, left: u32) {
    let d = cur.len();
    if axis == d - 1 {
        cur[axis] = left;
        out.push(cur.clone());
        return;
    }
    for e in (0..=left).rev() {
        cur[axis] = e;
        push_with_degree(out, cur, axis + 1, left - e);
    }
    cur[axis] = 0;
}

/// Number of monomials in `d` variables of total degree `<= max_degree`.
pub fn basis_size(d: usize, max_degree: usize) -> usize {
    // binomial(d + max_degree, d)
    let mut r: u128 = 1;
    for i in 1..=d as u128 {
        r = r * (max_degree as u128 + i) / i;
    }
    r as usize
}

/// Monomial coefficients of the Legendre polynomials `P_0..P_n` normalized to
/// unit norm under the normalized measure (`p_k = sqrt(2k+1) P_k`).
pub fn normalized_legendre_coefficients(n: usize) -> Vec<Vec<f64>> {
    let mut raw: Vec<Vec<f64>> = vec![vec![1.0]];
    if n >= 1 {
        raw.push(vec![0.0, 1.0]);
    }
    for k in 1..n {
        // (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}
        let kf = k as f64;
        let mut next = vec![0.0; k + 2];
        for (j, c) in raw[k].iter().enumerate() {
            next[j + 1] += (2.0 * kf + 1.0) * c / (kf + 1.0);
        }
        for (j, c) in raw[k - 1].iter().enumerate() {
            next[j] -= kf * c / (kf + 1.0);
        }
        raw.push(next);
    }
    raw.into_iter()
        .enumerate()
        .map(|(k, c)| {
            let s = (2.0 * k as f64 + 1.0).sqrt();
            c.into_iter().map(|v| v * s).collect()
        })
        .collect()
}

/// The weight `ρ` and the functional `L(f) = ∫ f ρ dμ` it induces on `L^p`.
#[derive(Debug, Clone)]
pub struct WeightFunctional {
    rho: SampledFunction,
    p: PNorm,
    rho_q_norm: f64,
    uniform: bool,
}

impl WeightFunctional {
    pub fn new(rho: SampledFunction, p: PNorm) -> Result<Self> {
        let rho_q_norm = lp_norm(&rho, p.conjugate())?;
        let uniform = rho.values().iter().all(|&v| v == 1.0);
        Ok(WeightFunctional {
            rho,
            p,
            rho_q_norm,
            uniform,
        })
    }

    /// `ρ ≡ 1`.
    pub fn uniform(quad: &Arc<Quadrature>, p: PNorm) -> Self {
        WeightFunctional {
            rho: SampledFunction::constant(quad, 1.0),
            p,
            rho_q_norm: 1.0,
            uniform: true,
        }
    }

    pub fn rho(&self) -> &SampledFunction {
        &self.rho
    }

    pub fn p(&self) -> PNorm {
        self.p
    }

    pub fn q(&self) -> PNorm {
        self.p.conjugate()
    }

    /// `‖L‖ = ‖ρ‖_q`.
    pub fn norm_bound(&self) -> f64 {
        self.rho_q_norm
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn quadrature(&self) -> &Arc<Quadrature> {
        self.rho.quadrature()
    }

    pub(crate) fn form(&self, a: &[f64], b: &[f64]) -> f64 {
        let q = self.rho.quadrature();
        q.weights()
            .iter()
            .zip(self.rho.values())
            .zip(a.iter().zip(b))
            .map(|((w, r), (x, y))| w * r * x * y)
            .sum()
    }

    /// `∫ a b |ρ| dμ`, the scale against which degeneracy is judged.
    fn abs_form(&self, a: &[f64], b: &[f64]) -> f64 {
        let q = self.rho.quadrature();
        q.weights()
            .iter()
            .zip(self.rho.values())
            .zip(a.iter().zip(b))
            .map(|((w, r), (x, y))| w * r.abs() * x * y)
            .sum()
    }
}

/// `L(f) = ∫ f ρ dμ`.
pub fn functional_eval(functional: &WeightFunctional, f: &SampledFunction) -> Result<f64> {
    integrate_against(f, functional.rho())
}

/// Coordinates of a projection in an ordered basis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoefficientVector(pub Vec<f64>);

impl Deref for CoefficientVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for CoefficientVector {
    fn from(v: Vec<f64>) -> Self {
        CoefficientVector(v)
    }
}

impl CoefficientVector {
    pub fn zeros(n: usize) -> Self {
        CoefficientVector(vec![0.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    TensorLegendre,
    GramSchmidt,
}

impl BasisKind {
    pub fn tag(self) -> &'static str {
        match self {
            BasisKind::TensorLegendre => "legendre",
            BasisKind::GramSchmidt => "gram-schmidt",
        }
    }
}

/// Ordered orthogonal polynomials `p_0..p_N` with respect to a [`WeightFunctional`].
#[derive(Debug)]
pub struct OrthoPolyBasis {
    kind: BasisKind,
    dimension: usize,
    max_degree: usize,
    monomials: Vec<MultiIndex>,
    coefficients: Vec<Vec<f64>>,
    samples: Vec<SampledFunction>,
    gram: Vec<f64>,
    functional: WeightFunctional,
    sup_norms: Vec<OnceLock<f64>>,
}

impl Clone for OrthoPolyBasis {
    fn clone(&self) -> Self {
        OrthoPolyBasis {
            kind: self.kind,
            dimension: self.dimension,
            max_degree: self.max_degree,
            monomials: self.monomials.clone(),
            coefficients: self.coefficients.clone(),
            samples: self.samples.clone(),
            gram: self.gram.clone(),
            functional: self.functional.clone(),
            sup_norms: self.sup_norms.clone(),
        }
    }
}

impl OrthoPolyBasis {
    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Monomial order shared by every coefficient vector.
    pub fn monomials(&self) -> &[MultiIndex] {
        &self.monomials
    }

    /// Leading multi-index of `p_k`.
    pub fn multi_index(&self, k: usize) -> &MultiIndex {
        &self.monomials[k]
    }

    pub fn total_degree(&self, k: usize) -> usize {
        self.monomials[k].iter().sum::<u32>() as usize
    }

    /// Monomial coefficients of `p_k`.
    pub fn coefficients(&self, k: usize) -> &[f64] {
        &self.coefficients[k]
    }

    pub fn sample(&self, k: usize) -> &SampledFunction {
        &self.samples[k]
    }

    /// `L(p_k^2)`.
    pub fn gram(&self, k: usize) -> f64 {
        self.gram[k]
    }

    pub fn gram_values(&self) -> &[f64] {
        &self.gram
    }

    pub fn functional(&self) -> &WeightFunctional {
        &self.functional
    }

    pub fn quadrature(&self) -> &Arc<Quadrature> {
        self.functional.quadrature()
    }

    /// Evaluates `p_k` at an arbitrary point from its monomial table.
    pub fn evaluate(&self, k: usize, x: &[f64]) -> f64 {
        eval_poly(&self.monomials, &self.coefficients[k], x)
    }

    /// Largest `|L(p_j p_k)| / sqrt(|L(p_j^2) L(p_k^2)|)` over `j != k`.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.len() {
            for k in 0..j {
                let v = self
                    .functional
                    .form(self.samples[j].values(), self.samples[k].values());
                let scale = (self.gram[j] * self.gram[k]).abs().sqrt();
                worst = worst.max(v.abs() / scale);
            }
        }
        worst
    }

    /// `‖p_k‖_∞` estimated on a uniform grid of [`DENSE_GRID_POINTS`] per axis.
    pub fn sup_norm(&self, k: usize) -> f64 {
        *self.sup_norms[k].get_or_init(|| {
            let terms: Vec<(&MultiIndex, f64)> = self
                .monomials
                .iter()
                .zip(&self.coefficients[k])
                .filter(|(_, &c)| c != 0.0)
                .map(|(m, &c)| (m, c))
                .collect();
            let mut best = 0.0f64;
            for_each_grid_point(self.dimension, DENSE_GRID_POINTS, |x| {
                let v: f64 = terms.iter().map(|(m, c)| c * monomial(m, x)).sum();
                best = best.max(v.abs());
            });
            best
        })
    }

    fn from_parts(
        kind: BasisKind,
        dimension: usize,
        max_degree: usize,
        monomials: Vec<MultiIndex>,
        coefficients: Vec<Vec<f64>>,
        functional: WeightFunctional,
    ) -> Self {
        let quad = functional.quadrature().clone();
        let table = monomial_table(&quad, &monomials);
        let samples: Vec<SampledFunction> = coefficients
            .iter()
            .map(|c| SampledFunction::from_raw(quad.clone(), combine_rows(&table, c, quad.len())))
            .collect();
        let gram = samples
            .iter()
            .map(|s| functional.form(s.values(), s.values()))
            .collect();
        let n = coefficients.len();
        OrthoPolyBasis {
            kind,
            dimension,
            max_degree,
            monomials,
            coefficients,
            samples,
            gram,
            functional,
            sup_norms: (0..n).map(|_| OnceLock::new()).collect(),
        }
    }
}

fn monomial(m: &[u32], x: &[f64]) -> f64 {
    m.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product()
}

fn eval_poly(monomials: &[MultiIndex], coeffs: &[f64], x: &[f64]) -> f64 {
    monomials
        .iter()
        .zip(coeffs)
        .filter(|(_, &c)| c != 0.0)
        .map(|(m, c)| c * monomial(m, x))
        .sum()
}

/// Row `j` holds monomial `j` sampled at every node.
fn monomial_table(quad: &Quadrature, monomials: &[MultiIndex]) -> Vec<Vec<f64>> {
    monomials
        .iter()
        .map(|m| quad.nodes().map(|x| monomial(m, x)).collect())
        .collect()
}

fn combine_rows(table: &[Vec<f64>], coeffs: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (row, &c) in table.iter().zip(coeffs) {
        if c == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(row) {
            *o += c * v;
        }
    }
    out
}

fn for_each_grid_point(d: usize, n: usize, mut f: impl FnMut(&[f64])) {
    let axis: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                0.0
            } else {
                -1.0 + 2.0 * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    let mut idx = vec![0usize; d];
    let mut x = vec![axis[0]; d];
    loop {
        f(&x);
        let mut a = d;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < n {
                x[a] = axis[idx[a]];
                break;
            }
            idx[a] = 0;
            x[a] = axis[0];
        }
    }
}

fn check_quadrature(d: usize, max_degree: usize, quad: &Quadrature) -> Result<()> {
    if quad.dimension() != d {
        return Err(Error::Usage(format!(
            "basis dimension {d} does not match quadrature dimension {}",
            quad.dimension()
        )));
    }
    if quad.exact_degree() < 2 * max_degree {
        return Err(Error::Usage(format!(
            "quadrature with {} points per axis is exact to degree {}, but degree {max_degree} \
             needs exactness to {}: use points_per_axis >= {}",
            quad.points_per_axis(),
            quad.exact_degree(),
            2 * max_degree,
            max_degree + 1
        )));
    }
    Ok(())
}

/// Tensor products of normalized Legendre polynomials with total degree `<= max_degree`,
/// orthonormal under `ρ ≡ 1`.
pub fn tensor_legendre(
    d: usize,
    max_degree: usize,
    quad: &Arc<Quadrature>,
    p: PNorm,
) -> Result<OrthoPolyBasis> {
    if d == 0 {
        return Err(Error::Usage("basis dimension must be >= 1".into()));
    }
    check_quadrature(d, max_degree, quad)?;
    let monomials = graded_multi_indices(d, max_degree);
    let position: HashMap<&MultiIndex, usize> =
        monomials.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let leg = normalized_legendre_coefficients(max_degree);

    let mut coefficients = Vec::with_capacity(monomials.len());
    for alpha in &monomials {
        let mut c = vec![0.0; monomials.len()];
        // Expand Π_a p_{α_a}(x_a) over exponents β ≤ α.
        let mut beta = vec![0u32; d];
        loop {
            let coef: f64 = (0..d).map(|a| leg[alpha[a] as usize][beta[a] as usize]).product();
            if coef != 0.0 {
                c[position[&beta]] += coef;
            }
            let mut a = d;
            let mut done = true;
            while a > 0 {
                a -= 1;
                if beta[a] < alpha[a] {
                    beta[a] += 1;
                    done = false;
                    break;
                }
                beta[a] = 0;
            }
            if done {
                break;
            }
        }
        coefficients.push(c);
    }
    Ok(OrthoPolyBasis::from_parts(
        BasisKind::TensorLegendre,
        d,
        max_degree,
        monomials,
        coefficients,
        WeightFunctional::uniform(quad, p),
    ))
}

/// Orthogonalizes the graded monomials against `L(fg) = ∫ f g ρ dμ`.
///
/// Each polynomial is scaled so `|L(p_k^2)| = 1` with a positive leading
/// coefficient; `L(p_k^2)` itself may be negative for sign-changing `ρ`.
/// A direction whose remainder has `|L(r^2)| < DEGENERACY_THRESHOLD · ∫ m^2 |ρ| dμ`
/// is rejected with [`Error::Degenerate`].
pub fn gram_schmidt(
    d: usize,
    max_degree: usize,
    functional: &WeightFunctional,
) -> Result<OrthoPolyBasis> {
    if d == 0 {
        return Err(Error::Usage("basis dimension must be >= 1".into()));
    }
    let quad = functional.quadrature().clone();
    check_quadrature(d, max_degree, &quad)?;
    let monomials = graded_multi_indices(d, max_degree);
    let table = monomial_table(&quad, &monomials);
    let m = monomials.len();

    let mut coefficients: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut grams: Vec<f64> = Vec::with_capacity(m);
    for k in 0..m {
        let mut r = table[k].clone();
        let mut c = vec![0.0; m];
        c[k] = 1.0;
        // Two sweeps of modified Gram-Schmidt.
        for _ in 0..2 {
            for j in 0..k {
                let a = functional.form(&r, &samples[j]) / grams[j];
                for (ri, pj) in r.iter_mut().zip(&samples[j]) {
                    *ri -= a * pj;
                }
                for (ci, cj) in c.iter_mut().zip(&coefficients[j]) {
                    *ci -= a * cj;
                }
            }
        }
        let norm = functional.form(&r, &r);
        let reference = functional.abs_form(&table[k], &table[k]);
        if !(norm.abs() >= DEGENERACY_THRESHOLD * reference) || reference == 0.0 {
            return Err(Error::Degenerate {
                index: k,
                multi_index: monomials[k].clone(),
                norm,
                reference,
                threshold: DEGENERACY_THRESHOLD,
            });
        }
        let s = norm.abs().sqrt();
        r.iter_mut().for_each(|v| *v /= s);
        c.iter_mut().for_each(|v| *v /= s);
        grams.push(norm / (s * s));
        samples.push(r);
        coefficients.push(c);
    }
    Ok(OrthoPolyBasis::from_parts(
        BasisKind::GramSchmidt,
        d,
        max_degree,
        monomials,
        coefficients,
        functional.clone(),
    ))
}

fn check_truncation(basis: &OrthoPolyBasis, n: usize) -> Result<()> {
    if n >= basis.len() {
        return Err(Error::Usage(format!(
            "truncation index {n} out of range for a basis of size {}",
            basis.len()
        )));
    }
    Ok(())
}

/// Coordinates `c_k = L(f p_k) / L(p_k^2)` for `k = 0..=n`.
pub fn project_coefficients(
    basis: &OrthoPolyBasis,
    n: usize,
    f: &SampledFunction,
) -> Result<CoefficientVector> {
    check_truncation(basis, n)?;
    f.check_same(basis.functional.rho())?;
    let fr: Vec<f64> = f
        .values()
        .iter()
        .zip(basis.functional.rho().values())
        .map(|(a, b)| a * b)
        .collect();
    let w = basis.quadrature().weights();
    Ok(CoefficientVector(
        (0..=n)
            .map(|k| {
                let l: f64 = w
                    .iter()
                    .zip(&fr)
                    .zip(basis.samples[k].values())
                    .map(|((w, a), b)| w * a * b)
                    .sum();
                l / basis.gram[k]
            })
            .collect(),
    ))
}

/// `Σ c_k p_k` sampled on the basis quadrature.
pub fn reconstruct(basis: &OrthoPolyBasis, coeffs: &[f64]) -> Result<SampledFunction> {
    if coeffs.len() > basis.len() {
        return Err(Error::Usage(format!(
            "{} coefficients for a basis of size {}",
            coeffs.len(),
            basis.len()
        )));
    }
    let quad = basis.quadrature();
    let mut out = vec![0.0; quad.len()];
    for (c, s) in coeffs.iter().zip(&basis.samples) {
        for (o, v) in out.iter_mut().zip(s.values()) {
            *o += c * v;
        }
    }
    Ok(SampledFunction::from_raw(quad.clone(), out))
}

/// `P_n f` together with its coordinates.
pub fn project(
    basis: &OrthoPolyBasis,
    n: usize,
    f: &SampledFunction,
) -> Result<(CoefficientVector, SampledFunction)> {
    let c = project_coefficients(basis, n, f)?;
    let g = reconstruct(basis, &c)?;
    Ok((c, g))
}

/// `‖ρ‖_q · Σ_{k<=n} ‖p_k‖_∞ ‖p_k‖_p / |L(p_k^2)|`, an upper bound on the
/// operator norm of `P_n` on `L^p`.
pub fn uniform_bound(basis: &OrthoPolyBasis, n: usize) -> Result<f64> {
    check_truncation(basis, n)?;
    let p = basis.functional.p().value();
    let mut sum = 0.0;
    for k in 0..=n {
        let lp = lp_norm_values(basis.quadrature(), basis.samples[k].values(), p)?;
        sum += basis.sup_norm(k) * lp / basis.gram[k].abs();
    }
    Ok(basis.functional.norm_bound() * sum)
}

const BASIS_MAGIC: &str = "projop-basis v1";
const TABLE_HEADER: &str = "k, multi-index, monomial coefficients, L(p_k^2)";

fn fmt_multi(m: &[u32]) -> String {
    let parts: Vec<String> = m.iter().map(|e| e.to_string()).collect();
    format!("[{}]", parts.join(" "))
}

fn parse_multi(s: &str) -> Result<MultiIndex> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| Error::Format(format!("bad multi-index `{s}`")))?;
    inner
        .split_whitespace()
        .map(|t| {
            t.parse::<u32>()
                .map_err(|_| Error::Format(format!("bad exponent `{t}`")))
        })
        .collect()
}

/// Plain-text export: a short header, then the table
/// `k, multi-index, monomial coefficients, L(p_k^2)` with one row per polynomial.
pub fn export_basis(basis: &OrthoPolyBasis) -> String {
    let q = basis.quadrature();
    let mut s = String::new();
    let _ = writeln!(s, "{BASIS_MAGIC}");
    let _ = writeln!(s, "kind {}", basis.kind.tag());
    let _ = writeln!(s, "dimension {}", basis.dimension);
    let _ = writeln!(s, "max_degree {}", basis.max_degree);
    let _ = writeln!(s, "quadrature {} {}", q.dimension(), q.points_per_axis());
    let _ = writeln!(s, "p {}", fmt_f64(basis.functional.p().value()));
    if basis.functional.is_uniform() {
        let _ = writeln!(s, "weight uniform");
    } else {
        let _ = writeln!(s, "weight sampled {}", join_f64(basis.functional.rho().values()));
    }
    let monos: Vec<String> = basis.monomials.iter().map(|m| fmt_multi(m)).collect();
    let _ = writeln!(s, "monomials {}", monos.join(" "));
    let _ = writeln!(s, "{TABLE_HEADER}");
    for k in 0..basis.len() {
        let _ = writeln!(
            s,
            "{}, {}, {}, {}",
            k,
            fmt_multi(&basis.monomials[k]),
            join_f64(&basis.coefficients[k]),
            fmt_f64(basis.gram[k])
        );
    }
    s
}

/// Parsed contents of a basis export.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisTable {
    pub kind: BasisKind,
    pub dimension: usize,
    pub max_degree: usize,
    pub points_per_axis: usize,
    pub p: PNorm,
    /// `None` for `ρ ≡ 1`.
    pub rho: Option<Vec<f64>>,
    pub monomials: Vec<MultiIndex>,
    pub rows: Vec<BasisRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisRow {
    pub k: usize,
    pub multi_index: MultiIndex,
    pub coefficients: Vec<f64>,
    pub gram: f64,
}

pub fn parse_basis_table(text: &str) -> Result<BasisTable> {
    let mut lines = Lines::new(text);
    let (_, magic) = lines.expect_line("header")?;
    if magic != BASIS_MAGIC {
        return Err(Error::Format(format!("not a basis export: `{magic}`")));
    }
    let kind = match lines.expect_key("kind")? {
        "legendre" => BasisKind::TensorLegendre,
        "gram-schmidt" => BasisKind::GramSchmidt,
        other => return Err(Error::Format(format!("unknown basis kind `{other}`"))),
    };
    let dimension = parse_usize(lines.expect_key("dimension")?, "dimension")?;
    let max_degree = parse_usize(lines.expect_key("max_degree")?, "max_degree")?;
    let quad = lines.expect_key("quadrature")?;
    let (qd, qp) = quad
        .split_once(char::is_whitespace)
        .ok_or_else(|| Error::Format(format!("bad quadrature line `{quad}`")))?;
    let qd = parse_usize(qd, "quadrature dimension")?;
    if qd != dimension {
        return Err(Error::Format(format!(
            "quadrature dimension {qd} differs from basis dimension {dimension}"
        )));
    }
    let points_per_axis = parse_usize(qp, "quadrature points")?;
    let p = PNorm::new(parse_f64(lines.expect_key("p")?, "p")?)?;
    let weight = lines.expect_key("weight")?;
    let rho = if weight == "uniform" {
        None
    } else if let Some(rest) = weight.strip_prefix("sampled") {
        Some(parse_f64_list(rest, "weight samples")?)
    } else {
        return Err(Error::Format(format!("unknown weight `{weight}`")));
    };
    let monos = lines.expect_key("monomials")?;
    let monomials: Vec<MultiIndex> = monos
        .split(']')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_multi(&format!("{t}]")))
        .collect::<Result<_>>()?;
    if monomials != graded_multi_indices(dimension, max_degree) {
        return Err(Error::Format(
            "monomial list is not the graded order for this dimension and degree".into(),
        ));
    }
    let (n, header) = lines.expect_line("table header")?;
    if header != TABLE_HEADER {
        return Err(Error::Format(format!("line {n}: expected `{TABLE_HEADER}`")));
    }
    let mut rows = Vec::new();
    while let Some((n, line)) = lines.next_line() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::Format(format!("line {n}: expected 4 columns")));
        }
        let row = BasisRow {
            k: parse_usize(cols[0], "k")?,
            multi_index: parse_multi(cols[1])?,
            coefficients: parse_f64_list(cols[2], "coefficients")?,
            gram: parse_f64(cols[3], "L(p_k^2)")?,
        };
        if row.k != rows.len() || row.coefficients.len() != monomials.len() {
            return Err(Error::Format(format!("line {n}: malformed row {}", row.k)));
        }
        rows.push(row);
    }
    Ok(BasisTable {
        kind,
        dimension,
        max_degree,
        points_per_axis,
        p,
        rho,
        monomials,
        rows,
    })
}

impl BasisTable {
    /// Rebuilds the basis from its monomial tables on the recorded quadrature.
    pub fn to_basis(&self) -> Result<OrthoPolyBasis> {
        let quad = build_quadrature(self.dimension, self.points_per_axis)?;
        let functional = match &self.rho {
            None => WeightFunctional::uniform(&quad, self.p),
            Some(r) => WeightFunctional::new(SampledFunction::new(quad.clone(), r.clone())?, self.p)?,
        };
        Ok(OrthoPolyBasis::from_parts(
            self.kind,
            self.dimension,
            self.max_degree,
            self.monomials.clone(),
            self.rows.iter().map(|r| r.coefficients.clone()).collect(),
            functional,
        ))
    }
}

pub fn import_basis(text: &str) -> Result<OrthoPolyBasis> {
    parse_basis_table(text)?.to_basis()
}

/// `Σ_k a_k p_k` over the whole basis with `a_k` uniform on `[-1, 1]`
/// divided by `1 + deg p_k`.
pub fn random_band_limited(basis: &OrthoPolyBasis, rng: &mut impl Rng) -> SampledFunction {
    let coeffs: Vec<f64> = (0..basis.len())
        .map(|k| rng.random_range(-1.0..=1.0) / (1 + basis.total_degree(k)) as f64)
        .collect();
    reconstruct(basis, &coeffs).expect("coefficient count equals the basis size")
}
