//! Discretized `L^p` on `[-1, 1]^d` under the normalized Lebesgue measure.
//!
//! A function is represented by its values on the nodes of a tensor-product
//! Gauss-Legendre rule whose weights sum to one. Every integral in the crate
//! is a weighted sum over those nodes, so integrals of polynomials up to
//! per-axis degree `2 * points_per_axis - 1` are exact up to rounding.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest number of tensor nodes [`build_quadrature`] will allocate.
pub const MAX_QUADRATURE_NODES: usize = 1 << 20;

/// Largest admissible exponent for [`PNorm`].
pub const MAX_P: f64 = 64.0;

/// Identifies a quadrature rule. Rules are deterministic in `(dimension, points_per_axis)`,
/// so two rules with equal ids are interchangeable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadratureId {
    pub dimension: usize,
    pub points_per_axis: usize,
}

impl std::fmt::Display for QuadratureId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "gl(d={}, points={})", self.dimension, self.points_per_axis)
    }
}

/// Tensor Gauss-Legendre rule on `[-1,1]^d` realizing the normalized measure.
///
/// Nodes are stored row-major (`nodes[i*d..(i+1)*d]` is node `i`), with the
/// last axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    id: QuadratureId,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    axis_nodes: Vec<f64>,
}

impl Quadrature {
    pub fn id(&self) -> QuadratureId {
        self.id
    }

    pub fn dimension(&self) -> usize {
        self.id.dimension
    }

    pub fn points_per_axis(&self) -> usize {
        self.id.points_per_axis
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// One-dimensional Gauss-Legendre nodes shared by every axis (ascending).
    pub fn axis_nodes(&self) -> &[f64] {
        &self.axis_nodes
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let d = self.id.dimension;
        &self.nodes[i * d..(i + 1) * d]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.nodes.chunks_exact(self.id.dimension)
    }

    /// Largest per-axis polynomial degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        2 * self.id.points_per_axis - 1
    }

    /// `sum_i w_i v_i`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (weights sum to 2), ascending.
///
/// Roots are refined by Newton's method on the three-term recurrence and the
/// rule is mirrored so it is exactly symmetric.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess, descending root i.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Tensor Gauss-Legendre rule on `[-1,1]^d` with weights normalized to sum to one.
pub fn build_quadrature(d: usize, points_per_axis: usize) -> Result<Arc<Quadrature>> {
    if d == 0 {
        return Err(Error::Usage("quadrature dimension must be >= 1".into()));
    }
    if points_per_axis == 0 {
        return Err(Error::Usage("points_per_axis must be >= 1".into()));
    }
    let total = (0..d).try_fold(1usize, |acc, _| acc.checked_mul(points_per_axis));
    let total = match total {
        Some(t) if t <= MAX_QUADRATURE_NODES => t,
        _ => {
            return Err(Error::Resource {
                what: format!("quadrature with {points_per_axis}^{d} nodes"),
                requested: total.unwrap_or(usize::MAX),
                cap: MAX_QUADRATURE_NODES,
            })
        }
    };

    let (x, w) = gauss_legendre(points_per_axis);
    let axis_sum: f64 = w.iter().sum();
    let w: Vec<f64> = w.iter().map(|wi| wi / axis_sum).collect();

    let mut nodes = Vec::with_capacity(total * d);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let mut wt = 1.0;
        for &j in &idx {
            nodes.push(x[j]);
            wt *= w[j];
        }
        weights.push(wt);
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < points_per_axis {
                break;
            }
            idx[a] = 0;
        }
    }
    let s: f64 = weights.iter().sum();
    for wt in &mut weights {
        *wt /= s;
    }
    Ok(Arc::new(Quadrature {
        id: QuadratureId {
            dimension: d,
            points_per_axis,
        },
        nodes,
        weights,
        axis_nodes: x,
    }))
}

/// Exponent `p` of an `L^p` norm, `1 < p <= MAX_P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PNorm(f64);

impl PNorm {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0 && p <= MAX_P) {
            return Err(Error::Usage(format!(
                "p must satisfy 1 < p <= {MAX_P}, got {p}"
            )));
        }
        Ok(PNorm(p))
    }

    pub const L2: PNorm = PNorm(2.0);

    pub fn value(self) -> f64 {
        self.0
    }

    /// Hölder conjugate `q` with `1/p + 1/q = 1`. May exceed `MAX_P` when `p` is close to one.
    pub fn conjugate(self) -> PNorm {
        PNorm(self.0 / (self.0 - 1.0))
    }
}

/// Values of a function on the nodes of a quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    quad: Arc<Quadrature>,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(quad: Arc<Quadrature>, values: Vec<f64>) -> Result<Self> {
        if values.len() != quad.len() {
            return Err(Error::Usage(format!(
                "sampled function has {} values but quadrature {} has {} nodes",
                values.len(),
                quad.id(),
                quad.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite value {} at node {i}",
                values[i]
            )));
        }
        Ok(SampledFunction { quad, values })
    }

    /// Unchecked constructor for values produced by internal arithmetic.
    pub(crate) fn from_raw(quad: Arc<Quadrature>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), quad.len());
        SampledFunction { quad, values }
    }

    pub fn from_fn(quad: &Arc<Quadrature>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = quad.nodes().map(f).collect();
        SampledFunction::new(quad.clone(), values)
    }

    pub fn constant(quad: &Arc<Quadrature>, c: f64) -> Self {
        SampledFunction::from_raw(quad.clone(), vec![c; quad.len()])
    }

    pub fn zeros(quad: &Arc<Quadrature>) -> Self {
        SampledFunction::constant(quad, 0.0)
    }

    pub fn quadrature(&self) -> &Arc<Quadrature> {
        &self.quad
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_same(&self, other: &SampledFunction) -> Result<()> {
        if self.quad.id() != other.quad.id() {
            return Err(Error::QuadratureMismatch(format!(
                "{} vs {}",
                self.quad.id(),
                other.quad.id()
            )));
        }
        Ok(())
    }

    pub fn scale(&self, c: f64) -> SampledFunction {
        SampledFunction::from_raw(self.quad.clone(), self.values.iter().map(|v| c * v).collect())
    }

    pub fn sub(&self, other: &SampledFunction) -> Result<SampledFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &SampledFunction) -> Result<SampledFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &SampledFunction) -> Result<SampledFunction> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn zip_with(
        &self,
        other: &SampledFunction,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<SampledFunction> {
        self.check_same(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(SampledFunction::from_raw(self.quad.clone(), values))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> SampledFunction {
        SampledFunction::from_raw(self.quad.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// `∫ f dμ`.
    pub fn integral(&self) -> f64 {
        self.quad.integrate(&self.values)
    }
}

/// `(sum_i w_i |f(ξ_i)|^p)^(1/p)`.
pub fn lp_norm(f: &SampledFunction, p: PNorm) -> Result<f64> {
    lp_norm_values(f.quadrature(), f.values(), p.value())
}

pub(crate) fn lp_norm_values(quad: &Quadrature, values: &[f64], p: f64) -> Result<f64> {
    let mut scale = 0.0f64;
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Domain(format!("non-finite value {v} at node {i}")));
        }
        scale = scale.max(v.abs());
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    if p == 2.0 {
        let s: f64 = quad
            .weights()
            .iter()
            .zip(values)
            .map(|(w, v)| w * v * v)
            .sum();
        // Unscaled sum is safe unless squares overflow.
        if s.is_finite() && s > 0.0 {
            return Ok(s.sqrt());
        }
    }
    let s: f64 = quad
        .weights()
        .iter()
        .zip(values)
        .map(|(w, v)| w * (v.abs() / scale).powf(p))
        .sum();
    Ok(scale * s.powf(1.0 / p))
}

/// `lp_norm(f - g, p)`.
pub fn distance(f: &SampledFunction, g: &SampledFunction, p: PNorm) -> Result<f64> {
    f.check_same(g)?;
    let diff: Vec<f64> = f.values.iter().zip(&g.values).map(|(a, b)| a - b).collect();
    lp_norm_values(f.quadrature(), &diff, p.value())
}

/// `∫ f ρ dμ`.
pub fn integrate_against(f: &SampledFunction, rho: &SampledFunction) -> Result<f64> {
    f.check_same(rho)?;
    Ok(f
        .quad
        .weights()
        .iter()
        .zip(&f.values)
        .zip(&rho.values)
        .map(|((w, a), b)| w * a * b)
        .sum())
}
