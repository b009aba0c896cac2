//! Ground-truth operators `T: L^p → L^p` on one quadrature: Fredholm integral
//! operators, Nemytskii (pointwise) operators, their Hammerstein composition,
//! and learned operators. Kernels, weights and forcings are closed-form
//! evaluators selected by tag so experiment configs stay declarative.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::function_space::{Quadrature, SampledFunction};
use crate::neural_op::{apply_operator, NeuralProjectionOperator};

/// Closed-form scalar fields on `[-1,1]^d`, addressed by tag.
///
/// Textual forms (see [`Field::parse`]): `const:<c>`, `x<i>`, `x<i>^<k>`,
/// `exp:x<i>`, `sin:x<i>`, `cos:x<i>`, `affine:<c0>,<c1>,...` (`c0 + Σ c_i x_{i-1}`).
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Constant(f64),
    Power { axis: usize, exponent: u32 },
    Exp(usize),
    Sin(usize),
    Cos(usize),
    Affine(Vec<f64>),
}

impl Field {
    pub fn coordinate(axis: usize) -> Field {
        Field::Power { axis, exponent: 1 }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Field::Constant(c) => *c,
            Field::Power { axis, exponent } => x[*axis].powi(*exponent as i32),
            Field::Exp(a) => x[*a].exp(),
            Field::Sin(a) => x[*a].sin(),
            Field::Cos(a) => x[*a].cos(),
            Field::Affine(c) => c[0] + c[1..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>(),
        }
    }

    /// Highest coordinate index referenced, if any.
    pub fn max_axis(&self) -> Option<usize> {
        match self {
            Field::Constant(_) => None,
            Field::Power { axis, .. } => Some(*axis),
            Field::Exp(a) | Field::Sin(a) | Field::Cos(a) => Some(*a),
            Field::Affine(c) => (c.len() > 1).then(|| c.len() - 2),
        }
    }

    pub fn sample(&self, quad: &Arc<Quadrature>) -> Result<SampledFunction> {
        if let Some(a) = self.max_axis() {
            if a >= quad.dimension() {
                return Err(Error::Usage(format!(
                    "field `{self}` uses x{a} but the domain has dimension {}",
                    quad.dimension()
                )));
            }
        }
        SampledFunction::from_fn(quad, |x| self.eval(x))
    }

    pub fn parse(s: &str) -> Result<Field> {
        let s = s.trim();
        let bad = || Error::Usage(format!("unknown field `{s}`"));
        let axis = |t: &str| -> Result<usize> {
            t.strip_prefix('x')
                .and_then(|n| n.parse::<usize>().ok())
                .ok_or_else(bad)
        };
        if let Some(v) = s.strip_prefix("const:") {
            return v.trim().parse().map(Field::Constant).map_err(|_| bad());
        }
        if let Some(v) = s.strip_prefix("exp:") {
            return Ok(Field::Exp(axis(v)?));
        }
        if let Some(v) = s.strip_prefix("sin:") {
            return Ok(Field::Sin(axis(v)?));
        }
        if let Some(v) = s.strip_prefix("cos:") {
            return Ok(Field::Cos(axis(v)?));
        }
        if let Some(v) = s.strip_prefix("affine:") {
            let c: Vec<f64> = v
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            if c.is_empty() {
                return Err(bad());
            }
            return Ok(Field::Affine(c));
        }
        if let Some((a, e)) = s.split_once('^') {
            let exponent = e.parse::<u32>().map_err(|_| bad())?;
            return Ok(Field::Power {
                axis: axis(a)?,
                exponent,
            });
        }
        Ok(Field::Power {
            axis: axis(s)?,
            exponent: 1,
        })
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Constant(c) => write!(f, "const:{c}"),
            Field::Power { axis, exponent: 1 } => write!(f, "x{axis}"),
            Field::Power { axis, exponent } => write!(f, "x{axis}^{exponent}"),
            Field::Exp(a) => write!(f, "exp:x{a}"),
            Field::Sin(a) => write!(f, "sin:x{a}"),
            Field::Cos(a) => write!(f, "cos:x{a}"),
            Field::Affine(c) => {
                let parts: Vec<String> = c.iter().map(|v| v.to_string()).collect();
                write!(f, "affine:{}", parts.join(","))
            }
        }
    }
}

/// Integral kernels `k(t, s)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// Rank one: `k(t, s) = a(t) b(s)`.
    Separable { a: Field, b: Field },
    /// Smooth full-rank kernel `exp(-|t - s|^2 / (2 ℓ^2))`.
    Gaussian { length_scale: f64 },
}

impl Kernel {
    /// `k(t, s) = t s` on the first coordinate.
    pub fn product() -> Kernel {
        Kernel::Separable {
            a: Field::coordinate(0),
            b: Field::coordinate(0),
        }
    }

    pub fn eval(&self, t: &[f64], s: &[f64]) -> f64 {
        match self {
            Kernel::Separable { a, b } => a.eval(t) * b.eval(s),
            Kernel::Gaussian { length_scale } => {
                let r2: f64 = t.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum();
                (-r2 / (2.0 * length_scale * length_scale)).exp()
            }
        }
    }
}

/// Pointwise nonlinearity `g(t, u)` of a Nemytskii operator.
#[derive(Clone)]
pub enum Nonlinearity {
    Identity,
    Square,
    Cube,
    Sin,
    Tanh,
    /// Arbitrary continuous `g(t, u)`; not expressible in config files.
    Custom(Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl PartialEq for Nonlinearity {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Nonlinearity::Custom(a), Nonlinearity::Custom(b)) => Arc::ptr_eq(a, b),
            _ => self.tag() == other.tag(),
        }
    }
}

impl Nonlinearity {
    pub fn eval(&self, t: &[f64], u: f64) -> f64 {
        match self {
            Nonlinearity::Identity => u,
            Nonlinearity::Square => u * u,
            Nonlinearity::Cube => u * u * u,
            Nonlinearity::Sin => u.sin(),
            Nonlinearity::Tanh => u.tanh(),
            Nonlinearity::Custom(g) => g(t, u),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Nonlinearity::Identity => "identity",
            Nonlinearity::Square => "square",
            Nonlinearity::Cube => "cube",
            Nonlinearity::Sin => "sin",
            Nonlinearity::Tanh => "tanh",
            Nonlinearity::Custom(_) => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Nonlinearity> {
        Ok(match s.trim() {
            "identity" => Nonlinearity::Identity,
            "square" => Nonlinearity::Square,
            "cube" => Nonlinearity::Cube,
            "sin" => Nonlinearity::Sin,
            "tanh" => Nonlinearity::Tanh,
            other => return Err(Error::Usage(format!("unknown nonlinearity `{other}`"))),
        })
    }
}

/// `(Tf)(t) = λ Σ_s w_s k(t, ξ_s) f(ξ_s)`.
pub fn fredholm_apply(kernel: &Kernel, lambda: f64, f: &SampledFunction) -> SampledFunction {
    let quad = f.quadrature();
    if lambda == 0.0 {
        return SampledFunction::zeros(quad);
    }
    let values = match kernel {
        Kernel::Separable { a, b } => {
            let moment: f64 = quad
                .nodes()
                .zip(quad.weights())
                .zip(f.values())
                .map(|((s, w), v)| w * b.eval(s) * v)
                .sum();
            quad.nodes().map(|t| lambda * a.eval(t) * moment).collect()
        }
        Kernel::Gaussian { .. } => {
            let wf: Vec<f64> = quad
                .weights()
                .iter()
                .zip(f.values())
                .map(|(w, v)| w * v)
                .collect();
            quad.nodes()
                .map(|t| {
                    lambda
                        * quad
                            .nodes()
                            .zip(&wf)
                            .map(|(s, c)| kernel.eval(t, s) * c)
                            .sum::<f64>()
                })
                .collect()
        }
    };
    SampledFunction::from_raw(quad.clone(), values)
}

/// `(Tf)(ξ) = g(ξ, f(ξ))`.
pub fn nemytskii_apply(g: &Nonlinearity, f: &SampledFunction) -> Result<SampledFunction> {
    let quad = f.quadrature();
    let values: Vec<f64> = quad
        .nodes()
        .zip(f.values())
        .map(|(t, &u)| g.eval(t, u))
        .collect();
    SampledFunction::new(quad.clone(), values)
}

/// `λ ∫ k(t, s) g(s, f(s)) dμ(s)`.
pub fn hammerstein_apply(
    kernel: &Kernel,
    g: &Nonlinearity,
    lambda: f64,
    f: &SampledFunction,
) -> Result<SampledFunction> {
    let inner = nemytskii_apply(g, f)?;
    Ok(fredholm_apply(kernel, lambda, &inner))
}

/// Closed-form solution of `x = λ ∫ a(t) b(s) x(s) dμ(s) + f` on the quadrature:
/// `x = f + λ a c` with `c = ∫ b f dμ / (1 - λ ∫ a b dμ)`.
pub fn separable_fredholm_solution(
    a: &Field,
    b: &Field,
    lambda: f64,
    f: &SampledFunction,
) -> Result<SampledFunction> {
    let quad = f.quadrature();
    let a_s = a.sample(quad)?;
    let b_s = b.sample(quad)?;
    let ab = a_s.mul(&b_s)?.integral();
    let bf = b_s.mul(f)?.integral();
    let denom = 1.0 - lambda * ab;
    if denom.abs() < 1e-12 {
        return Err(Error::Singular(format!(
            "resonant lambda = {lambda}: 1 - lambda * ∫ab dμ = {denom:e}"
        )));
    }
    let c = bf / denom;
    f.zip_with(&a_s, |fv, av| fv + lambda * av * c)
}

/// A concrete operator with a tag and its parameters.
#[derive(Debug, Clone)]
pub enum OperatorHandle {
    /// Zero operator.
    Zero,
    Fredholm { kernel: Kernel, lambda: f64 },
    Nemytskii { g: Nonlinearity },
    Hammerstein {
        kernel: Kernel,
        g: Nonlinearity,
        lambda: f64,
    },
    Learned(Arc<NeuralProjectionOperator>),
}

impl OperatorHandle {
    pub fn tag(&self) -> &'static str {
        match self {
            OperatorHandle::Zero => "zero",
            OperatorHandle::Fredholm {
                kernel: Kernel::Separable { .. },
                ..
            } => "fredholm-separable",
            OperatorHandle::Fredholm {
                kernel: Kernel::Gaussian { .. },
                ..
            } => "fredholm-smooth",
            OperatorHandle::Nemytskii { .. } => "nemytskii",
            OperatorHandle::Hammerstein { .. } => "hammerstein",
            OperatorHandle::Learned(_) => "learned",
        }
    }

    /// Evaluates `T f` on `f`'s quadrature.
    pub fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        let out = match self {
            OperatorHandle::Zero => SampledFunction::zeros(f.quadrature()),
            OperatorHandle::Fredholm { kernel, lambda } => fredholm_apply(kernel, *lambda, f),
            OperatorHandle::Nemytskii { g } => nemytskii_apply(g, f)?,
            OperatorHandle::Hammerstein { kernel, g, lambda } => {
                hammerstein_apply(kernel, g, *lambda, f)?
            }
            OperatorHandle::Learned(op) => {
                let out = apply_operator(op, f)?;
                f.check_same(&out)?;
                out
            }
        };
        if !out.is_finite() {
            return Err(Error::Domain(format!(
                "operator `{}` produced non-finite values",
                self.tag()
            )));
        }
        Ok(out)
    }

    /// Analytic solution of `T x + f = x` when `T` is a rank-one Fredholm operator.
    pub fn analytic_solution(&self, f: &SampledFunction) -> Option<Result<SampledFunction>> {
        match self {
            OperatorHandle::Zero => Some(Ok(f.clone())),
            OperatorHandle::Fredholm {
                kernel: Kernel::Separable { a, b },
                lambda,
            } => Some(separable_fredholm_solution(a, b, *lambda, f)),
            _ => None,
        }
    }
}
