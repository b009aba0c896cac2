//! Neural projection operators.
//!
//! An operator `T` between function spaces is approximated by
//!
//! ```text
//! f  ──P_n──▶  c = φ_n(P_n f) ∈ R^{n+1}  ──MLP──▶  R^{m+1}  ──φ_m⁻¹──▶  span(q_0..q_m)
//! ```
//!
//! where `P_n`, `P_m` are orthogonal-polynomial projections and `φ` maps a
//! projection to its coordinates in the ordered basis. The network is a
//! plain feedforward MLP trained by gradient descent on the squared error
//! between predicted and projected target coordinates.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::function_space::{Quadrature, SampledFunction};
use crate::ortho_poly::{
    gram_schmidt, project_coefficients, reconstruct, CoefficientVector, OrthoPolyBasis,
    WeightFunctional,
};
use crate::textio::{fmt_f64, join_f64, parse_f64, parse_f64_list, parse_usize, Lines};

/// Deterministic RNG used for every random draw in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    pub fn tag(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::Usage(format!("unknown activation `{other}`"))),
        }
    }

    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `a = σ(z)`.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Dense layer `y = W x + b`, `W` stored row-major (`out × in`).
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    in_dim: usize,
    out_dim: usize,
}

impl Layer {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Layer {
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
            in_dim,
            out_dim,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, b) in self.weights.chunks_exact(self.in_dim).zip(&self.biases) {
            out.push(b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

/// Feedforward network; hidden layers use `activation`, the output layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
    activation: Activation,
}

/// Parameter gradients, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(net: &Mlp) -> Self {
        Gradients {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    /// Flattened in the same order as [`Mlp::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    fn add_scaled(&mut self, other: &Gradients, s: f64) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += s * y);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += s * y);
        }
    }
}

impl Mlp {
    /// All-zero network with the given layer sizes (input, hidden..., output).
    pub fn zeros(sizes: &[usize], activation: Activation) -> Result<Self> {
        Self::validate_sizes(sizes)?;
        Ok(Mlp {
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
            activation,
        })
    }

    /// Xavier-uniform weights, zero biases.
    pub fn random(sizes: &[usize], activation: Activation, rng: &mut impl Rng) -> Result<Self> {
        let mut net = Self::zeros(sizes, activation)?;
        for l in &mut net.layers {
            let limit = (6.0 / (l.in_dim + l.out_dim) as f64).sqrt();
            for w in &mut l.weights {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(net)
    }

    /// Builds a network from explicit layers.
    pub fn from_layers(layers: Vec<Layer>, activation: Activation) -> Result<Self> {
        let mut sizes = vec![layers.first().map(|l| l.in_dim).unwrap_or(0)];
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.in_dim * l.out_dim || l.biases.len() != l.out_dim {
                return Err(Error::Usage(format!("layer {i} has inconsistent parameter counts")));
            }
            if l.in_dim != *sizes.last().unwrap() {
                return Err(Error::Usage(format!(
                    "layer {i} expects {} inputs but the previous layer has {} outputs",
                    l.in_dim,
                    sizes.last().unwrap()
                )));
            }
            sizes.push(l.out_dim);
        }
        Self::validate_sizes(&sizes)?;
        let net = Mlp { layers, activation };
        if !net.parameters().iter().all(|p| p.is_finite()) {
            return Err(Error::Domain("network parameters must be finite".into()));
        }
        Ok(net)
    }

    fn validate_sizes(sizes: &[usize]) -> Result<()> {
        if sizes.len() < 3 {
            return Err(Error::Usage(
                "a network needs an input, at least one hidden layer and an output".into(),
            ));
        }
        if sizes.contains(&0) {
            return Err(Error::Usage("layer sizes must be positive".into()));
        }
        Ok(())
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].in_dim];
        s.extend(self.layers.iter().map(|l| l.out_dim));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    /// Flattened parameters: per layer, weights (row-major) then biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        let n: usize = self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum();
        if params.len() != n {
            return Err(Error::Usage(format!("expected {n} parameters, got {}", params.len())));
        }
        let mut it = params.iter();
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = *it.next().unwrap());
            l.biases.iter_mut().for_each(|b| *b = *it.next().unwrap());
        }
        Ok(())
    }

    fn check_input(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.input_dim() {
            return Err(Error::Usage(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                v.len()
            )));
        }
        Ok(())
    }

    /// Activations of every layer; `acts[0]` is the input, the last entry the output.
    fn forward_trace(&self, v: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(v.to_vec());
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(l.out_dim);
            l.affine(acts.last().unwrap(), &mut z);
            if i != last {
                z.iter_mut().for_each(|x| *x = self.activation.apply(*x));
            }
            acts.push(z);
        }
        acts
    }

    pub fn forward(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_input(v)?;
        Ok(self.forward_trace(v).pop().unwrap())
    }

    pub fn forward_batch(&self, batch: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        batch.iter().map(|v| self.forward(v)).collect()
    }

    /// Loss `½‖forward(v) - target‖²` and its exact gradient by backpropagation.
    pub fn gradient(&self, v: &[f64], target: &[f64]) -> Result<(f64, Gradients)> {
        self.check_input(v)?;
        if target.len() != self.output_dim() {
            return Err(Error::Usage(format!(
                "network has {} outputs, target has {}",
                self.output_dim(),
                target.len()
            )));
        }
        let acts = self.forward_trace(v);
        let out = acts.last().unwrap();
        let mut delta: Vec<f64> = out.iter().zip(target).map(|(o, t)| o - t).collect();
        let loss = 0.5 * delta.iter().map(|d| d * d).sum::<f64>();

        let mut grads = Gradients::zeros_like(self);
        for li in (0..self.layers.len()).rev() {
            let l = &self.layers[li];
            let input = &acts[li];
            for (o, d) in delta.iter().enumerate() {
                grads.biases[li][o] = *d;
                let row = &mut grads.weights[li][o * l.in_dim..(o + 1) * l.in_dim];
                row.iter_mut().zip(input).for_each(|(g, x)| *g = d * x);
            }
            if li > 0 {
                let mut prev = vec![0.0; l.in_dim];
                for (row, d) in l.weights.chunks_exact(l.in_dim).zip(&delta) {
                    prev.iter_mut().zip(row).for_each(|(p, w)| *p += w * d);
                }
                for (p, a) in prev.iter_mut().zip(input) {
                    *p *= self.activation.derivative_from_output(*a);
                }
                delta = prev;
            }
        }
        Ok((loss, grads))
    }

    /// Mean loss and mean gradient over `(input, target)` pairs, reduced in order.
    pub fn batch_gradient(&self, inputs: &[&[f64]], targets: &[&[f64]]) -> Result<(f64, Gradients)> {
        let mut total = Gradients::zeros_like(self);
        let mut loss = 0.0;
        let scale = 1.0 / inputs.len() as f64;
        for (x, t) in inputs.iter().zip(targets) {
            let (l, g) = self.gradient(x, t)?;
            loss += l;
            total.add_scaled(&g, scale);
        }
        Ok((loss * scale, total))
    }

    fn step(&mut self, g: &Gradients, lr: f64) {
        for (l, (gw, gb)) in self.layers.iter_mut().zip(g.weights.iter().zip(&g.biases)) {
            l.weights.iter_mut().zip(gw).for_each(|(w, d)| *w -= lr * d);
            l.biases.iter_mut().zip(gb).for_each(|(b, d)| *b -= lr * d);
        }
    }
}

/// Mean of `½‖forward(x) - t‖²` over a data set.
pub fn mean_loss(net: &Mlp, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
    let mut s = 0.0;
    for (x, t) in inputs.iter().zip(targets) {
        let y = net.forward(x)?;
        s += 0.5 * y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(s / inputs.len() as f64)
}

/// Hyperparameters of [`train_operator`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// `None` selects `4 * max(n, m) + 16`.
    pub hidden_width: Option<usize>,
    pub activation: Activation,
    /// Training stops once the mean training loss drops below this value.
    pub loss_tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 2000,
            batch_size: 10,
            seed: 0,
            hidden_width: None,
            activation: Activation::Tanh,
            loss_tolerance: 1e-10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Usage("learning_rate must be positive".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.hidden_width == Some(0) {
            return Err(Error::Usage("epochs, batch_size and hidden_width must be positive".into()));
        }
        if !(self.loss_tolerance > 0.0) {
            return Err(Error::Usage("loss_tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn width_for(&self, n: usize, m: usize) -> usize {
        self.hidden_width.unwrap_or(4 * n.max(m) + 16)
    }
}

/// Loss ceiling relative to the initial loss before training is declared diverged.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub epochs_run: usize,
    /// Mean training loss after each epoch.
    pub loss_history: Vec<f64>,
}

/// Gradient descent on `(input, target)` pairs. Deterministic for a fixed seed.
pub fn train_mlp(
    net: &mut Mlp,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TrainReport> {
    cfg.validate()?;
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::Usage("training needs a nonempty, aligned data set".into()));
    }
    let initial_loss = mean_loss(net, inputs, targets)?;
    let limit = DIVERGENCE_FACTOR * initial_loss.max(f64::MIN_POSITIVE);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut loss = initial_loss;
    let mut epochs_run = 0;
    for epoch in 1..=cfg.epochs {
        if loss < cfg.loss_tolerance {
            break;
        }
        if cfg.batch_size < inputs.len() {
            order.shuffle(rng);
        }
        for chunk in order.chunks(cfg.batch_size) {
            let xs: Vec<&[f64]> = chunk.iter().map(|&i| inputs[i].as_slice()).collect();
            let ts: Vec<&[f64]> = chunk.iter().map(|&i| targets[i].as_slice()).collect();
            let (_, g) = net.batch_gradient(&xs, &ts)?;
            net.step(&g, cfg.learning_rate);
        }
        loss = mean_loss(net, inputs, targets)?;
        epochs_run = epoch;
        history.push(loss);
        if !(loss <= limit) {
            return Err(Error::TrainingDiverged { epoch, loss, limit });
        }
    }
    Ok(TrainReport {
        initial_loss,
        final_loss: loss,
        epochs_run,
        loss_history: history,
    })
}

/// A weight function realized by a small network `R^d → R`, with its samples.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightNet {
    pub network: Mlp,
    pub samples: SampledFunction,
}

impl WeightNet {
    pub fn from_network(network: Mlp, quad: &Arc<Quadrature>) -> Result<Self> {
        if network.input_dim() != quad.dimension() || network.output_dim() != 1 {
            return Err(Error::Usage(format!(
                "weight net must map R^{} to R",
                quad.dimension()
            )));
        }
        let values = quad
            .nodes()
            .map(|x| network.forward(x).map(|y| y[0]))
            .collect::<Result<Vec<_>>>()?;
        let samples = SampledFunction::new(quad.clone(), values)?;
        Ok(WeightNet { network, samples })
    }

    /// Fits a weight network to `target` at the quadrature nodes.
    pub fn fit(target: &SampledFunction, hidden: usize, cfg: &TrainConfig) -> Result<(Self, TrainReport)> {
        let quad = target.quadrature();
        let mut rng = seeded_rng(cfg.seed ^ 0x5eed_0f_f1e1d);
        let mut net = Mlp::random(&[quad.dimension(), hidden, 1], cfg.activation, &mut rng)?;
        let inputs: Vec<Vec<f64>> = quad.nodes().map(|x| x.to_vec()).collect();
        let targets: Vec<Vec<f64>> = target.values().iter().map(|&v| vec![v]).collect();
        let report = train_mlp(&mut net, &inputs, &targets, cfg, &mut rng)?;
        Ok((WeightNet::from_network(net, quad)?, report))
    }

    pub fn functional(&self, p: crate::function_space::PNorm) -> Result<WeightFunctional> {
        WeightFunctional::new(self.samples.clone(), p)
    }
}

/// Builds an orthogonal basis against a learned weight; may fail with [`Error::Degenerate`].
pub fn learned_weight_basis(
    weight: &WeightNet,
    d: usize,
    max_degree: usize,
    p: crate::function_space::PNorm,
) -> Result<OrthoPolyBasis> {
    gram_schmidt(d, max_degree, &weight.functional(p)?)
}

/// Input/output bases with truncations, the coefficient network, and optional weight nets.
#[derive(Debug, Clone)]
pub struct NeuralProjectionOperator {
    pub input_basis: Arc<OrthoPolyBasis>,
    pub input_truncation: usize,
    pub output_basis: Arc<OrthoPolyBasis>,
    pub output_truncation: usize,
    pub network: Mlp,
    pub input_weight: Option<WeightNet>,
    pub output_weight: Option<WeightNet>,
    pub seed: u64,
    pub config: TrainConfig,
}

impl NeuralProjectionOperator {
    pub fn new(
        input_basis: Arc<OrthoPolyBasis>,
        n: usize,
        output_basis: Arc<OrthoPolyBasis>,
        m: usize,
        network: Mlp,
        config: TrainConfig,
    ) -> Result<Self> {
        if n >= input_basis.len() || m >= output_basis.len() {
            return Err(Error::Usage(format!(
                "truncations (n={n}, m={m}) exceed basis sizes ({}, {})",
                input_basis.len(),
                output_basis.len()
            )));
        }
        if network.input_dim() != n + 1 || network.output_dim() != m + 1 {
            return Err(Error::Usage(format!(
                "network maps R^{} → R^{} but the bases need R^{} → R^{}",
                network.input_dim(),
                network.output_dim(),
                n + 1,
                m + 1
            )));
        }
        Ok(NeuralProjectionOperator {
            input_basis,
            input_truncation: n,
            output_basis,
            output_truncation: m,
            network,
            input_weight: None,
            output_weight: None,
            seed: config.seed,
            config,
        })
    }

    /// `φ_n P_n f`.
    pub fn encode(&self, f: &SampledFunction) -> Result<CoefficientVector> {
        project_coefficients(&self.input_basis, self.input_truncation, f)
    }

    /// `φ_m⁻¹ c`.
    pub fn decode(&self, c: &[f64]) -> Result<SampledFunction> {
        reconstruct(&self.output_basis, c)
    }
}

/// `φ_m⁻¹ ∘ MLP ∘ φ_n ∘ P_n` applied to `f`.
pub fn apply_operator(op: &NeuralProjectionOperator, f: &SampledFunction) -> Result<SampledFunction> {
    let c = op.encode(f)?;
    let out = op.network.forward(&c)?;
    op.decode(&out)
}

/// Result of [`train_operator`].
#[derive(Debug, Clone)]
pub struct TrainedOperator {
    pub operator: NeuralProjectionOperator,
    pub report: TrainReport,
}

/// Fits the coefficient network of a neural projection operator to pairs `(f, T f)`.
pub fn train_operator(
    data: &[(SampledFunction, SampledFunction)],
    input_basis: Arc<OrthoPolyBasis>,
    n: usize,
    output_basis: Arc<OrthoPolyBasis>,
    m: usize,
    cfg: &TrainConfig,
) -> Result<TrainedOperator> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Usage("training data is empty".into()));
    }
    let mut rng = seeded_rng(cfg.seed);
    let sizes = [n + 1, cfg.width_for(n, m), m + 1];
    let network = Mlp::random(&sizes, cfg.activation, &mut rng)?;
    let mut op = NeuralProjectionOperator::new(input_basis, n, output_basis, m, network, cfg.clone())?;
    let mut inputs = Vec::with_capacity(data.len());
    let mut targets = Vec::with_capacity(data.len());
    for (f, g) in data {
        inputs.push(op.encode(f)?.into_inner());
        targets.push(project_coefficients(&op.output_basis, m, g)?.into_inner());
    }
    let report = train_mlp(&mut op.network, &inputs, &targets, cfg, &mut rng)?;
    Ok(TrainedOperator {
        operator: op,
        report,
    })
}

const MODEL_MAGIC: &str = "projop-model v1";

fn write_mlp(s: &mut String, name: &str, net: &Mlp) {
    let sizes: Vec<String> = net.sizes().iter().map(|v| v.to_string()).collect();
    let _ = writeln!(s, "{name} {} {}", net.activation.tag(), sizes.join(" "));
    for l in &net.layers {
        let _ = writeln!(s, "weights {}", join_f64(&l.weights));
        let _ = writeln!(s, "biases {}", join_f64(&l.biases));
    }
}

fn read_mlp(lines: &mut Lines<'_>, name: &str) -> Result<Mlp> {
    let head = lines.expect_key(name)?;
    let mut parts = head.split_whitespace();
    let activation = Activation::parse(parts.next().unwrap_or(""))
        .map_err(|e| Error::Format(e.to_string()))?;
    let sizes: Vec<usize> = parts.map(|t| parse_usize(t, "layer size")).collect::<Result<_>>()?;
    if sizes.len() < 2 {
        return Err(Error::Format(format!("{name}: missing layer sizes")));
    }
    let mut layers = Vec::new();
    for w in sizes.windows(2) {
        let weights = parse_f64_list(lines.expect_key("weights")?, "weights")?;
        let biases = parse_f64_list(lines.expect_key("biases")?, "biases")?;
        if weights.len() != w[0] * w[1] || biases.len() != w[1] {
            return Err(Error::Format(format!("{name}: parameter count mismatch")));
        }
        layers.push(Layer {
            weights,
            biases,
            in_dim: w[0],
            out_dim: w[1],
        });
    }
    Mlp::from_layers(layers, activation).map_err(|e| Error::Format(e.to_string()))
}

/// Plain-text parameter dump. Bases are referenced by name (their exports
/// live in separate files); every float is written with 17 significant digits
/// so the archive round-trips bitwise.
pub fn write_model(op: &NeuralProjectionOperator, input_basis_ref: &str, output_basis_ref: &str) -> String {
    let c = &op.config;
    let mut s = String::new();
    let _ = writeln!(s, "{MODEL_MAGIC}");
    let _ = writeln!(s, "seed {}", op.seed);
    let _ = writeln!(s, "input_basis {input_basis_ref}");
    let _ = writeln!(s, "input_truncation {}", op.input_truncation);
    let _ = writeln!(s, "output_basis {output_basis_ref}");
    let _ = writeln!(s, "output_truncation {}", op.output_truncation);
    let _ = writeln!(
        s,
        "config learning_rate={} epochs={} batch_size={} hidden_width={} activation={} loss_tolerance={}",
        fmt_f64(c.learning_rate),
        c.epochs,
        c.batch_size,
        c.width_for(op.input_truncation, op.output_truncation),
        c.activation.tag(),
        fmt_f64(c.loss_tolerance)
    );
    write_mlp(&mut s, "network", &op.network);
    for (name, w) in [("input_weight", &op.input_weight), ("output_weight", &op.output_weight)] {
        match w {
            None => {
                let _ = writeln!(s, "{name} none");
            }
            Some(w) => {
                let _ = writeln!(s, "{name} net");
                write_mlp(&mut s, "weight_network", &w.network);
            }
        }
    }
    s
}

/// Basis references and parameters read back from [`write_model`] output.
pub struct ModelArchive {
    pub input_basis_ref: String,
    pub output_basis_ref: String,
    text: String,
}

impl ModelArchive {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let (_, magic) = lines.expect_line("header")?;
        if magic != MODEL_MAGIC {
            return Err(Error::Format(format!("not a model archive: `{magic}`")));
        }
        lines.expect_key("seed")?;
        let input_basis_ref = lines.expect_key("input_basis")?.to_string();
        lines.expect_key("input_truncation")?;
        let output_basis_ref = lines.expect_key("output_basis")?.to_string();
        Ok(ModelArchive {
            input_basis_ref,
            output_basis_ref,
            text: text.to_string(),
        })
    }

    /// Rebuilds the operator given the already-loaded bases.
    pub fn load(
        &self,
        input_basis: Arc<OrthoPolyBasis>,
        output_basis: Arc<OrthoPolyBasis>,
    ) -> Result<NeuralProjectionOperator> {
        let mut lines = Lines::new(&self.text);
        lines.expect_line("header")?;
        let seed: u64 = lines
            .expect_key("seed")?
            .parse()
            .map_err(|_| Error::Format("bad seed".into()))?;
        lines.expect_key("input_basis")?;
        let n = parse_usize(lines.expect_key("input_truncation")?, "input_truncation")?;
        lines.expect_key("output_basis")?;
        let m = parse_usize(lines.expect_key("output_truncation")?, "output_truncation")?;
        let mut cfg = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        for kv in lines.expect_key("config")?.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad config entry `{kv}`")))?;
            match k {
                "learning_rate" => cfg.learning_rate = parse_f64(v, k)?,
                "epochs" => cfg.epochs = parse_usize(v, k)?,
                "batch_size" => cfg.batch_size = parse_usize(v, k)?,
                "hidden_width" => cfg.hidden_width = Some(parse_usize(v, k)?),
                "activation" => cfg.activation = Activation::parse(v).map_err(|e| Error::Format(e.to_string()))?,
                "loss_tolerance" => cfg.loss_tolerance = parse_f64(v, k)?,
                _ => return Err(Error::Format(format!("unknown config entry `{k}`"))),
            }
        }
        let network = read_mlp(&mut lines, "network")?;
        let mut op = NeuralProjectionOperator::new(input_basis, n, output_basis, m, network, cfg)?;
        let in_quad = op.input_basis.quadrature().clone();
        let out_quad = op.output_basis.quadrature().clone();
        for (name, quad) in [("input_weight", in_quad), ("output_weight", out_quad)] {
            let w = match lines.expect_key(name)? {
                "none" => None,
                "net" => Some(WeightNet::from_network(read_mlp(&mut lines, "weight_network")?, &quad)?),
                other => return Err(Error::Format(format!("{name}: unexpected `{other}`"))),
            };
            if name == "input_weight" {
                op.input_weight = w;
            } else {
                op.output_weight = w;
            }
        }
        if lines.next_line().is_some() {
            return Err(Error::Format("trailing data in model archive".into()));
        }
        Ok(op)
    }
}
