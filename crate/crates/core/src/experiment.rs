//! Declarative experiment runner behind the `projop` binary.
//!
//! A config is a line-oriented `key = value` file with `#` comments:
//!
//! ```text
//! kind = converge-study
//! operator = fredholm-separable
//! lambda = 0.5
//! forcing = x0
//! n_list = 1, 2, 4, 8
//! ```
//!
//! Every value is validated before any computation and all problems are
//! reported together, each with its line number. Outputs are written to the
//! `output` directory (relative paths resolve against the config file) only
//! after the whole run succeeds; a failed run leaves a `.failed` marker.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use crate::error::{ConfigIssue, Error, Result};
use crate::fixed_point::{
    convergence_study, multistart, solve, Method, ProjectedEquation, Reference, StudyRow, StudySettings, StudyTable,
};
use crate::function_space::{build_quadrature, distance, lp_norm, PNorm, Quadrature};
use crate::leray_schauder::{check_net, greedy_net, ls_project, read_projector, write_projector, CompactSampleSet};
use crate::neural_op::{
    apply_operator, learned_weight_basis, seeded_rng, train_operator, write_model, Activation, TrainConfig, WeightNet,
};
use crate::operator_zoo::{Field, Kernel, Nonlinearity, OperatorHandle};
use crate::ortho_poly::{
    export_basis, gram_schmidt, import_basis, project, random_band_limited, tensor_legendre, uniform_bound, BasisKind,
    OrthoPolyBasis, WeightFunctional,
};
use crate::textio::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    ProjectConverge,
    LsNet,
    TrainOperator,
    Solve,
    ConvergeStudy,
}

use ExperimentKind::*;

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [ProjectConverge, LsNet, TrainOperator, Solve, ConvergeStudy];

    pub fn tag(self) -> &'static str {
        match self {
            ProjectConverge => "project-converge",
            LsNet => "ls-net",
            TrainOperator => "train-operator",
            Solve => "solve",
            ConvergeStudy => "converge-study",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == s)
    }
}

const OPERATOR_TAGS: [&str; 6] = ["zero", "identity", "fredholm-separable", "fredholm-smooth", "nemytskii", "hammerstein"];

struct KeySpec {
    name: &'static str,
    kinds: &'static [ExperimentKind],
    /// `None`: required, or derived from other keys (see [`ExperimentConfig`]).
    default: Option<&'static str>,
}

const ALL_KINDS: &[ExperimentKind] = &ExperimentKind::ALL;
const OPERATOR_KINDS: &[ExperimentKind] = &[TrainOperator, Solve, ConvergeStudy];
const SOLVER_KINDS: &[ExperimentKind] = &[Solve, ConvergeStudy];

const fn key(name: &'static str, kinds: &'static [ExperimentKind], default: Option<&'static str>) -> KeySpec {
    KeySpec { name, kinds, default }
}

const KEYS: &[KeySpec] = &[
    key("kind", ALL_KINDS, None),
    key("dimension", ALL_KINDS, Some("1")),
    key("quadrature_points", ALL_KINDS, None),
    key("basis", ALL_KINDS, Some("legendre")),
    key("degree", ALL_KINDS, Some("8")),
    key("p", ALL_KINDS, Some("2")),
    key("weight", ALL_KINDS, Some("const:1")),
    key("seed", ALL_KINDS, Some("0")),
    key("output", ALL_KINDS, Some("out")),
    key("function", &[ProjectConverge], None),
    key("n_list", &[ProjectConverge, ConvergeStudy], None),
    key("members", &[LsNet], None),
    key("member_count", &[LsNet], Some("20")),
    key("epsilon", &[LsNet], None),
    key("operator", OPERATOR_KINDS, None),
    key("lambda", OPERATOR_KINDS, Some("1")),
    key("kernel", OPERATOR_KINDS, Some("separable")),
    key("kernel_a", OPERATOR_KINDS, Some("x0")),
    key("kernel_b", OPERATOR_KINDS, Some("x0")),
    key("length_scale", OPERATOR_KINDS, Some("0.5")),
    key("nonlinearity", OPERATOR_KINDS, Some("identity")),
    key("n", &[TrainOperator, Solve], None),
    key("m", &[TrainOperator], None),
    key("samples", &[TrainOperator], Some("50")),
    key("test_samples", &[TrainOperator], Some("50")),
    key("learning_rate", &[TrainOperator], Some("0.1")),
    key("epochs", &[TrainOperator], Some("2000")),
    key("batch_size", &[TrainOperator], Some("10")),
    key("hidden_width", &[TrainOperator], None),
    key("activation", &[TrainOperator], Some("tanh")),
    key("loss_tolerance", &[TrainOperator], Some("1e-10")),
    key("learned_weight", &[TrainOperator], Some("false")),
    key("forcing", SOLVER_KINDS, None),
    key("method", SOLVER_KINDS, Some("picard")),
    key("tolerance", SOLVER_KINDS, Some("1e-12")),
    key("max_iterations", SOLVER_KINDS, Some("100")),
    key("starts", &[Solve], Some("1")),
];

fn required(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ProjectConverge => &["function"],
        LsNet => &["members", "epsilon"],
        TrainOperator => &["operator"],
        Solve => &["operator", "forcing"],
        ConvergeStudy => &["operator", "forcing", "n_list"],
    }
}

/// Where the members of an `ls-net` compact come from.
#[derive(Debug, Clone, PartialEq)]
pub enum MemberSource {
    /// `member_count` random band-limited functions.
    Random(usize),
    Fields(Vec<Field>),
}

/// Operator tag plus the parameters that instantiate it.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub tag: String,
    pub lambda: f64,
    pub kernel: String,
    pub kernel_a: Field,
    pub kernel_b: Field,
    pub length_scale: f64,
    pub nonlinearity: Nonlinearity,
}

impl OperatorSpec {
    fn kernel(&self) -> Kernel {
        match self.kernel.as_str() {
            "gaussian" => Kernel::Gaussian { length_scale: self.length_scale },
            _ => Kernel::Separable { a: self.kernel_a.clone(), b: self.kernel_b.clone() },
        }
    }

    pub fn build(&self) -> OperatorHandle {
        match self.tag.as_str() {
            "zero" => OperatorHandle::Zero,
            "identity" => OperatorHandle::Nemytskii { g: Nonlinearity::Identity },
            "fredholm-separable" => OperatorHandle::Fredholm {
                kernel: Kernel::Separable { a: self.kernel_a.clone(), b: self.kernel_b.clone() },
                lambda: self.lambda,
            },
            "fredholm-smooth" => OperatorHandle::Fredholm {
                kernel: Kernel::Gaussian { length_scale: self.length_scale },
                lambda: self.lambda,
            },
            "nemytskii" => OperatorHandle::Nemytskii { g: self.nonlinearity.clone() },
            _ => OperatorHandle::Hammerstein {
                kernel: self.kernel(),
                g: self.nonlinearity.clone(),
                lambda: self.lambda,
            },
        }
    }
}

/// A fully validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub dimension: usize,
    pub quadrature_points: usize,
    pub basis: BasisKind,
    pub degree: usize,
    pub p: PNorm,
    pub weight: Field,
    pub seed: u64,
    pub output: PathBuf,
    pub function: Option<Field>,
    pub n_list: Vec<usize>,
    pub members: Option<MemberSource>,
    pub epsilon: Option<f64>,
    pub operator: Option<OperatorSpec>,
    pub n: usize,
    pub m: usize,
    pub samples: usize,
    pub test_samples: usize,
    pub train: TrainConfig,
    pub learned_weight: bool,
    pub forcing: Option<Field>,
    pub method: Method,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub starts: usize,
    /// Every relevant key with its resolved value, defaults included.
    pub echo: Vec<(String, String)>,
}

struct Entry {
    line: usize,
    value: String,
}

struct Validator<'a> {
    entries: &'a BTreeMap<String, Entry>,
    issues: Vec<ConfigIssue>,
    echo: Vec<(String, String)>,
}

impl Validator<'_> {
    fn issue(&mut self, key: &str, message: impl Into<String>) {
        let lines = self.entries.get(key).map(|e| vec![e.line]).unwrap_or_default();
        self.issues.push(ConfigIssue {
            lines,
            key: key.to_string(),
            message: message.into(),
        });
    }

    fn raw(&self, key: &str) -> Option<String> {
        self.entries
            .get(key)
            .map(|e| e.value.clone())
            .or_else(|| KEYS.iter().find(|k| k.name == key).and_then(|k| k.default.map(String::from)))
    }

    fn get<T>(&mut self, key: &str, parse: impl FnOnce(&str) -> std::result::Result<T, String>) -> Option<T> {
        let raw = self.raw(key)?;
        match parse(&raw) {
            Ok(v) => {
                self.echo.push((key.to_string(), raw));
                Some(v)
            }
            Err(msg) => {
                self.issue(key, msg);
                None
            }
        }
    }

    /// Like [`Self::get`] for keys whose default depends on other values.
    fn get_or<T>(&mut self, key: &str, default: String, parse: impl FnOnce(&str) -> std::result::Result<T, String>) -> Option<T> {
        if self.entries.contains_key(key) {
            self.get(key, parse)
        } else {
            match parse(&default) {
                Ok(v) => {
                    self.echo.push((key.to_string(), default));
                    Some(v)
                }
                Err(msg) => {
                    self.issue(key, format!("default `{default}` is invalid: {msg}"));
                    None
                }
            }
        }
    }
}

fn p_usize(min: usize) -> impl Fn(&str) -> std::result::Result<usize, String> {
    move |s| match s.parse::<usize>() {
        Ok(v) if v >= min => Ok(v),
        Ok(v) => Err(format!("must be at least {min}, got {v}")),
        Err(_) => Err(format!("expected a non-negative integer, got `{s}`")),
    }
}

fn p_f64(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, got `{s}`")),
    }
}

fn p_positive(s: &str) -> std::result::Result<f64, String> {
    let v = p_f64(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn p_field(dimension: usize) -> impl Fn(&str) -> std::result::Result<Field, String> {
    move |s| {
        let f = Field::parse(s).map_err(|e| e.to_string())?;
        match f.max_axis() {
            Some(a) if a >= dimension => Err(format!("`{s}` uses x{a} but dimension is {dimension}")),
            _ => Ok(f),
        }
    }
}

fn p_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("`{}` is not a non-negative integer", t.trim())))
        .collect::<std::result::Result<_, _>>()?;
    if v.is_empty() || v.windows(2).any(|w| w[0] >= w[1]) {
        return Err("must be a nonempty, strictly increasing list".into());
    }
    Ok(v)
}

fn p_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got `{s}`")),
    }
}

/// Parses and validates a config; on failure every problem found is returned.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut issues = Vec::new();
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let Some((k, v)) = t.split_once('=') else {
            issues.push(ConfigIssue { lines: vec![n], key: t.to_string(), message: "expected `key = value`".into() });
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.iter().any(|s| s.name == k) {
            issues.push(ConfigIssue { lines: vec![n], key: k.to_string(), message: "unknown key".into() });
            continue;
        }
        if let Some(prev) = entries.get(k) {
            issues.push(ConfigIssue {
                lines: vec![prev.line, n],
                key: k.to_string(),
                message: "duplicate key".into(),
            });
            continue;
        }
        entries.insert(k.to_string(), Entry { line: n, value: v.to_string() });
    }

    let kind = match entries.get("kind") {
        None => {
            issues.push(ConfigIssue { lines: vec![], key: "kind".into(), message: "missing required key".into() });
            None
        }
        Some(e) => match ExperimentKind::parse(&e.value) {
            Some(k) => Some(k),
            None => {
                let tags: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.tag()).collect();
                issues.push(ConfigIssue {
                    lines: vec![e.line],
                    key: "kind".into(),
                    message: format!("unknown experiment kind `{}` (expected one of {})", e.value, tags.join(", ")),
                });
                None
            }
        },
    };
    let Some(kind) = kind else {
        return Err(Error::Config(issues));
    };

    for (k, e) in &entries {
        let spec = KEYS.iter().find(|s| s.name == k).unwrap();
        if !spec.kinds.contains(&kind) {
            issues.push(ConfigIssue {
                lines: vec![e.line],
                key: k.clone(),
                message: format!("not used by experiment kind `{}`", kind.tag()),
            });
        }
    }
    for r in required(kind) {
        if !entries.contains_key(*r) {
            issues.push(ConfigIssue { lines: vec![], key: r.to_string(), message: "missing required key".into() });
        }
    }

    let mut v = Validator { entries: &entries, issues, echo: Vec::new() };
    v.echo.push(("kind".into(), kind.tag().into()));
    let dimension = v.get("dimension", p_usize(1)).unwrap_or(1);
    let degree = v.get("degree", p_usize(0)).unwrap_or(0);
    let quadrature_points = v.get_or("quadrature_points", (2 * degree + 4).to_string(), p_usize(1));
    let basis = v.get("basis", |s| match s {
        "legendre" => Ok(BasisKind::TensorLegendre),
        "gram-schmidt" => Ok(BasisKind::GramSchmidt),
        _ => Err(format!("expected legendre or gram-schmidt, got `{s}`")),
    });
    let p = v.get("p", |s| PNorm::new(p_f64(s)?).map_err(|e| e.to_string()));
    let weight = v.get("weight", p_field(dimension));
    let seed = v.get("seed", |s| s.parse::<u64>().map_err(|_| format!("expected an unsigned integer, got `{s}`")));
    let output = v.get("output", |s| if s.is_empty() { Err("must not be empty".into()) } else { Ok(PathBuf::from(s)) });

    let uses = |k: &str| KEYS.iter().any(|s| s.name == k && s.kinds.contains(&kind));
    let opt_field = |v: &mut Validator, k: &str| if uses(k) { v.get(k, p_field(dimension)) } else { None };

    let function = opt_field(&mut v, "function");
    let forcing = opt_field(&mut v, "forcing");
    let n_list = match kind {
        ProjectConverge => {
            let all: Vec<String> = (0..=degree).map(|k| k.to_string()).collect();
            v.get_or("n_list", all.join(","), p_list)
        }
        ConvergeStudy => v.get("n_list", p_list),
        _ => Some(Vec::new()),
    };
    let mut members = None;
    let mut epsilon = None;
    if kind == LsNet {
        let count = v.get("member_count", p_usize(1));
        let count = count.unwrap_or(1);
        members = v.get("members", |s| {
            if s == "random" {
                Ok(MemberSource::Random(count))
            } else {
                s.split(';')
                    .map(|t| p_field(dimension)(t.trim()))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map(MemberSource::Fields)
            }
        });
        epsilon = v.get("epsilon", p_positive);
    }

    let mut operator = None;
    if uses("operator") {
        let tag = v.get("operator", |s| {
            if OPERATOR_TAGS.contains(&s) {
                Ok(s.to_string())
            } else {
                Err(format!("unknown operator `{s}` (expected one of {})", OPERATOR_TAGS.join(", ")))
            }
        });
        let lambda = v.get("lambda", p_f64);
        let kernel = v.get("kernel", |s| match s {
            "separable" | "gaussian" => Ok(s.to_string()),
            _ => Err(format!("expected separable or gaussian, got `{s}`")),
        });
        let kernel_a = v.get("kernel_a", p_field(dimension));
        let kernel_b = v.get("kernel_b", p_field(dimension));
        let length_scale = v.get("length_scale", p_positive);
        let nonlinearity = v.get("nonlinearity", |s| Nonlinearity::parse(s).map_err(|e| e.to_string()));
        if let (Some(tag), Some(lambda), Some(kernel), Some(kernel_a), Some(kernel_b), Some(length_scale), Some(nonlinearity)) =
            (tag, lambda, kernel, kernel_a, kernel_b, length_scale, nonlinearity)
        {
            operator = Some(OperatorSpec { tag, lambda, kernel, kernel_a, kernel_b, length_scale, nonlinearity });
        }
    }

    let n = if uses("n") { v.get_or("n", degree.to_string(), p_usize(0)) } else { Some(0) };
    let m = if uses("m") { v.get_or("m", degree.to_string(), p_usize(0)) } else { Some(0) };
    let mut train = TrainConfig::default();
    let mut samples = 0;
    let mut test_samples = 0;
    let mut learned_weight = false;
    if kind == TrainOperator {
        samples = v.get("samples", p_usize(1)).unwrap_or(1);
        test_samples = v.get("test_samples", p_usize(1)).unwrap_or(1);
        if let Some(x) = v.get("learning_rate", p_positive) {
            train.learning_rate = x;
        }
        if let Some(x) = v.get("epochs", p_usize(1)) {
            train.epochs = x;
        }
        if let Some(x) = v.get("batch_size", p_usize(1)) {
            train.batch_size = x;
        }
        let width = 4 * n.unwrap_or(0).max(m.unwrap_or(0)) + 16;
        train.hidden_width = v.get_or("hidden_width", width.to_string(), p_usize(1));
        if let Some(x) = v.get("activation", |s| Activation::parse(s).map_err(|e| e.to_string())) {
            train.activation = x;
        }
        if let Some(x) = v.get("loss_tolerance", p_positive) {
            train.loss_tolerance = x;
        }
        learned_weight = v.get("learned_weight", p_bool).unwrap_or(false);
    }
    train.seed = seed.unwrap_or(0);
    let mut method = Method::Picard;
    let mut tolerance = 1e-12;
    let mut max_iterations = 100;
    let mut starts = 1;
    if uses("method") {
        method = v.get("method", |s| Method::parse(s).map_err(|e| e.to_string())).unwrap_or(method);
        tolerance = v.get("tolerance", p_positive).unwrap_or(tolerance);
        max_iterations = v.get("max_iterations", p_usize(1)).unwrap_or(max_iterations);
    }
    if uses("starts") {
        starts = v.get("starts", p_usize(1)).unwrap_or(1);
    }

    let Validator { mut issues, echo, .. } = v;
    if let Some(q) = quadrature_points {
        if q <= degree {
            issues.push(ConfigIssue {
                lines: entries.get("quadrature_points").map(|e| vec![e.line]).unwrap_or_default(),
                key: "quadrature_points".into(),
                message: format!("degree {degree} needs at least {} points per axis", degree + 1),
            });
        }
    }
    let size = crate::ortho_poly::basis_size(dimension, degree);
    for (k, val) in [("n", n), ("m", m)] {
        if let Some(val) = val {
            if uses(k) && val >= size {
                issues.push(ConfigIssue {
                    lines: entries.get(k).map(|e| vec![e.line]).unwrap_or_default(),
                    key: k.into(),
                    message: format!("must be below the basis size {size}"),
                });
            }
        }
    }
    if let Some(list) = &n_list {
        if list.last().is_some_and(|&l| l >= size) {
            issues.push(ConfigIssue {
                lines: entries.get("n_list").map(|e| vec![e.line]).unwrap_or_default(),
                key: "n_list".into(),
                message: format!("entries must be below the basis size {size}"),
            });
        }
    }
    if !issues.is_empty() {
        issues.sort_by_key(|i| i.lines.first().copied().unwrap_or(usize::MAX));
        return Err(Error::Config(issues));
    }
    Ok(ExperimentConfig {
        kind,
        dimension,
        quadrature_points: quadrature_points.unwrap(),
        basis: basis.unwrap(),
        degree,
        p: p.unwrap(),
        weight: weight.unwrap(),
        seed: seed.unwrap(),
        output: output.unwrap(),
        function,
        n_list: n_list.unwrap(),
        members,
        epsilon,
        operator,
        n: n.unwrap(),
        m: m.unwrap(),
        samples,
        test_samples,
        train,
        learned_weight,
        forcing,
        method,
        tolerance,
        max_iterations,
        starts,
        echo,
    })
}

/// Reads a config file; a relative `output` resolves against the file's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    if cfg.output.is_relative() {
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.output = base.join(&cfg.output);
    }
    Ok(cfg)
}

/// Files produced by a run, plus summary values for `run.meta`.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
    pub results: Vec<(String, String)>,
}

impl Artifacts {
    fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    fn result(&mut self, key: &str, value: impl ToString) {
        self.results.push((key.to_string(), value.to_string()));
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub output: PathBuf,
    pub files: Vec<PathBuf>,
}

pub const FAILED_MARKER: &str = ".failed";
pub const META_FILE: &str = "run.meta";

/// One-line JSON error record.
pub fn error_record(e: &Error) -> String {
    serde_json::json!({
        "error": e.kind(),
        "exit_code": e.exit_code(),
        "message": e.to_string(),
    })
    .to_string()
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Runs an experiment and writes its artifacts. On failure only the
/// `.failed` marker (holding the error record) is written.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let result = execute(cfg);
    fs::create_dir_all(&cfg.output).map_err(|e| Error::Io(format!("{}: {e}", cfg.output.display())))?;
    let marker = cfg.output.join(FAILED_MARKER);
    let art = match result {
        Ok(a) => a,
        Err(e) => {
            write_atomic(&marker, &(error_record(&e) + "\n"))?;
            return Err(e);
        }
    };
    let mut files = Vec::new();
    for (name, contents) in &art.files {
        let path = cfg.output.join(name);
        write_atomic(&path, contents)?;
        files.push(path);
    }
    let mut meta = String::new();
    let _ = writeln!(meta, "projop-run v1");
    let _ = writeln!(meta, "version {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(meta, "seed {}", cfg.seed);
    let _ = writeln!(meta, "wall_time_seconds {:.6}", start.elapsed().as_secs_f64());
    let _ = writeln!(meta, "[config]");
    for (k, v) in &cfg.echo {
        let _ = writeln!(meta, "{k} = {v}");
    }
    let _ = writeln!(meta, "[results]");
    for (k, v) in &art.results {
        let _ = writeln!(meta, "{k} = {v}");
    }
    let _ = writeln!(meta, "[files]");
    for (name, _) in &art.files {
        let _ = writeln!(meta, "{name}");
    }
    let meta_path = cfg.output.join(META_FILE);
    write_atomic(&meta_path, &meta)?;
    files.push(meta_path);
    if marker.exists() {
        fs::remove_file(&marker)?;
    }
    Ok(RunOutcome { output: cfg.output.clone(), files })
}

fn build_basis(cfg: &ExperimentConfig, quad: &Arc<Quadrature>) -> Result<Arc<OrthoPolyBasis>> {
    let b = match cfg.basis {
        BasisKind::TensorLegendre => tensor_legendre(cfg.dimension, cfg.degree, quad, cfg.p)?,
        BasisKind::GramSchmidt => {
            let rho = cfg.weight.sample(quad)?;
            gram_schmidt(cfg.dimension, cfg.degree, &WeightFunctional::new(rho, cfg.p)?)?
        }
    };
    Ok(Arc::new(b))
}

fn execute(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let quad = build_quadrature(cfg.dimension, cfg.quadrature_points)?;
    let basis = build_basis(cfg, &quad)?;
    let mut art = Artifacts::default();
    match cfg.kind {
        ProjectConverge => project_converge(cfg, &basis, &mut art)?,
        LsNet => ls_net(cfg, &basis, &mut art)?,
        TrainOperator => train(cfg, basis, &mut art)?,
        Solve => solve_once(cfg, basis, &mut art)?,
        ConvergeStudy => study(cfg, &basis, &mut art)?,
    }
    Ok(art)
}

fn project_converge(cfg: &ExperimentConfig, basis: &Arc<OrthoPolyBasis>, art: &mut Artifacts) -> Result<()> {
    let f = cfg.function.as_ref().expect("validated").sample(basis.quadrature())?;
    let mut csv = String::from("n,error,uniform_bound\n");
    for &n in &cfg.n_list {
        let (_, pf) = project(basis, n, &f)?;
        let err = distance(&f, &pf, cfg.p)?;
        let _ = writeln!(csv, "{n},{},{}", fmt_f64(err), fmt_f64(uniform_bound(basis, n)?));
    }
    art.file("projection.csv", csv);
    art.file("basis.txt", export_basis(basis));
    Ok(())
}

fn ls_net(cfg: &ExperimentConfig, basis: &Arc<OrthoPolyBasis>, art: &mut Artifacts) -> Result<()> {
    let eps = cfg.epsilon.expect("validated");
    let members = match cfg.members.as_ref().expect("validated") {
        MemberSource::Random(count) => {
            let mut rng = seeded_rng(cfg.seed);
            (0..*count).map(|_| random_band_limited(basis, &mut rng)).collect()
        }
        MemberSource::Fields(fields) => fields
            .iter()
            .map(|f| f.sample(basis.quadrature()))
            .collect::<Result<Vec<_>>>()?,
    };
    let set = CompactSampleSet::new(members, cfg.p)?;
    let proj = greedy_net(&set, eps)?;
    let mut csv = String::from("member,distance,within_epsilon\n");
    for (i, x) in set.members().iter().enumerate() {
        let d = distance(x, &ls_project(&proj, x)?, cfg.p)?;
        let _ = writeln!(csv, "{i},{},{}", fmt_f64(d), d < eps);
    }
    let check = check_net(&proj, eps)?;
    art.file("ls_net.csv", csv);
    art.file("centers.txt", write_projector(&proj));
    art.result("members", set.members().len());
    art.result("centers", check.centers);
    art.result("min_separation", fmt_f64(check.min_distance));
    art.result("separated", check.separated);
    Ok(())
}

fn train(cfg: &ExperimentConfig, basis: Arc<OrthoPolyBasis>, art: &mut Artifacts) -> Result<()> {
    let op = cfg.operator.as_ref().expect("validated").build();
    let mut basis = basis;
    let mut weight = None;
    if cfg.learned_weight {
        let target = cfg.weight.sample(basis.quadrature())?;
        let (w, report) = WeightNet::fit(&target, 16, &cfg.train)?;
        basis = Arc::new(learned_weight_basis(&w, cfg.dimension, cfg.degree, cfg.p)?);
        art.result("weight_fit_loss", fmt_f64(report.final_loss));
        weight = Some(w);
    }
    // Data draws use a stream distinct from the network initialization.
    let mut rng = seeded_rng(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut draw = |count: usize| -> Result<Vec<_>> {
        (0..count)
            .map(|_| {
                let f = random_band_limited(&basis, &mut rng);
                let g = op.apply(&f)?;
                Ok((f, g))
            })
            .collect()
    };
    let data = draw(cfg.samples)?;
    let held_out = draw(cfg.test_samples)?;
    let trained = train_operator(&data, basis.clone(), cfg.n, basis.clone(), cfg.m, &cfg.train)?;
    let mut operator = trained.operator;
    operator.input_weight = weight.clone();
    operator.output_weight = weight;

    let mut training = String::from("epoch,loss\n");
    let _ = writeln!(training, "0,{}", fmt_f64(trained.report.initial_loss));
    for (i, l) in trained.report.loss_history.iter().enumerate() {
        let _ = writeln!(training, "{},{}", i + 1, fmt_f64(*l));
    }
    let mut eval = String::from("sample,error,target_norm\n");
    let (mut num, mut den) = (0.0, 0.0);
    for (i, (f, g)) in held_out.iter().enumerate() {
        let e = lp_norm(&apply_operator(&operator, f)?.sub(g)?, PNorm::L2)?;
        let gn = lp_norm(g, PNorm::L2)?;
        num += e * e;
        den += gn * gn;
        let _ = writeln!(eval, "{i},{},{}", fmt_f64(e), fmt_f64(gn));
    }
    art.file("training.csv", training);
    art.file("evaluation.csv", eval);
    art.file("model.txt", write_model(&operator, "basis_in.txt", "basis_out.txt"));
    art.file("basis_in.txt", export_basis(&operator.input_basis));
    art.file("basis_out.txt", export_basis(&operator.output_basis));
    art.result("initial_loss", fmt_f64(trained.report.initial_loss));
    art.result("final_loss", fmt_f64(trained.report.final_loss));
    art.result("epochs_run", trained.report.epochs_run);
    if den > 0.0 {
        art.result("heldout_relative_l2_error", fmt_f64((num / den).sqrt()));
    } else {
        art.result("heldout_absolute_l2_error", fmt_f64(num.sqrt()));
    }
    Ok(())
}

fn row_csv(rows: Vec<StudyRow>, reference: Reference) -> String {
    StudyTable { reference, rows }.to_csv()
}

fn solve_once(cfg: &ExperimentConfig, basis: Arc<OrthoPolyBasis>, art: &mut Artifacts) -> Result<()> {
    let op = cfg.operator.as_ref().expect("validated").build();
    let f = cfg.forcing.as_ref().expect("validated").sample(basis.quadrature())?;
    let eq = ProjectedEquation::new(op.clone(), f.clone(), basis.clone(), cfg.n)?;
    let c0 = vec![0.0; cfg.n + 1];
    let rep = solve(&eq, cfg.method, &c0, cfg.tolerance, cfg.max_iterations)?;
    let error = match op.analytic_solution(&f) {
        Some(x) => Some(distance(&rep.solution, &x?, PNorm::L2)?),
        None => None,
    };
    let row = StudyRow {
        n: cfg.n,
        method: cfg.method,
        iterations: rep.iterations,
        residual: Some(rep.residual),
        error,
        converged: rep.converged,
        uniform_bound: uniform_bound(&basis, cfg.n).ok(),
        failure: None,
    };
    if let Some(b) = row.uniform_bound {
        art.result("uniform_bound", fmt_f64(b));
    }
    art.file("solve.csv", row_csv(vec![row], Reference::Analytic));
    let mut coeffs = String::from("k,coefficient\n");
    for (k, c) in rep.coefficients.iter().enumerate() {
        let _ = writeln!(coeffs, "{k},{}", fmt_f64(*c));
    }
    art.file("coefficients.csv", coeffs);
    if cfg.starts > 1 {
        let mut rng = seeded_rng(cfg.seed);
        let mut starts = vec![c0];
        for _ in 1..cfg.starts {
            starts.push((0..=cfg.n).map(|_| rng.random_range(-2.0..2.0)).collect());
        }
        let sep = 1e3 * cfg.tolerance.max(1e-9);
        let found = multistart(&eq, &starts, cfg.tolerance, cfg.max_iterations, sep);
        art.result("distinct_roots", found.roots.len());
        if !found.is_unique() {
            art.result("multiplicity_detected", true);
        }
    }
    Ok(())
}

fn study(cfg: &ExperimentConfig, basis: &Arc<OrthoPolyBasis>, art: &mut Artifacts) -> Result<()> {
    let op = cfg.operator.as_ref().expect("validated").build();
    let f = cfg.forcing.as_ref().expect("validated").sample(basis.quadrature())?;
    let settings = StudySettings { method: cfg.method, tol: cfg.tolerance, max_iter: cfg.max_iterations };
    let table = convergence_study(&op, &f, basis, &cfg.n_list, settings)?;
    art.result(
        "reference",
        match table.reference {
            Reference::Analytic => "analytic",
            Reference::LargestN => "largest-n",
        },
    );
    for r in &table.rows {
        if let Some(b) = r.uniform_bound {
            art.result(&format!("uniform_bound[{}]", r.n), fmt_f64(b));
        }
        if let Some(msg) = &r.failure {
            art.result(&format!("failure[{}]", r.n), msg);
        }
    }
    art.file("study.csv", table.to_csv());
    Ok(())
}

/// Report for `projop check-net`; the flag is true when the net is separated.
pub fn check_net_report(archive: &str, epsilon: f64) -> Result<(String, bool)> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Usage(format!("epsilon must be positive, got {epsilon}")));
    }
    let proj = read_projector(archive)?;
    let check = check_net(&proj, epsilon)?;
    let mut s = String::new();
    let _ = writeln!(s, "centers {}", check.centers);
    let _ = writeln!(s, "epsilon {}", fmt_f64(epsilon));
    let _ = writeln!(s, "min_distance {}", fmt_f64(check.min_distance));
    if let Some((i, j)) = check.closest_pair {
        let _ = writeln!(s, "closest_pair {i} {j}");
    }
    let _ = writeln!(s, "separated {}", check.separated);
    Ok((s, check.separated))
}

/// Human-readable summary of a basis export for `projop describe-basis`.
pub fn describe_basis(export: &str) -> Result<String> {
    let basis = import_basis(export)?;
    let q = basis.quadrature();
    let mut s = String::new();
    let _ = writeln!(s, "kind {}", basis.kind().tag());
    let _ = writeln!(s, "dimension {}", basis.dimension());
    let _ = writeln!(s, "max_degree {}", basis.max_degree());
    let _ = writeln!(s, "size {}", basis.len());
    let _ = writeln!(s, "quadrature {} x {} points", q.dimension(), q.points_per_axis());
    let _ = writeln!(s, "p {}", fmt_f64(basis.functional().p().value()));
    let _ = writeln!(s, "weight {}", if basis.functional().is_uniform() { "uniform" } else { "sampled" });
    let _ = writeln!(s, "orthogonality_defect {}", fmt_f64(basis.orthogonality_defect()));
    let _ = writeln!(s, "k,multi_index,degree,gram,sup_norm,uniform_bound");
    for k in 0..basis.len() {
        let mi: Vec<String> = basis.multi_index(k).iter().map(|e| e.to_string()).collect();
        let _ = writeln!(
            s,
            "{k},{},{},{},{},{}",
            mi.join(" "),
            basis.total_degree(k),
            fmt_f64(basis.gram(k)),
            fmt_f64(basis.sup_norm(k)),
            fmt_f64(uniform_bound(&basis, k)?)
        );
    }
    Ok(s)
}
