use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure surfaced by the library.
///
/// Variants are grouped by how a caller is expected to react; see
/// [`Error::exit_code`] for the mapping used by the `projop` binary.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Caller passed arguments that violate a documented precondition.
    #[error("usage error: {0}")]
    Usage(String),

    /// Non-finite input or output values.
    #[error("domain error: {0}")]
    Domain(String),

    /// A hard size cap was exceeded.
    #[error("resource cap exceeded: {what} requires {requested}, cap is {cap}")]
    Resource {
        what: String,
        requested: usize,
        cap: usize,
    },

    /// Two sampled functions live on different quadratures.
    #[error("quadrature mismatch: {0}")]
    QuadratureMismatch(String),

    /// The input is not within epsilon of any center of the net.
    #[error("coverage error: x not within epsilon = {epsilon} of the net (nearest center at {nearest})")]
    Coverage { epsilon: f64, nearest: f64 },

    /// Gram-Schmidt hit a direction on which the quasi-inner product is (numerically) zero.
    #[error("degeneracy error: basis element {index} (multi-index {multi_index:?}) has |L(r^2)| = {norm:e} below {threshold:e} relative to L(m^2) = {reference:e}")]
    Degenerate {
        index: usize,
        multi_index: Vec<u32>,
        norm: f64,
        reference: f64,
        threshold: f64,
    },

    #[error("training diverged at epoch {epoch}: loss {loss:e} exceeds {limit:e}")]
    TrainingDiverged { epoch: usize, loss: f64, limit: f64 },

    #[error("singular equation: {0}")]
    Singular(String),

    #[error("iteration diverged at step {iteration}: {reason}")]
    Diverged { iteration: usize, reason: String },

    /// One or more configuration problems, each tagged with its line number.
    #[error("config error:\n{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n"))]
    Config(Vec<ConfigIssue>),

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit status: 2 config, 3 numerical failure, 4 resource cap.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Usage(_)
            | Error::QuadratureMismatch(_)
            | Error::Format(_)
            | Error::Io(_) => 2,
            Error::Resource { .. } => 4,
            _ => 3,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Usage(_) => "usage",
            Error::Domain(_) => "domain",
            Error::Resource { .. } => "resource",
            Error::QuadratureMismatch(_) => "quadrature-mismatch",
            Error::Coverage { .. } => "coverage",
            Error::Degenerate { .. } => "degeneracy",
            Error::TrainingDiverged { .. } => "training-diverged",
            Error::Singular(_) => "singular",
            Error::Diverged { .. } => "diverged",
            Error::Config(_) => "config",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// A single problem found while parsing or validating a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    /// 1-based line numbers involved (empty for whole-file problems such as a missing key).
    pub lines: Vec<usize>,
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.lines.as_slice() {
            [] => write!(f, "key `{}`: {}", self.key, self.message),
            [l] => write!(f, "line {}: key `{}`: {}", l, self.key, self.message),
            ls => {
                let ls: Vec<String> = ls.iter().map(|l| l.to_string()).collect();
                write!(f, "lines {}: key `{}`: {}", ls.join(", "), self.key, self.message)
            }
        }
    }
}
