use thiserror::Error;

/// Every failure the library can report.
///
/// Variants map onto three coarse categories (see [`Error::category`]) which
/// the CLI turns into exit codes and the FFI layer into status codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole: {0} is a nonpositive integer")]
    Pole(String),
    #[error("gamma pole at index {index:?}: argument {arg}")]
    GammaPole { index: Vec<usize>, arg: String },
    #[error("series did not converge after {terms} terms")]
    NoConvergence { terms: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("argument {theta} lies outside the {sector} sector")]
    Sector { theta: f64, sector: &'static str },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("degenerate pattern: {0}")]
    DegeneratePattern(String),
    #[error("resonant system: {0}")]
    Resonant(String),
    #[error("singular matrix (pivot {pivot:e})")]
    Singular { pivot: f64 },
    #[error("eigenvalue iteration failed to converge")]
    Convergence,
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("cancellation: max term / |sum| = {ratio:e} exceeds budget")]
    Cancellation { ratio: f64 },
    #[error("representation too large: {0}")]
    TooLarge(String),
    #[error("h must be nonzero")]
    ZeroH,
    #[error("irregular coefficient has a single eigenvalue")]
    NoGap,
    #[error("ODE step size underflow at s = {s}")]
    StepUnderflow { s: f64 },
    #[error("numeric consistency check failed: {0}")]
    Consistency(String),
    #[error("config error: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    MathDomain,
    Verification,
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Error::Config(_) | Error::Dimension(_) | Error::InvalidParams(_) | Error::TooLarge(_) | Error::ZeroH => {
                Category::Config
            }
            Error::Consistency(_) | Error::StepUnderflow { .. } | Error::Convergence | Error::NoConvergence { .. } => {
                Category::Verification
            }
            _ => Category::MathDomain,
        }
    }

    /// Stable machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Pole(_) => "pole",
            Error::GammaPole { .. } => "gamma_pole",
            Error::NoConvergence { .. } => "no_convergence",
            Error::InvalidParams(_) => "invalid_params",
            Error::Sector { .. } => "sector",
            Error::Degenerate(_) => "degenerate",
            Error::DegeneratePattern(_) => "degenerate_pattern",
            Error::Resonant(_) => "resonant",
            Error::Singular { .. } => "singular",
            Error::Convergence => "convergence",
            Error::Dimension(_) => "dimension",
            Error::Cancellation { .. } => "cancellation",
            Error::TooLarge(_) => "too_large",
            Error::ZeroH => "zero_h",
            Error::NoGap => "no_gap",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::Consistency(_) => "consistency",
            Error::Config(_) => "config",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
