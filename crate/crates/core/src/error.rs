use thiserror::Error;

/// Errors raised anywhere in the model, solver, or analysis code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("malformed bounds for `{name}`: lower {lower} > upper {upper}")]
    MalformedBounds { name: String, lower: f64, upper: f64 },

    #[error("parameter `{name}` = {value} outside [{lower}, {upper}]")]
    OutOfBounds {
        name: String,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("unknown channel kind `{0}`")]
    UnknownChannel(String),

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("parameter restrictions violated: {}", .0.join("; "))]
    Restrictions(Vec<String>),

    #[error("equilibrium solver did not converge (residual {residual:.3e})")]
    NonConvergence { residual: f64 },

    #[error("simulation diverged at t = {t} s (last valid t = {last_valid} s)")]
    Divergence { t: f64, last_valid: f64 },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("window too short: {0}")]
    WindowTooShort(String),

    #[error("empty window: {0}")]
    EmptyWindow(String),

    #[error("extrapolation requested: {0}")]
    Extrapolation(String),

    #[error("singular fit: {0}")]
    SingularFit(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("PLL lost lock at t = {0} s")]
    LossOfLock(f64),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::Divergence { .. }
                | Error::SingularFit(_)
                | Error::DegenerateSample(_)
                | Error::LossOfLock(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
