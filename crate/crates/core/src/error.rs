use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("measure transform rejected: {bound}")]
    MeasureTransform { bound: String },
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("interpolation error: {0}")]
    Interpolation(String),
    #[error("degenerate volatility at t={t}")]
    DegenerateVolatility { t: f64 },
    #[error("input error: {0}")]
    Input(String),
    #[error("conditioning error: {0}")]
    Conditioning(String),
    #[error("admissibility error: {0}")]
    Admissibility(String),
    #[error("regime error: {0}")]
    Regime(String),
    #[error("problem data error: {0}")]
    ProblemData(String),
    #[error("need at least 2 samples for a standard error, got {0}")]
    InsufficientSamples(usize),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter { name, reason: reason.into() }
    }

    /// True for failures of the numerics (as opposed to bad inputs).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Conditioning(_)
                | Error::Admissibility(_)
                | Error::Regime(_)
                | Error::DegenerateVolatility { .. }
                | Error::ProblemData(_)
        )
    }
}

pub(crate) fn finite(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::param(name, format!("must be finite, got {v}")))
    }
}

pub(crate) fn positive(name: &'static str, v: f64) -> Result<f64> {
    finite(name, v)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::param(name, format!("must be > 0, got {v}")))
    }
}
