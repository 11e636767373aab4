use thiserror::Error;

/// Errors raised by the geometry kernel, the curve models and the experiments.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("value {value} outside the admissible range [{min}, {max}]")]
    Range { value: f64, min: f64, max: f64 },

    #[error("inscription error: {0}")]
    Inscription(String),

    #[error("equilateral marching failed: {0}")]
    Marching(String),

    #[error("degenerate parametrization: {0}")]
    DegenerateParametrization(String),

    #[error("curve is not smooth at parameter {0}")]
    NonSmooth(f64),

    #[error("singular turning angle {0} (bend diverges as the angle approaches pi)")]
    SingularAngle(f64),

    #[error("point {0:?} lies outside the chart domain (south pole excluded)")]
    ChartDomain([f64; 3]),

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad input) during an experiment.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Marching(_)
                | Error::SingularAngle(_)
                | Error::DegenerateParametrization(_)
                | Error::NonSmooth(_)
                | Error::Inscription(_)
                | Error::Internal(_)
        )
    }

    /// Short machine-readable tag, used in the CLI error record.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::Range { .. } => "range",
            Error::Inscription(_) => "inscription",
            Error::Marching(_) => "marching",
            Error::DegenerateParametrization(_) => "degenerate_parametrization",
            Error::NonSmooth(_) => "non_smooth",
            Error::SingularAngle(_) => "singular_angle",
            Error::ChartDomain(_) => "chart_domain",
            Error::Schedule(_) => "schedule",
            Error::Internal(_) => "internal",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
