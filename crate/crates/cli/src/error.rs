use std::path::Path;

use thiserror::Error;
use wassfs::data::DataError;
use wassfs::eval::EvalError;
use wassfs::metric::MetricError;
use wassfs::noise::NoiseError;
use wassfs::ot::OtError;
use wassfs::selector::SelectError;

/// Failure of a subcommand. Every variant maps onto the exit-code
/// contract: 1 for a detected property violation, 2 for anything the
/// caller has to fix.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("--{field}: {message}")]
    Input { field: String, message: String },
    #[error("property violation: {0}")]
    Violation(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn input(field: impl Into<String>, message: impl ToString) -> Self {
        CliError::Input {
            field: field.into(),
            message: message.to_string(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Violation(_) => 1,
            _ => 2,
        }
    }

    pub fn from_ot(e: OtError) -> Self {
        let field = match &e {
            OtError::InvalidConfig(_) | OtError::NotConverged { .. } | OtError::Underflow { .. } => "lambda",
            OtError::DimensionMismatch { .. } => "q",
            _ => "p",
        };
        CliError::input(field, e)
    }

    pub fn from_select(e: SelectError) -> Self {
        match e {
            SelectError::InvalidK { .. } => CliError::input("k", e),
            SelectError::InvalidL => CliError::input("l", e),
            SelectError::InvalidSmoothing(_) => CliError::input("smoothing", e),
            SelectError::MetricMismatch { .. } => CliError::input("metric", e),
            SelectError::Ot(o) => CliError::from_ot(o),
            other => CliError::input("data", other),
        }
    }

    pub fn from_noise(e: NoiseError) -> Self {
        match e {
            NoiseError::InvalidSpec { field, .. } => CliError::input(field.replace('_', "-"), e),
            NoiseError::InvalidProbability(_) => CliError::input("p-list", e),
            NoiseError::InvalidThreshold(_) => CliError::input("threshold", e),
            NoiseError::Select(s) => CliError::from_select(s),
            NoiseError::Ot(o) => CliError::from_ot(o),
            other => CliError::input("data", other),
        }
    }

    pub fn from_eval(e: EvalError) -> Self {
        let field = match &e {
            EvalError::EmptyTheta | EvalError::FeatureOutOfRange { .. } => "features",
            EvalError::InvalidKnn => "knn",
            EvalError::InvalidTopK { .. } => "top-k",
            EvalError::FeatureCountMismatch { .. } => "test",
            _ => "data",
        };
        CliError::input(field, e)
    }

    pub fn from_data(field: &str, e: DataError) -> Self {
        CliError::input(field, e)
    }

    pub fn from_metric(e: MetricError) -> Self {
        CliError::input("metric", e)
    }
}
