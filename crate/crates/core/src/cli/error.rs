use std::fmt;
use std::path::Path;

use dfl_core::analysis::AnalysisError;
use dfl_core::logic::LogicError;
use dfl_core::operators::OperatorError;
use dfl_core::oracle::OracleError;
use dfl_core::trainer::TrainError;
use dfl_core::valuation::ValuationError;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SEMANTIC: i32 = 3;
pub const EXIT_CAP: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError { code: EXIT_INPUT, message: message.into() }
    }

    pub fn semantic(message: impl Into<String>) -> Self {
        CliError { code: EXIT_SEMANTIC, message: message.into() }
    }

    pub fn in_file(self, path: &Path) -> Self {
        CliError { message: format!("{}: {}", path.display(), self.message), ..self }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = Result<T, CliError>;

impl From<LogicError> for CliError {
    fn from(e: LogicError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<OperatorError> for CliError {
    fn from(e: OperatorError) -> Self {
        CliError::semantic(e.to_string())
    }
}

impl From<ValuationError> for CliError {
    fn from(e: ValuationError) -> Self {
        match e {
            ValuationError::GroundingSyntax { .. } | ValuationError::DuplicateAtom(_) | ValuationError::OutOfRange { .. } => {
                CliError::input(e.to_string())
            }
            _ => CliError::semantic(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Valuation(v) => v.into(),
            AnalysisError::Operator(o) => o.into(),
            other => CliError::input(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Valuation(v) => v.into(),
            cap @ OracleError::WorldCap { .. } => CliError { code: EXIT_CAP, message: cap.to_string() },
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Valuation(v) => v.into(),
            TrainError::Logic(l) => l.into(),
            TrainError::MissingSeed => CliError::input(e.to_string()),
            other => CliError::semantic(other.to_string()),
        }
    }
}
