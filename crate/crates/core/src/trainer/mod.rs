//! Gradient-based optimisation of fuzzy valuations: fuzzy maximum
//! satisfiability over free truth values, and a small semi-supervised
//! harness where a knowledge base regularises a neural classifier.

mod config;
mod maxsat;
mod model;
mod semi;
mod task;

use thiserror::Error;

use crate::logic::LogicError;
use crate::operators::OperatorError;
use crate::valuation::ValuationError;

pub use config::{parse_formula_subset, parse_seeds, split_values, FormulaId, SweepAxis, SweepSpec, TrainConfig};
pub use maxsat::{fuzzy_max_sat, random_restarts, MaxSatOptions, MaxSatRun, Reparam, RestartSummary};
pub use model::{Params, TinyModel};
pub use semi::{
    config_sweep, evaluate, initial_model, schema_kb, semi_supervised_train, semi_supervised_train_with,
    step_gradients, train_seed, MetricsRecord, StepBatch, SweepRow, TermGradients, TrainRun, METRICS_HEADER,
    SWEEP_HEADER,
};
pub use task::SyntheticTask;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("{}", match .line { Some(l) => format!("config line {}: {}", l, .message), None => .message.clone() })]
    Config { line: Option<usize>, message: String },
    #[error("unknown formula selection `{0}`; formulas are numbered 1 to 3")]
    UnknownFormula(String),
    #[error("no seed given; pass --seed or set `seed` in the config")]
    MissingSeed,
}

impl TrainError {
    pub(crate) fn config(line: usize, message: impl Into<String>) -> Self {
        TrainError::Config {
            line: (line > 0).then_some(line),
            message: message.into(),
        }
    }

    pub(crate) fn at_line(self, line: usize) -> Self {
        match self {
            TrainError::Config { line: None, message } => TrainError::Config { line: Some(line), message },
            TrainError::Operator(e) => TrainError::Config { line: Some(line), message: e.to_string() },
            TrainError::UnknownFormula(f) => TrainError::Config {
                line: Some(line),
                message: TrainError::UnknownFormula(f).to_string(),
            },
            other => other,
        }
    }
}
