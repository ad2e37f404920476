//! Grounding of knowledge bases over a batch of domain objects and their
//! differentiable valuation.
//!
//! A [`GroundingTable`] places one tape leaf per ground atom. [`valuate`]
//! then walks a formula for every assignment of its quantified variables to
//! batch objects, recording each connective on the tape, and aggregates the
//! instances block by block from the innermost quantifier outwards.

mod engine;
mod grounding;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::operators::OperatorError;

pub use engine::{
    atom_gradients, dfl_loss, evaluate_kb, valuate, AtomGradient, CompiledFormula, ImplicationTrace, KbEvaluation,
    LossNodes,
};
pub use grounding::{parse_grounding, GroundingTable, Interpretation, LookupTable};

/// Default clamp applied to model outputs before they reach the kernels.
pub const MODEL_EPSILON: f64 = 1e-7;

/// How far outside `[0, 1]` an interpretation may stray before it is
/// rejected instead of clipped.
pub const RANGE_SLACK: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValuationError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("no truth value for ground atom {0}")]
    MissingAtom(String),
    #[error("predicate `{0}` is not in the grounding signature")]
    UnknownPredicate(String),
    #[error("predicate `{predicate}` has arity {expected} in the grounding but {found} in the formula")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("truth value {value} for {atom} is outside [0, 1]")]
    OutOfRange { atom: String, value: f64 },
    #[error(
        "log_product output is consumed by an enclosing quantifier in `{0}`; \
         it is only defined for the outermost quantifier block"
    )]
    LogProductNested(String),
    #[error("grounding line {line}: {message}")]
    GroundingSyntax { line: usize, message: String },
    #[error("batch size {b} is out of range for a domain of {n} objects")]
    BatchSize { b: usize, n: usize },
    #[error("duplicate ground atom {0}")]
    DuplicateAtom(String),
}

/// The objects formulas are grounded over. Embeddings may be empty for
/// symbolic domains read from grounding files.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Domain {
    pub names: Vec<String>,
    pub embeddings: Vec<Vec<f64>>,
}

impl Domain {
    pub fn from_names<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let embeddings = vec![Vec::new(); names.len()];
        Domain { names, embeddings }
    }

    /// Objects named `o1`, `o2`, ... carrying the given embeddings.
    pub fn from_embeddings(embeddings: Vec<Vec<f64>>) -> Self {
        let names = (1..=embeddings.len()).map(|i| format!("o{}", i)).collect();
        Domain { names, embeddings }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn all(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }
}

/// `b` distinct object indices drawn uniformly without replacement,
/// returned in ascending order.
pub fn sample_batch(domain: &Domain, b: usize, seed: u64) -> Result<Vec<usize>, ValuationError> {
    let n = domain.len();
    if b == 0 || b > n {
        return Err(ValuationError::BatchSize { b, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, b).into_vec();
    idx.sort_unstable();
    Ok(idx)
}
