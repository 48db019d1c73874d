//! Next-subword distributions.
//!
//! Every distribution covers the vocabulary plus eos, with eos in the last
//! slot. [`TabularLM`] is the exact, file-backed model used for verification;
//! [`client::RemoteLM`] talks to an external scorer over newline-delimited JSON.

pub mod client;
pub mod random;
pub mod tabular;

use thiserror::Error;

use crate::logprob::LogProb;
use crate::vocab::Id;
pub use client::RemoteLM;
pub use random::{random_exact_lm, SupportMap};
pub use tabular::{verify_exactness, TabularLM};

/// Linear-space tolerance for tabular files.
pub const TABULAR_TOLERANCE: f64 = 1e-8;
/// Linear-space tolerance for external backends.
pub const REMOTE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Error, PartialEq)]
pub enum LmError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("{path}:{line}: {msg}")]
    ParseError { path: String, line: usize, msg: String },
    #[error("distribution at context {context:?} sums to 1 {deviation:+e}")]
    NotNormalised { context: Vec<Id>, deviation: f64 },
    #[error("context {context:?} gives subword {subword} positive mass, but no word sequence starts that way")]
    SupportViolation { context: Vec<Id>, subword: Id },
    #[error("context id {0} is outside the vocabulary")]
    InvalidContext(Id),
    #[error("no consistent order-{order} model exists for this lexicon: context {context:?} needs different supports")]
    OrderTooSmall { order: usize, context: Vec<Id> },
}

/// A source of next-subword distributions over the vocabulary plus eos.
pub trait ConditionalLM {
    /// Vocabulary size plus one.
    fn support_len(&self) -> usize;

    fn next_distribution(&self, context: &[Id]) -> Result<Vec<LogProb>, LmError>;

    /// Number of trailing context ids the distribution depends on, if bounded.
    fn markov_order(&self) -> Option<usize> {
        None
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn eos(&self) -> Id {
        (self.support_len() - 1) as Id
    }
}

impl<T: ConditionalLM + ?Sized> ConditionalLM for &T {
    fn support_len(&self) -> usize {
        (**self).support_len()
    }
    fn next_distribution(&self, context: &[Id]) -> Result<Vec<LogProb>, LmError> {
        (**self).next_distribution(context)
    }
    fn markov_order(&self) -> Option<usize> {
        (**self).markov_order()
    }
    fn is_exact(&self) -> bool {
        (**self).is_exact()
    }
}

/// Signed deviation of a distribution's linear-space sum from one.
pub fn normalisation_error(dist: &[LogProb]) -> f64 {
    crate::logprob::logsumexp(dist.iter().copied()).prob() - 1.0
}
