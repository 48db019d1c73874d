//! Word-level contextual probabilities from subword language models.
//!
//! A subword model gives `p(next subword | previous subwords)`. Turning that
//! into `p(word | previous words)` needs care at word boundaries: under
//! beginning-of-word marking a word is only known to be finished once the
//! next subword starts a new word, and tokenisers that leave the first or
//! last word of a sentence unmarked need their own terms. [`wordprob`]
//! implements those conditionals, [`oracle`] checks them by exhaustive
//! enumeration over small exact models, and [`analysis`] runs the
//! reading-time and word-length studies that consume the resulting
//! surprisals.

pub mod analysis;
pub mod cli;
pub mod fixtures;
pub mod lm;
pub mod logprob;
pub mod oracle;
pub mod tokeniser;
pub mod vocab;
pub mod wordprob;

pub use logprob::{logsumexp, LogProb};
pub use vocab::{Id, MarkedVocabulary, Role, Scheme, Subword};
