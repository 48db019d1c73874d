//! Surprisal-based analyses: reading-time regressions and word-length correlations.

use thiserror::Error;

use crate::logprob::LogProb;

pub mod compare;
pub mod io;
pub mod lexicon;
pub mod permutation;
pub mod regression;
pub mod synthetic;

pub use compare::{compare_buggy_vs_fixed, CompareSettings, ComparisonRow};
pub use lexicon::{length_correlations, lexicon_stats, spearman, CorrelationRow, LexiconStats, SurprisalVariant};
pub use permutation::{ks_uniform, paired_permutation_test, KsResult};
pub use regression::{delta_llh, fit_linear, fold_assignment, null_band, DeltaLlh, LinearFit, Predictor, RTObservation};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnalysisError {
    #[error("no scored words to analyse")]
    EmptyCorpus,
    #[error("inputs have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("{0} is constant or too short")]
    DegenerateInput(String),
    #[error("design matrix is rank deficient")]
    SingularDesign,
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("frames differ at row {0}")]
    MisalignedFrames(usize),
    #[error("{0}")]
    Input(String),
}

/// `-log p` in nats; probability zero gives `+inf`.
pub fn surprisal(p: LogProb) -> f64 {
    p.surprisal()
}

/// Nats to bits.
pub fn to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
