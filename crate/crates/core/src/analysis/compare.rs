//! Predictive power of corrected versus uncorrected surprisal.

use super::permutation::paired_permutation_test;
use super::regression::{delta_llh, DeltaLlh, Predictor, RTObservation};
use super::AnalysisError;

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub model: String,
    pub dataset: String,
    /// `fixed.mean - buggy.mean`.
    pub improvement: f64,
    pub fixed: DeltaLlh,
    pub buggy: DeltaLlh,
    /// Paired test of the per-word gains, fixed against buggy.
    pub p_value: f64,
    /// Per-word gains of each variant against zero.
    pub p_fixed: f64,
    pub p_buggy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareSettings {
    pub folds: usize,
    pub seed: u64,
    pub permutations: usize,
}

impl Default for CompareSettings {
    fn default() -> Self {
        CompareSettings { folds: 10, seed: 0, permutations: super::permutation::DEFAULT_PERMUTATIONS }
    }
}

/// Frames must list the same words with the same reading times in the same order.
pub fn compare_buggy_vs_fixed(
    model: &str,
    dataset: &str,
    frame_buggy: &[RTObservation],
    frame_fixed: &[RTObservation],
    settings: CompareSettings,
) -> Result<ComparisonRow, AnalysisError> {
    if frame_buggy.len() != frame_fixed.len() {
        return Err(AnalysisError::MisalignedFrames(frame_buggy.len().min(frame_fixed.len())));
    }
    if let Some(i) = frame_buggy.iter().zip(frame_fixed).position(|(a, b)| {
        (a.sentence_idx, a.word_idx, &a.word, a.avg_rt) != (b.sentence_idx, b.word_idx, &b.word, b.avg_rt)
    }) {
        return Err(AnalysisError::MisalignedFrames(i));
    }
    let CompareSettings { folds, seed, permutations } = settings;
    let fixed = delta_llh(frame_fixed, &Predictor::BASELINE, Predictor::Surprisal, folds, seed)?;
    let buggy = delta_llh(frame_buggy, &Predictor::BASELINE, Predictor::Surprisal, folds, seed)?;
    let zeros = vec![0.0; fixed.pointwise.len()];
    Ok(ComparisonRow {
        model: model.to_string(),
        dataset: dataset.to_string(),
        improvement: fixed.mean - buggy.mean,
        p_value: paired_permutation_test(&fixed.pointwise, &buggy.pointwise, permutations, seed)?,
        p_fixed: paired_permutation_test(&fixed.pointwise, &zeros, permutations, seed)?,
        p_buggy: paired_permutation_test(&buggy.pointwise, &zeros, permutations, seed)?,
        fixed,
        buggy,
    })
}
