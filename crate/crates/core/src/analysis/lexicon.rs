//! Per-type surprisal statistics and rank correlations with word length.

use std::collections::BTreeMap;

use super::AnalysisError;
use crate::wordprob::ScoredRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurprisalVariant {
    Buggy,
    Fixed,
}

impl SurprisalVariant {
    pub fn name(self) -> &'static str {
        match self {
            SurprisalVariant::Buggy => "buggy",
            SurprisalVariant::Fixed => "fixed",
        }
    }

    pub fn of(self, r: &ScoredRecord) -> f64 {
        match self {
            SurprisalVariant::Buggy => r.surprisal_buggy,
            SurprisalVariant::Fixed => r.surprisal_fixed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexiconStats {
    pub word: String,
    /// Characters.
    pub length: usize,
    pub unigram_surprisal: f64,
    /// `E[h]` over the type's tokens.
    pub mean_surprisal: f64,
    /// `E[h²] / E[h]`.
    pub surprisal_ratio: f64,
    pub token_count: usize,
}

/// One entry per word type that has both scored tokens with finite
/// surprisal and a positive unigram count, sorted by word.
pub fn lexicon_stats(
    scored: &[ScoredRecord],
    counts: &BTreeMap<String, u64>,
    variant: SurprisalVariant,
) -> Result<Vec<LexiconStats>, AnalysisError> {
    if scored.is_empty() {
        return Err(AnalysisError::EmptyCorpus);
    }
    let total: u64 = counts.values().sum();
    // Running mean and squared deviations; a constant stream keeps its mean exact.
    let mut sums: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    for r in scored {
        let h = variant.of(r);
        if !h.is_finite() {
            continue;
        }
        let e = sums.entry(&r.word).or_insert((0.0, 0.0, 0));
        e.2 += 1;
        let delta = h - e.0;
        e.0 += delta / e.2 as f64;
        e.1 += delta * (h - e.0);
    }
    let out = sums
        .into_iter()
        .filter_map(|(word, (mean, m2, n))| {
            let count = *counts.get(word)?;
            if count == 0 {
                return None;
            }
            let ratio = if mean == 0.0 { 0.0 } else { mean + (m2 / n as f64) / mean };
            Some(LexiconStats {
                word: word.to_string(),
                length: word.chars().count(),
                unigram_surprisal: -(count as f64 / total as f64).ln(),
                mean_surprisal: mean,
                surprisal_ratio: ratio,
                token_count: n,
            })
        })
        .collect();
    Ok(out)
}

/// Ranks starting at 1; tied values share their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (mx, my) = (super::mean(xs), super::mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(AnalysisError::DegenerateInput(format!("{} points", xs.len())));
    }
    pearson(&ranks(xs), &ranks(ys)).ok_or_else(|| AnalysisError::DegenerateInput("a constant input".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    /// `zipf`, `cch_mean` or `cch_ratio`.
    pub hypothesis: &'static str,
    /// `unigram`, `buggy` or `fixed`.
    pub surprisal: &'static str,
    pub n_types: usize,
    pub spearman: Result<f64, AnalysisError>,
}

/// Word length against unigram surprisal, then against mean surprisal and
/// the second-moment ratio under each surprisal variant.
pub fn length_correlations(
    scored: &[ScoredRecord],
    counts: &BTreeMap<String, u64>,
) -> Result<Vec<CorrelationRow>, AnalysisError> {
    let buggy = lexicon_stats(scored, counts, SurprisalVariant::Buggy)?;
    let fixed = lexicon_stats(scored, counts, SurprisalVariant::Fixed)?;
    let lengths = |s: &[LexiconStats]| s.iter().map(|x| x.length as f64).collect::<Vec<_>>();
    let row = |hypothesis, surprisal, stats: &[LexiconStats], f: fn(&LexiconStats) -> f64| CorrelationRow {
        hypothesis,
        surprisal,
        n_types: stats.len(),
        spearman: spearman(&lengths(stats), &stats.iter().map(f).collect::<Vec<_>>()),
    };
    Ok(vec![
        row("zipf", "unigram", &fixed, |s| s.unigram_surprisal),
        row("cch_mean", "buggy", &buggy, |s| s.mean_surprisal),
        row("cch_mean", "fixed", &fixed, |s| s.mean_surprisal),
        row("cch_ratio", "buggy", &buggy, |s| s.surprisal_ratio),
        row("cch_ratio", "fixed", &fixed, |s| s.surprisal_ratio),
    ])
}
