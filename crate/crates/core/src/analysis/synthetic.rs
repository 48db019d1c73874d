//! Seeded synthetic data with known generating structure.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, WeightedIndex};

use super::io::{fill_spillover, RtRow};
use super::regression::RTObservation;
use crate::wordprob::ScoredRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticRt {
    pub n: usize,
    pub seed: u64,
    pub words_per_sentence: usize,
    pub surprisal_coef: f64,
    pub spillover_coefs: [f64; 3],
    pub noise_sd: f64,
}

impl Default for SyntheticRt {
    fn default() -> Self {
        SyntheticRt {
            n: 2000,
            seed: 0,
            words_per_sentence: 12,
            surprisal_coef: 2.0,
            spillover_coefs: [1.0, 0.5, 0.25],
            noise_sd: 5.0,
        }
    }
}

/// Number of word types drawn from in [`reading_times`].
const RT_TYPES: usize = 400;

struct WordType {
    word: String,
    length: f64,
    prob: f64,
}

/// Zipfian types whose lengths grow with rank.
fn rt_types(rng: &mut ChaCha8Rng) -> Vec<WordType> {
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let weights: Vec<f64> = (1..=RT_TYPES).map(|r| 1.0 / r as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut used: BTreeMap<usize, usize> = BTreeMap::new();
    weights
        .iter()
        .enumerate()
        .map(|(r, w)| {
            let mut length = ((1.0 + 1.2 * ((r + 1) as f64).ln() + unit.sample(rng)).round().clamp(1.0, 12.0)) as usize;
            while used.get(&length).copied().unwrap_or(0) >= 26usize.saturating_pow(length as u32) {
                length += 1;
            }
            let slot = used.entry(length).or_insert(0);
            let word = spell(*slot, length);
            *slot += 1;
            WordType { word, length: length as f64, prob: w / total }
        })
        .collect()
}

/// `rt = 200 + 3·length - 2·log_freq + c·surprisal + Σ spillover + noise`
/// over words drawn from a Zipfian inventory, with surprisal loosely tied to
/// length.
pub fn reading_times(cfg: &SyntheticRt) -> Vec<RTObservation> {
    reading_times_with_types(cfg).0
}

fn reading_times_with_types(cfg: &SyntheticRt) -> (Vec<RTObservation>, Vec<WordType>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let types = rt_types(&mut rng);
    let pick = WeightedIndex::new(types.iter().map(|t| t.prob)).expect("positive weights");
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let noise = Normal::new(0.0, cfg.noise_sd).expect("valid normal");
    let mut frame: Vec<RTObservation> = (0..cfg.n)
        .map(|i| {
            let t = &types[pick.sample(&mut rng)];
            let surprisal = (0.3 * t.length + 2.0 + 1.5 * unit.sample(&mut rng)).abs();
            RTObservation {
                word: t.word.clone(),
                sentence_idx: i / cfg.words_per_sentence,
                word_idx: i % cfg.words_per_sentence,
                avg_rt: 0.0,
                length: t.length,
                log_frequency: t.prob.ln(),
                surprisal,
                spillover: [0.0; 3],
            }
        })
        .collect();
    fill_spillover(&mut frame);
    for o in &mut frame {
        let spill: f64 = o.spillover.iter().zip(&cfg.spillover_coefs).map(|(s, c)| s * c).sum();
        o.avg_rt = 200.0 + 3.0 * o.length - 2.0 * o.log_frequency + cfg.surprisal_coef * o.surprisal + spill
            + noise.sample(&mut rng);
    }
    (frame, types)
}

/// Files for [`reading_times`]: reading-time rows, score records and unigram
/// counts. The fixed surprisal generates the times; the buggy one adds noise.
pub fn reading_time_files(cfg: &SyntheticRt) -> (Vec<RtRow>, Vec<ScoredRecord>, BTreeMap<String, u64>) {
    let (frame, types) = reading_times_with_types(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xb0b);
    let jitter = Normal::new(0.0, 1.0).expect("valid normal");
    let rt = frame
        .iter()
        .map(|o| RtRow { word: o.word.clone(), avg_rt: o.avg_rt, sentence_idx: o.sentence_idx, word_idx: o.word_idx })
        .collect();
    let scored = frame
        .iter()
        .map(|o| {
            let buggy = (o.surprisal + jitter.sample(&mut rng)).abs();
            ScoredRecord {
                sentence_idx: o.sentence_idx,
                word_idx: o.word_idx,
                word: o.word.clone(),
                logp_buggy: -buggy,
                log_correction: buggy - o.surprisal,
                logp_fixed: -o.surprisal,
                surprisal_buggy: buggy,
                surprisal_fixed: o.surprisal,
                applied_fix: "fix1".into(),
            }
        })
        .collect();
    let counts = types.iter().map(|t| (t.word.clone(), (t.prob * 1e6).round() as u64)).collect();
    (rt, scored, counts)
}

/// A Zipfian lexicon whose word lengths follow unigram surprisal, with
/// contextual surprisals only loosely related to it.
pub fn length_lexicon(n_types: usize, seed: u64) -> (Vec<ScoredRecord>, BTreeMap<String, u64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let raw: Vec<u64> = (1..=n_types).map(|r| (1e6 / (r as f64).powf(1.1)) as u64 + 1).collect();
    let total: u64 = raw.iter().sum();
    let mut used: BTreeMap<usize, usize> = BTreeMap::new();
    let mut counts = BTreeMap::new();
    let mut scored = Vec::new();
    for (r, &c) in raw.iter().enumerate() {
        let unigram = -(c as f64 / total as f64).ln();
        let mut length = ((3.0 * unigram + 0.3 * unit.sample(&mut rng)).round() as usize).max(1);
        while used.get(&length).copied().unwrap_or(0) >= 26usize.saturating_pow(length as u32) {
            length += 1;
        }
        let slot = used.entry(length).or_insert(0);
        let word = spell(*slot, length);
        *slot += 1;
        counts.insert(word.clone(), c);
        let offset = 4.0 * unit.sample(&mut rng);
        for t in 0..c.min(12) as usize {
            let fixed = (unigram + offset + 1.5 * unit.sample(&mut rng)).abs();
            let buggy = fixed + 0.3 * unit.sample(&mut rng).abs();
            scored.push(ScoredRecord {
                sentence_idx: r,
                word_idx: t,
                word: word.clone(),
                logp_buggy: -buggy,
                log_correction: buggy - fixed,
                logp_fixed: -fixed,
                surprisal_buggy: buggy,
                surprisal_fixed: fixed,
                applied_fix: "fix1".into(),
            });
        }
    }
    (scored, counts)
}

/// The `index`-th string of `len` lowercase letters.
fn spell(mut index: usize, len: usize) -> String {
    let mut chars = vec!['a'; len];
    for c in chars.iter_mut().rev() {
        *c = (b'a' + (index % 26) as u8) as char;
        index /= 26;
    }
    chars.into_iter().collect()
}
