//! Tab-separated per-word score records.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{AppliedFix, ScoredRow};

pub const SCORED_HEADER: [&str; 9] = [
    "sentence_idx",
    "word_idx",
    "word",
    "logp_buggy",
    "log_correction",
    "logp_fixed",
    "surprisal_buggy",
    "surprisal_fixed",
    "applied_fix",
];

/// One line of a score file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRecord {
    pub sentence_idx: usize,
    pub word_idx: usize,
    pub word: String,
    pub logp_buggy: f64,
    pub log_correction: f64,
    pub logp_fixed: f64,
    pub surprisal_buggy: f64,
    pub surprisal_fixed: f64,
    pub applied_fix: String,
}

impl ScoredRecord {
    /// Surprisal columns are divided by `ln 2` when `bits` is set.
    pub fn from_row(row: &ScoredRow, bits: bool) -> Self {
        let scale = if bits { std::f64::consts::LN_2.recip() } else { 1.0 };
        let s = &row.scored;
        ScoredRecord {
            sentence_idx: row.sentence,
            word_idx: row.index,
            word: s.word.clone(),
            logp_buggy: s.p_buggy.value(),
            log_correction: s.correction,
            logp_fixed: s.p_fixed.value(),
            surprisal_buggy: s.surprisal_buggy * scale,
            surprisal_fixed: s.surprisal_fixed * scale,
            applied_fix: s.applied_fix.name().to_string(),
        }
    }

    pub fn fix(&self) -> Option<AppliedFix> {
        AppliedFix::parse(&self.applied_fix)
    }
}

fn writer_builder() -> csv::WriterBuilder {
    let mut b = csv::WriterBuilder::new();
    b.delimiter(b'\t').quote_style(csv::QuoteStyle::Never).has_headers(false);
    b
}

fn reader_builder() -> csv::ReaderBuilder {
    let mut b = csv::ReaderBuilder::new();
    b.delimiter(b'\t').quoting(false).has_headers(true);
    b
}

/// Writes the header even when there are no records.
pub fn write_scored<W: Write>(out: W, records: &[ScoredRecord]) -> csv::Result<()> {
    let mut w = writer_builder().from_writer(out);
    w.write_record(SCORED_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scored<R: Read>(input: R) -> csv::Result<Vec<ScoredRecord>> {
    reader_builder().from_reader(input).deserialize().collect()
}
