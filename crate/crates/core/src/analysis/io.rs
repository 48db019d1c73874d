//! Reading-time and count files, frame assembly, and result tables.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::compare::ComparisonRow;
use super::lexicon::{CorrelationRow, SurprisalVariant};
use super::regression::RTObservation;
use super::AnalysisError;
use crate::wordprob::ScoredRecord;

/// One line of a reading-time CSV: `word,avg_rt,sentence_idx,word_idx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtRow {
    pub word: String,
    pub avg_rt: f64,
    pub sentence_idx: usize,
    pub word_idx: usize,
}

fn input_error(e: impl std::fmt::Display) -> AnalysisError {
    AnalysisError::Input(e.to_string())
}

pub fn read_rt_csv<R: Read>(input: R) -> Result<Vec<RtRow>, AnalysisError> {
    let rows: Vec<RtRow> = csv::Reader::from_reader(input).deserialize().collect::<Result<_, _>>().map_err(input_error)?;
    if let Some(r) = rows.iter().find(|r| !(r.avg_rt > 0.0)) {
        return Err(AnalysisError::Input(format!(
            "reading time {} at sentence {} word {} is not positive",
            r.avg_rt, r.sentence_idx, r.word_idx
        )));
    }
    Ok(rows)
}

pub fn write_rt_csv<W: Write>(out: W, rows: &[RtRow]) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(input_error)?;
    }
    w.flush().map_err(input_error)
}

/// `word<TAB>count` lines, no header.
pub fn read_counts<R: Read>(input: R) -> Result<BTreeMap<String, u64>, AnalysisError> {
    let mut out = BTreeMap::new();
    let mut reader = csv::ReaderBuilder::new().delimiter(b'\t').quoting(false).has_headers(false).from_reader(input);
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(input_error)?;
        let (Some(word), Some(count)) = (rec.get(0), rec.get(1)) else {
            return Err(AnalysisError::Input(format!("counts line {}: expected word and count", line + 1)));
        };
        let count: u64 =
            count.trim().parse().map_err(|e| AnalysisError::Input(format!("counts line {}: {e}", line + 1)))?;
        *out.entry(word.to_string()).or_insert(0) += count;
    }
    Ok(out)
}

pub fn write_counts<W: Write>(mut out: W, counts: &BTreeMap<String, u64>) -> std::io::Result<()> {
    for (w, c) in counts {
        writeln!(out, "{w}\t{c}")?;
    }
    Ok(())
}

/// Joins reading times with scores by position. Log frequency is add-one
/// smoothed over `counts`, or over the reading-time words themselves when no
/// counts are given. Spillover slots before a sentence's first word hold the
/// frame's mean surprisal.
pub fn build_frame(
    rt: &[RtRow],
    scored: &[ScoredRecord],
    counts: Option<&BTreeMap<String, u64>>,
    variant: SurprisalVariant,
) -> Result<Vec<RTObservation>, AnalysisError> {
    let by_pos: HashMap<(usize, usize), &ScoredRecord> =
        scored.iter().map(|r| ((r.sentence_idx, r.word_idx), r)).collect();
    let own_counts;
    let counts = match counts {
        Some(c) => c,
        None => {
            let mut c = BTreeMap::new();
            for r in rt {
                *c.entry(r.word.clone()).or_insert(0) += 1;
            }
            own_counts = c;
            &own_counts
        }
    };
    let total: u64 = counts.values().sum();
    let types = counts.len() as f64;
    let mut frame = Vec::with_capacity(rt.len());
    for r in rt {
        let s = by_pos.get(&(r.sentence_idx, r.word_idx)).ok_or_else(|| {
            AnalysisError::Input(format!("no score for sentence {} word {}", r.sentence_idx, r.word_idx))
        })?;
        if s.word != r.word {
            return Err(AnalysisError::Input(format!(
                "sentence {} word {}: reading times have `{}`, scores have `{}`",
                r.sentence_idx, r.word_idx, r.word, s.word
            )));
        }
        let c = counts.get(&r.word).copied().unwrap_or(0) as f64;
        frame.push(RTObservation {
            word: r.word.clone(),
            sentence_idx: r.sentence_idx,
            word_idx: r.word_idx,
            avg_rt: r.avg_rt,
            length: r.word.chars().count() as f64,
            log_frequency: ((c + 1.0) / (total as f64 + types)).ln(),
            surprisal: variant.of(s),
            spillover: [0.0; 3],
        });
    }
    fill_spillover(&mut frame);
    Ok(frame)
}

/// Sets each observation's spillover surprisals from the preceding words of
/// its sentence.
pub fn fill_spillover(frame: &mut [RTObservation]) {
    if frame.is_empty() {
        return;
    }
    let pad = frame.iter().map(|o| o.surprisal).sum::<f64>() / frame.len() as f64;
    let by_pos: HashMap<(usize, usize), f64> =
        frame.iter().map(|o| ((o.sentence_idx, o.word_idx), o.surprisal)).collect();
    for o in frame.iter_mut() {
        for k in 1..=3 {
            o.spillover[k - 1] = o
                .word_idx
                .checked_sub(k)
                .and_then(|j| by_pos.get(&(o.sentence_idx, j)).copied())
                .unwrap_or(pad);
        }
    }
}

pub fn write_comparison<W: Write>(mut out: W, rows: &[ComparisonRow]) -> std::io::Result<()> {
    writeln!(out, "model\tdataset\timprovement\tfixed\tbuggy\tp_value\tp_fixed\tp_buggy")?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.model, r.dataset, r.improvement, r.fixed.mean, r.buggy.mean, r.p_value, r.p_fixed, r.p_buggy
        )?;
    }
    Ok(())
}

pub fn write_correlations<W: Write>(mut out: W, rows: &[CorrelationRow]) -> std::io::Result<()> {
    writeln!(out, "hypothesis\tsurprisal\tn_types\tspearman\tstatus")?;
    for r in rows {
        match &r.spearman {
            Ok(v) => writeln!(out, "{}\t{}\t{}\t{}\tok", r.hypothesis, r.surprisal, r.n_types, v)?,
            Err(e) => writeln!(out, "{}\t{}\t{}\tNA\t{}", r.hypothesis, r.surprisal, r.n_types, e)?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scored(s: usize, i: usize, word: &str, h: f64) -> ScoredRecord {
        ScoredRecord {
            sentence_idx: s,
            word_idx: i,
            word: word.into(),
            logp_buggy: -h - 0.1,
            log_correction: 0.1,
            logp_fixed: -h,
            surprisal_buggy: h + 0.1,
            surprisal_fixed: h,
            applied_fix: "fix1".into(),
        }
    }

    #[test]
    fn rt_round_trip() {
        let rows = vec![
            RtRow { word: "the".into(), avg_rt: 251.5, sentence_idx: 0, word_idx: 0 },
            RtRow { word: "dog".into(), avg_rt: 300.0, sentence_idx: 0, word_idx: 1 },
        ];
        let mut buf = Vec::new();
        write_rt_csv(&mut buf, &rows).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("word,avg_rt,sentence_idx,word_idx\n"));
        assert_eq!(read_rt_csv(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn non_positive_rt_rejected() {
        let text = "word,avg_rt,sentence_idx,word_idx\nthe,0,0,0\n";
        assert!(matches!(read_rt_csv(text.as_bytes()), Err(AnalysisError::Input(_))));
    }

    #[test]
    fn counts_parse() {
        let c = read_counts("the\t10\ndog\t3\nthe\t1\n".as_bytes()).unwrap();
        assert_eq!(c["the"], 11);
        assert!(read_counts("the\tmany\n".as_bytes()).is_err());
    }

    #[test]
    fn frame_joins_and_pads() {
        let rt: Vec<RtRow> = ["a", "bb", "ccc", "dd", "e"]
            .iter()
            .enumerate()
            .map(|(i, w)| RtRow { word: w.to_string(), avg_rt: 200.0 + i as f64, sentence_idx: 0, word_idx: i })
            .collect();
        let sc: Vec<ScoredRecord> = rt.iter().map(|r| scored(0, r.word_idx, &r.word, r.word_idx as f64)).collect();
        let frame = build_frame(&rt, &sc, None, SurprisalVariant::Fixed).unwrap();
        assert_eq!(frame[4].spillover, [3.0, 2.0, 1.0]);
        assert_eq!(frame[1].spillover, [0.0, 2.0, 2.0]);
        assert_eq!(frame[2].length, 3.0);
        let buggy = build_frame(&rt, &sc, None, SurprisalVariant::Buggy).unwrap();
        assert!((buggy[0].surprisal - 0.1).abs() < 1e-12);
        let mut wrong = sc.clone();
        wrong[2].word = "x".into();
        assert!(build_frame(&rt, &wrong, None, SurprisalVariant::Fixed).is_err());
    }
}
