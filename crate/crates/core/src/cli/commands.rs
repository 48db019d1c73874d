use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{read_file, Context, Outcome};
use crate::analysis::{self, io as aio, CompareSettings, SurprisalVariant};
use crate::lm::verify_exactness;
use crate::oracle::{EnumerationBudget, Oracle, OracleError};
use crate::tokeniser::{pretokenise, Form, SegmentationRules, TokeniserSpec};
use crate::vocab::validate_vocabulary;
use crate::wordprob::{end_logprob, score_corpus, score_word, write_scored, AppliedFix, Dispatch, ScoredRecord};

fn dispatch(drop_fix: Option<&str>) -> Result<Dispatch, String> {
    match drop_fix {
        None => Ok(Dispatch::Auto),
        Some(name) => match AppliedFix::parse(name) {
            Some(f) if f != AppliedFix::None => Ok(Dispatch::Without(f)),
            _ => Err(format!("unknown correction `{name}`; expected fix1, fix2 or fix3")),
        },
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

pub fn score(ctx: &Context, corpus: &Path, drop_fix: Option<&str>) -> Result<Outcome, String> {
    let dispatch = dispatch(drop_fix)?;
    let spec = ctx.config.load_spec()?;
    let lm = ctx.config.load_lm(spec.vocab().support_len())?;
    let text = String::from_utf8(read_file(corpus)?).map_err(|e| format!("{}: {e}", corpus.display()))?;
    let rules = SegmentationRules::default();
    let sentences: Vec<Vec<String>> =
        text.lines().filter(|l| !l.trim().is_empty()).map(|l| pretokenise(l, &rules)).collect();
    let scores = score_corpus(lm.as_dyn(), &spec, &sentences, dispatch).map_err(|e| e.to_string())?;
    let records: Vec<ScoredRecord> = scores.rows.iter().map(|r| ScoredRecord::from_row(r, ctx.bits)).collect();
    let mut buf = Vec::new();
    write_scored(&mut buf, &records).map_err(|e| e.to_string())?;
    ctx.emit("scores.tsv", &buf)?;
    if scores.skipped.is_empty() {
        return Ok(Outcome::Success);
    }
    eprintln!("skipped {} of {} sentences", scores.skipped.len(), sentences.len());
    for (s, e) in &scores.skipped {
        eprintln!("  sentence {s}: {e}");
    }
    Ok(Outcome::Partial)
}

fn contexts(spec: &TokeniserSpec, max_words: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..max_words {
        layer = layer
            .iter()
            .flat_map(|c| {
                spec.lexicon().iter().map(move |w| {
                    let mut c = c.clone();
                    c.push(w.clone());
                    c
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

pub fn oracle_check(
    ctx: &Context,
    max_len: usize,
    min_eos: f64,
    context_words: usize,
    drop_fix: Option<&str>,
) -> Result<Outcome, String> {
    let dispatch = dispatch(drop_fix)?;
    let spec = ctx.config.load_spec()?;
    let loaded = ctx.config.load_lm(spec.vocab().support_len())?;
    let lm = loaded.tabular().ok_or("oracle-check needs a tabular model")?;
    let tol = ctx.config.tolerance;
    let oracle = Oracle::new(lm, EnumerationBudget::new(max_len, min_eos), tol).map_err(|e| e.to_string())?;
    let mut report = String::from("case_id\tformula\toracle_lo\toracle_hi\tpass\n");
    let mut failed = Vec::new();
    let mut record = |id: String, value: f64, lo: f64, hi: f64| {
        let pass = value >= lo - tol && value <= hi + tol;
        writeln!(report, "{id}\t{value}\t{lo}\t{hi}\t{}", if pass { "pass" } else { "fail" }).expect("string write");
        if !pass {
            failed.push(id);
        }
    };
    for context in contexts(&spec, context_words) {
        let shown = format!("[{}]", context.join(" "));
        let end = match oracle.end_conditional(&spec, &context) {
            Err(OracleError::ZeroContextMass) => continue,
            other => other.map_err(|e| e.to_string())?,
        };
        let p = end_logprob(lm, &spec, &context).map_err(|e| e.to_string())?;
        record(format!("{shown} <end>"), p.prob(), end.lo, end.hi);
        for w in spec.lexicon() {
            let iv = oracle.word_conditional(&spec, &context, w).map_err(|e| e.to_string())?;
            let s = score_word(lm, &spec, &context, w, Form::Marked, dispatch).map_err(|e| e.to_string())?;
            record(format!("{shown} {w}"), s.p_fixed.prob(), iv.lo, iv.hi);
        }
    }
    ctx.emit("oracle_check.tsv", report.as_bytes())?;
    if failed.is_empty() {
        return Ok(Outcome::Success);
    }
    eprintln!("{} cases outside their oracle interval:", failed.len());
    for id in &failed {
        eprintln!("  {id}");
    }
    Ok(Outcome::Failure)
}

fn read_scored_file(path: &Path) -> Result<Vec<ScoredRecord>, String> {
    crate::wordprob::read_scored(&read_file(path)?[..]).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_counts_file(path: &Path) -> Result<std::collections::BTreeMap<String, u64>, String> {
    aio::read_counts(&read_file(path)?[..]).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn analyze_rt(
    ctx: &Context,
    rt: &Path,
    scored: &[PathBuf],
    counts: Option<&Path>,
    folds: usize,
    permutations: usize,
) -> Result<Outcome, String> {
    let rows = aio::read_rt_csv(&read_file(rt)?[..]).map_err(|e| format!("{}: {e}", rt.display()))?;
    let counts = counts.map(read_counts_file).transpose()?;
    let settings = CompareSettings { folds, seed: ctx.config.seed, permutations };
    let mut table = Vec::new();
    for path in scored {
        let records = read_scored_file(path)?;
        let frame = |v| aio::build_frame(&rows, &records, counts.as_ref(), v).map_err(|e| format!("{}: {e}", path.display()));
        let (buggy, fixed) = (frame(SurprisalVariant::Buggy)?, frame(SurprisalVariant::Fixed)?);
        let row = analysis::compare_buggy_vs_fixed(&stem(path), &stem(rt), &buggy, &fixed, settings)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        table.push(row);
    }
    let mut buf = Vec::new();
    aio::write_comparison(&mut buf, &table).map_err(|e| e.to_string())?;
    ctx.emit("rt_comparison.tsv", &buf)?;
    Ok(Outcome::Success)
}

pub fn analyze_lengths(ctx: &Context, scored: &Path, counts: &Path) -> Result<Outcome, String> {
    let records = read_scored_file(scored)?;
    let counts = read_counts_file(counts)?;
    let rows = analysis::length_correlations(&records, &counts).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    aio::write_correlations(&mut buf, &rows).map_err(|e| e.to_string())?;
    ctx.emit("length_correlations.tsv", &buf)?;
    let degenerate: Vec<_> = rows.iter().filter(|r| r.spearman.is_err()).collect();
    if degenerate.is_empty() {
        return Ok(Outcome::Success);
    }
    for r in degenerate {
        eprintln!("{} ({}): {}", r.hypothesis, r.surprisal, r.spearman.as_ref().unwrap_err());
    }
    Ok(Outcome::Partial)
}

pub fn validate(ctx: &Context, depth: usize) -> Result<Outcome, String> {
    let mut report = String::new();
    let mut ok = true;
    let vocab = ctx.config.load_vocab()?;
    let v = validate_vocabulary(&vocab).map_err(|e| e.to_string())?;
    writeln!(report, "vocab\t{} marked, {} unmarked, eos {}", v.marked, v.unmarked, vocab.eos()).expect("string write");
    for (a, b) in &v.shared_surfaces {
        writeln!(report, "vocab\tids {a} and {b} share a surface").expect("string write");
    }
    let spec = ctx.config.load_spec()?;
    match spec.certify_decodability(3) {
        Ok(d) => writeln!(report, "tokeniser\t{} words, {d:?}", spec.lexicon().len()).expect("string write"),
        Err(e) => {
            ok = false;
            writeln!(report, "tokeniser\t{e}").expect("string write");
        }
    }
    if ctx.config.lm.tabular.is_some() {
        let loaded = ctx.config.load_lm(vocab.support_len())?;
        let lm = loaded.tabular().expect("tabular source");
        match verify_exactness(lm, &spec, depth) {
            Ok(()) => writeln!(report, "lm\torder {}, {} contexts, exact to depth {depth}", lm.order(), lm.row_count())
                .expect("string write"),
            Err(e) => {
                ok = false;
                writeln!(report, "lm\t{e}").expect("string write");
            }
        }
    }
    print!("{report}");
    Ok(if ok { Outcome::Success } else { Outcome::Failure })
}
