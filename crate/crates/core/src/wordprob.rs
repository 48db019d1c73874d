//! Word conditionals from subword conditionals.
//!
//! `p(w | context) = P(context ∘ w ∘ ...) / P(context ∘ ...)`, where both
//! prefix events are translated into sets of subword sequences and evaluated
//! with the chain rule. How that translation goes depends on the marking
//! scheme:
//!
//! * eow, every word marked: the word's subwords close the event, so the
//!   conditional is the plain product over its subwords.
//! * bow: a word is only finished once the next subword starts a new word or
//!   ends the sentence, so the product is rescaled by the mass on marked
//!   subwords and eos after the word over the same mass after the context
//!   ([`AppliedFix::Fix1`]).
//! * eow with unmarked final words: the word may also appear in its unmarked
//!   form followed by punctuation or the end ([`AppliedFix::Fix2`]).
//! * bow with an unmarked first word: the first word's event starts with
//!   its unmarked form ([`AppliedFix::Fix3`]).
//!
//! The uncorrected product ("buggy") is kept next to every corrected value.

use std::fmt;

use thiserror::Error;

use crate::lm::{ConditionalLM, LmError};
use crate::logprob::{logsumexp, LogProb};
use crate::tokeniser::{Form, Position, TokeniserError, TokeniserSpec};
use crate::vocab::{Id, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AppliedFix {
    None,
    Fix1,
    Fix2,
    Fix3,
}

impl AppliedFix {
    pub fn name(self) -> &'static str {
        match self {
            AppliedFix::None => "none",
            AppliedFix::Fix1 => "fix1",
            AppliedFix::Fix2 => "fix2",
            AppliedFix::Fix3 => "fix3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [AppliedFix::None, AppliedFix::Fix1, AppliedFix::Fix2, AppliedFix::Fix3]
            .into_iter()
            .find(|f| f.name() == s)
    }
}

impl fmt::Display for AppliedFix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredWord {
    pub word: String,
    pub context_words: Vec<String>,
    pub p_buggy: LogProb,
    /// `p_fixed - p_buggy` in log space.
    pub correction: f64,
    pub p_fixed: LogProb,
    pub surprisal_buggy: f64,
    pub surprisal_fixed: f64,
    pub applied_fix: AppliedFix,
}

impl ScoredWord {
    fn new(context: &[String], word: &str, buggy: LogProb, fixed: LogProb, fix: AppliedFix) -> Self {
        let correction = if buggy.is_zero() && fixed.is_zero() { 0.0 } else { fixed - buggy };
        ScoredWord {
            word: word.to_string(),
            context_words: context.to_vec(),
            p_buggy: buggy,
            correction,
            p_fixed: fixed,
            surprisal_buggy: buggy.surprisal(),
            surprisal_fixed: fixed.surprisal(),
            applied_fix: fix,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum WordProbError {
    #[error("operation needs {expected}, tokeniser is {found}")]
    SchemeMismatch { expected: String, found: String },
    #[error(transparent)]
    Tokeniser(#[from] TokeniserError),
    #[error("the first word of a sentence with unmarked first words needs the first-word correction")]
    FirstWordNeedsFix3,
    #[error("word `{0}` has no unmarked form")]
    MissingMidMap(String),
    #[error("the first-word correction only applies to an empty context")]
    NonEmptyContext,
    #[error("context {0:?} has probability zero")]
    ImpossibleContext(Vec<String>),
    #[error(transparent)]
    Lm(#[from] LmError),
}

type Result<T> = std::result::Result<T, WordProbError>;

fn describe(spec: &TokeniserSpec) -> String {
    let f = spec.flags();
    format!(
        "{} (first word {}, final word {})",
        spec.scheme(),
        if f.mark_first_word { "marked" } else { "unmarked" },
        if f.mark_final_word { "marked" } else { "unmarked" }
    )
}

fn mismatch(expected: &str, spec: &TokeniserSpec) -> WordProbError {
    WordProbError::SchemeMismatch { expected: expected.to_string(), found: describe(spec) }
}

/// `Σ_t log p(ext_t | base ∘ ext_<t)`.
fn chain(lm: &dyn ConditionalLM, base: &[Id], ext: &[Id]) -> Result<LogProb> {
    let mut ctx = base.to_vec();
    let mut acc = LogProb::ONE;
    for &id in ext {
        let dist = lm.next_distribution(&ctx)?;
        acc += dist[id as usize];
        ctx.push(id);
    }
    Ok(acc)
}

/// `log Σ_{u ∈ ids} p(u | ctx)`.
fn mass(lm: &dyn ConditionalLM, ctx: &[Id], ids: &[Id]) -> Result<LogProb> {
    let dist = lm.next_distribution(ctx)?;
    Ok(logsumexp(ids.iter().map(|&u| dist[u as usize])))
}

fn cat(a: &[Id], b: &[Id]) -> Vec<Id> {
    [a, b].concat()
}

/// Punctuation ids plus eos.
fn punct_with_eos(spec: &TokeniserSpec) -> Vec<Id> {
    let eos = spec.vocab().eos();
    let mut ids: Vec<Id> = spec.vocab().punct_ids().iter().copied().filter(|&p| p != eos).collect();
    ids.push(eos);
    ids
}

/// What comes right after the context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Next {
    Plain,
    Punct,
    End,
}

fn next_for(spec: &TokeniserSpec, word: &str) -> Next {
    if spec.starts_with_punct(word) {
        Next::Punct
    } else {
        Next::Plain
    }
}

/// Subword ids of `context` as they appear when followed by `next`.
fn context_ids(spec: &TokeniserSpec, context: &[String], next: Next) -> Result<Vec<Id>> {
    let n = context.len();
    let mut out = Vec::new();
    for (i, w) in context.iter().enumerate() {
        let position = if i + 1 < n {
            spec.position_in(context, i)
        } else {
            match next {
                Next::Punct | Next::End if !(i == 0 && spec.scheme() == Scheme::Bow) => Position::Final,
                _ if i == 0 => Position::First,
                _ => Position::Medial,
            }
        };
        out.extend(spec.tokenise_form(w, spec.form_at(position), Some(i))?);
    }
    Ok(out)
}

fn marked(spec: &TokeniserSpec, word: &str) -> Result<Vec<Id>> {
    Ok(spec.tokenise_form(word, Form::Marked, None)?)
}

fn unmarked(spec: &TokeniserSpec, word: &str) -> Result<Vec<Id>> {
    spec.word_index(word).ok_or_else(|| TokeniserError::UnknownWord { word: word.to_string(), index: None })?;
    spec.mid_image(word).map(<[Id]>::to_vec).ok_or_else(|| WordProbError::MissingMidMap(word.to_string()))
}

/// Log probability of all sequences starting with `ids`.
pub fn prefix_logprob(lm: &dyn ConditionalLM, ids: &[Id]) -> std::result::Result<LogProb, LmError> {
    match chain(lm, &[], ids) {
        Ok(lp) => Ok(lp),
        Err(WordProbError::Lm(e)) => Err(e),
        Err(other) => unreachable!("chain only fails through the model: {other}"),
    }
}

/// Product of the word's subword conditionals after the context, for an eow
/// tokeniser. No correction term.
pub fn word_conditional_eow(
    lm: &dyn ConditionalLM,
    spec: &TokeniserSpec,
    context: &[String],
    word: &str,
) -> Result<LogProb> {
    if spec.scheme() != Scheme::Eow {
        return Err(mismatch("an eow tokeniser", spec));
    }
    let ctx = context_ids(spec, context, next_for(spec, word))?;
    chain(lm, &ctx, &marked(spec, word)?)
}

/// Corrected conditional for a bow tokeniser.
pub fn word_conditional_bow(
    lm: &dyn ConditionalLM,
    spec: &TokeniserSpec,
    context: &[String],
    word: &str,
) -> Result<ScoredWord> {
    if spec.scheme() != Scheme::Bow {
        return Err(mismatch("a bow tokeniser", spec));
    }
    if context.is_empty() && !spec.flags().mark_first_word {
        return Err(WordProbError::FirstWordNeedsFix3);
    }
    let ctx = context_ids(spec, context, Next::Plain)?;
    let ids = marked(spec, word)?;
    let boundary = spec.vocab().marked_with_eos();
    let buggy = chain(lm, &ctx, &ids)?;
    let after_word = mass(lm, &cat(&ctx, &ids), &boundary)?;
    let after_context = mass(lm, &ctx, &boundary)?;
    if after_context.is_zero() {
        return Err(WordProbError::ImpossibleContext(context.to_vec()));
    }
    let fixed = LogProb::new((buggy + after_word).value() - after_context.value());
    Ok(ScoredWord::new(context, word, buggy, fixed, AppliedFix::Fix1))
}

/// Corrected conditional of the first word for a bow tokeniser whose first
/// word is unmarked.
pub fn bugfix_bow_first(
    lm: &dyn ConditionalLM,
    spec: &TokeniserSpec,
    context: &[String],
    word: &str,
) -> Result<ScoredWord> {
    if spec.scheme() != Scheme::Bow || spec.flags().mark_first_word {
        return Err(mismatch("a bow tokeniser with unmarked first words", spec));
    }
    if !context.is_empty() {
        return Err(WordProbError::NonEmptyContext);
    }
    let ids = unmarked(spec, word)?;
    let buggy = chain(lm, &[], &ids)?;
    let after_word = mass(lm, &ids, &spec.vocab().marked_with_eos())?;
    let at_start = mass(lm, &[], &spec.vocab().mid_with_eos())?;
    if at_start.is_zero() {
        return Err(WordProbError::ImpossibleContext(Vec::new()));
    }
    let fixed = LogProb::new((buggy + after_word).value() - at_start.value());
    Ok(ScoredWord::new(context, word, buggy, fixed, AppliedFix::Fix3))
}

/// Pieces shared by the unmarked-final-word conditional and its end event.
struct FinalUnmarked {
    /// `log P(context ∘ ...)`.
    context_mass: LogProb,
}

fn final_unmarked_context(lm: &dyn ConditionalLM, spec: &TokeniserSpec, context: &[String]) -> Result<FinalUnmarked> {
    if context.is_empty() {
        return Ok(FinalUnmarked { context_mass: LogProb::ONE });
    }
    let closing = punct_with_eos(spec);
    let before_plain = context_ids(spec, context, Next::Plain)?;
    let plain = chain(lm, &[], &before_plain)?;
    let closed = match context_ids(spec, context, Next::End) {
        Ok(ids) => chain(lm, &[], &ids)? + mass(lm, &ids, &closing)?,
        Err(WordProbError::Tokeniser(TokeniserError::UnknownWord { .. })) => LogProb::ZERO,
        Err(e) => return Err(e),
    };
    Ok(FinalUnmarked { context_mass: logsumexp([plain, closed]) })
}

fn final_unmarked_word(
    lm: &dyn ConditionalLM,
    spec: &TokeniserSpec,
    context: &[String],
    word: &str,
    buggy_form: Form,
) -> Result<ScoredWord> {
    let closing = punct_with_eos(spec);
    let base = context_ids(spec, context, next_for(spec, word))?;
    let base_mass = chain(lm, &[], &base)?;
    let ids = marked(spec, word)?;
    let mid = unmarked(spec, word)?;
    let as_marked = chain(lm, &base, &ids)?;
    let as_mid = chain(lm, &base, &mid)?;
    let as_mid_closed = as_mid + mass(lm, &cat(&base, &mid), &closing)?;
    let joint = base_mass + logsumexp([as_mid_closed, as_marked]);
    let ctx = final_unmarked_context(lm, spec, context)?;
    if ctx.context_mass.is_zero() {
        return Err(WordProbError::ImpossibleContext(context.to_vec()));
    }
    let fixed = LogProb::new(joint.value() - ctx.context_mass.value());
    let buggy = match buggy_form {
        Form::Mid => as_mid,
        Form::Marked => as_marked,
    };
    Ok(ScoredWord::new(context, word, buggy, fixed, AppliedFix::Fix2))
}

/// Corrected conditional for an eow tokeniser that leaves final words (and
/// words before punctuation) unmarked. The word may continue in its marked
/// form or close in its unmarked form followed by punctuation or eos; the
/// context mass likewise counts both forms of the context's last word.
/// `p_buggy` is the product over the unmarked form.
pub fn bugfix_eow_final(
    lm: &dyn ConditionalLM,
    spec: &TokeniserSpec,
    context: &[String],
    word: &str,
) -> Result<ScoredWord> {
    if spec.scheme() != Scheme::Eow || spec.flags().mark_final_word {
        return Err(mismatch("an eow tokeniser with unmarked final words", spec));
    }
    final_unmarked_word(lm, spec, context, word, Form::Mid)
}

/// The uncorrected product over the word's subwords after the context.
pub fn word_conditional_buggy(
    lm: &dyn ConditionalLM,
    spec: &TokeniserSpec,
    context: &[String],
    word: &str,
) -> Result<LogProb> {
    let ctx = context_ids(spec, context, next_for(spec, word))?;
    let position = if context.is_empty() { Position::First } else { Position::Medial };
    let ids = spec.tokenise_word(word, position)?;
    chain(lm, &ctx, &ids)
}

/// Log probability that the sentence ends right after `context`, given the context.
pub fn end_logprob(lm: &dyn ConditionalLM, spec: &TokeniserSpec, context: &[String]) -> Result<LogProb> {
    let eos = spec.vocab().eos();
    let ids = context_ids(spec, context, Next::End)?;
    let end = mass(lm, &ids, &[eos])?;
    let normaliser = match spec.scheme() {
        Scheme::Eow if spec.flags().mark_final_word => LogProb::ONE,
        Scheme::Eow => {
            let ctx = final_unmarked_context(lm, spec, context)?;
            let whole = chain(lm, &[], &ids)? + end;
            return Ok(LogProb::new(whole.value() - ctx.context_mass.value()));
        }
        Scheme::Bow if context.is_empty() && !spec.flags().mark_first_word => {
            mass(lm, &[], &spec.vocab().mid_with_eos())?
        }
        Scheme::Bow => mass(lm, &ids, &spec.vocab().marked_with_eos())?,
    };
    if normaliser.is_zero() {
        return Err(WordProbError::ImpossibleContext(context.to_vec()));
    }
    Ok(LogProb::new(end.value() - normaliser.value()))
}

/// `log p(words)`: the chain over the sentence's subwords, then eos.
pub fn sequence_logprob(lm: &dyn ConditionalLM, spec: &TokeniserSpec, words: &[String]) -> Result<LogProb> {
    let ids = spec.tokenise_sequence(words)?;
    let eos = spec.vocab().eos();
    Ok(chain(lm, &[], &ids)? + mass(lm, &ids, &[eos])?)
}

/// How [`score_word`] picks the correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dispatch {
    /// By scheme, position and boundary flags.
    Auto,
    /// As `Auto`, but the named correction is dropped and the uncorrected
    /// product is reported as the fixed value.
    Without(AppliedFix),
}

/// Scores `word` after `context`. `form_in_sentence` is the form the word
/// takes in the sentence being scored, which fixes the uncorrected product.
pub fn score_word(
    lm: &dyn ConditionalLM,
    spec: &TokeniserSpec,
    context: &[String],
    word: &str,
    form_in_sentence: Form,
    dispatch: Dispatch,
) -> Result<ScoredWord> {
    let flags = spec.flags();
    let scored = match spec.scheme() {
        Scheme::Eow if flags.mark_final_word => {
            let p = word_conditional_eow(lm, spec, context, word)?;
            ScoredWord::new(context, word, p, p, AppliedFix::None)
        }
        Scheme::Eow => final_unmarked_word(lm, spec, context, word, form_in_sentence)?,
        Scheme::Bow if context.is_empty() && !flags.mark_first_word => bugfix_bow_first(lm, spec, context, word)?,
        Scheme::Bow => word_conditional_bow(lm, spec, context, word)?,
    };
    Ok(match dispatch {
        Dispatch::Without(fix) if fix == scored.applied_fix && fix != AppliedFix::None => {
            ScoredWord::new(context, word, scored.p_buggy, scored.p_buggy, AppliedFix::None)
        }
        _ => scored,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRow {
    pub sentence: usize,
    pub index: usize,
    pub scored: ScoredWord,
}

#[derive(Debug, Default)]
pub struct CorpusScores {
    pub rows: Vec<ScoredRow>,
    /// Sentences that could not be scored, with the reason.
    pub skipped: Vec<(usize, WordProbError)>,
}

/// One record per word, in order. Sentences with out-of-lexicon words are
/// skipped and reported; other failures abort.
pub fn score_corpus(
    lm: &dyn ConditionalLM,
    spec: &TokeniserSpec,
    sentences: &[Vec<String>],
    dispatch: Dispatch,
) -> Result<CorpusScores> {
    let mut out = CorpusScores::default();
    for (s, words) in sentences.iter().enumerate() {
        if let Err(e) = spec.tokenise_sequence(words) {
            out.skipped.push((s, e.into()));
            continue;
        }
        let forms = spec.forms_for(words);
        let mut rows = Vec::with_capacity(words.len());
        let mut failed = None;
        for (i, w) in words.iter().enumerate() {
            match score_word(lm, spec, &words[..i], w, forms[i], dispatch) {
                Ok(scored) => rows.push(ScoredRow { sentence: s, index: i, scored }),
                Err(e @ WordProbError::MissingMidMap(_)) => {
                    failed = Some(e);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        match failed {
            Some(e) => out.skipped.push((s, e)),
            None => out.rows.extend(rows),
        }
    }
    Ok(out)
}

pub mod tsv;

pub use tsv::{read_scored, write_scored, ScoredRecord};

#[cfg(test)]
mod tests;
