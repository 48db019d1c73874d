//! C ABI over `lexprob`.
//!
//! Tokeniser specs and models are opaque heap handles created from a TOML run
//! configuration and released with the matching `_free` call. Every fallible
//! function returns a [`LexprobStatus`]; on failure the message is available
//! from [`lexprob_last_error`] on the same thread until the next call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lexprob::cli::config::LoadedLm;
use lexprob::cli::RunConfig;
use lexprob::tokeniser::{Form, TokeniserError, TokeniserSpec};
use lexprob::wordprob::{self, AppliedFix, Dispatch, WordProbError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexprobStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Load = 3,
    UnknownWord = 4,
    ZeroContext = 5,
    Model = 6,
    Unsupported = 7,
    Panic = 8,
}

/// Correction applied to a scored word.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexprobFix {
    None = 0,
    Fix1 = 1,
    Fix2 = 2,
    Fix3 = 3,
}

impl From<AppliedFix> for LexprobFix {
    fn from(f: AppliedFix) -> Self {
        match f {
            AppliedFix::None => LexprobFix::None,
            AppliedFix::Fix1 => LexprobFix::Fix1,
            AppliedFix::Fix2 => LexprobFix::Fix2,
            AppliedFix::Fix3 => LexprobFix::Fix3,
        }
    }
}

/// Natural-log probabilities of one word given its context.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LexprobWordScore {
    pub logp_buggy: f64,
    pub log_correction: f64,
    pub logp_fixed: f64,
    pub applied_fix: LexprobFix,
}

/// Tokeniser spec with its vocabulary.
pub struct LexprobSpec {
    inner: TokeniserSpec,
}

/// Conditional subword model.
pub struct LexprobModel {
    inner: LoadedLm,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(LexprobStatus, String);

impl From<WordProbError> for Failure {
    fn from(e: WordProbError) -> Self {
        let status = match &e {
            WordProbError::Tokeniser(TokeniserError::UnknownWord { .. }) | WordProbError::MissingMidMap(_) => {
                LexprobStatus::UnknownWord
            }
            WordProbError::ImpossibleContext(_) => LexprobStatus::ZeroContext,
            WordProbError::Lm(_) => LexprobStatus::Model,
            _ => LexprobStatus::Unsupported,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LexprobStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LexprobStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            LexprobStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(LexprobStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(LexprobStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn words(p: *const *const c_char, n: usize, what: &str) -> Result<Vec<String>, Failure> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if p.is_null() {
        return Err(Failure(LexprobStatus::NullArgument, format!("{what} is null")));
    }
    std::slice::from_raw_parts(p, n).iter().map(|&w| text(w, what).map(str::to_string)).collect()
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(LexprobStatus::NullArgument, format!("{what} is null")))
}

fn out_ptr<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(LexprobStatus::NullArgument, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn load_config(path: &str) -> Result<RunConfig, Failure> {
    RunConfig::load(Path::new(path)).map_err(|m| Failure(LexprobStatus::Load, m))
}

/// Message of the last failed call on this thread, or null.
#[no_mangle]
pub extern "C" fn lexprob_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads the vocabulary and tokeniser named in a run configuration.
///
/// # Safety
/// `config_path` is a nul-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn lexprob_spec_load(config_path: *const c_char, out: *mut *mut LexprobSpec) -> LexprobStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let cfg = load_config(text(config_path, "config_path")?)?;
        let inner = cfg.load_spec().map_err(|m| Failure(LexprobStatus::Load, m))?;
        *out = Box::into_raw(Box::new(LexprobSpec { inner }));
        Ok(())
    })
}

/// # Safety
/// `spec` comes from [`lexprob_spec_load`] and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lexprob_spec_free(spec: *mut LexprobSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Number of words in the lexicon, or 0 for a null handle.
///
/// # Safety
/// `spec` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lexprob_spec_word_count(spec: *const LexprobSpec) -> usize {
    spec.as_ref().map_or(0, |s| s.inner.lexicon().len())
}

/// Loads the model named in a run configuration, sized to `spec`'s vocabulary.
///
/// # Safety
/// `config_path` is a nul-terminated string, `spec` a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lexprob_model_load(
    config_path: *const c_char,
    spec: *const LexprobSpec,
    out: *mut *mut LexprobModel,
) -> LexprobStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let spec = handle(spec, "spec")?;
        let cfg = load_config(text(config_path, "config_path")?)?;
        let inner =
            cfg.load_lm(spec.inner.vocab().support_len()).map_err(|m| Failure(LexprobStatus::Load, m))?;
        *out = Box::into_raw(Box::new(LexprobModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `model` comes from [`lexprob_model_load`] and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lexprob_model_free(model: *mut LexprobModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Probability of `word` as the next word after `context`.
///
/// # Safety
/// Handles are live; `context` holds `n_context` nul-terminated strings
/// (it may be null when `n_context` is 0); `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn lexprob_score_word(
    model: *const LexprobModel,
    spec: *const LexprobSpec,
    context: *const *const c_char,
    n_context: usize,
    word: *const c_char,
    out: *mut LexprobWordScore,
) -> LexprobStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let (model, spec) = (handle(model, "model")?, handle(spec, "spec")?);
        let context = words(context, n_context, "context")?;
        let word = text(word, "word")?;
        let s = wordprob::score_word(model.inner.as_dyn(), &spec.inner, &context, word, Form::Marked, Dispatch::Auto)?;
        *out = LexprobWordScore {
            logp_buggy: s.p_buggy.value(),
            log_correction: s.correction,
            logp_fixed: s.p_fixed.value(),
            applied_fix: s.applied_fix.into(),
        };
        Ok(())
    })
}

/// Log probability that the sentence ends after `context`.
///
/// # Safety
/// As [`lexprob_score_word`]; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn lexprob_end_logprob(
    model: *const LexprobModel,
    spec: *const LexprobSpec,
    context: *const *const c_char,
    n_context: usize,
    out: *mut f64,
) -> LexprobStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let (model, spec) = (handle(model, "model")?, handle(spec, "spec")?);
        let context = words(context, n_context, "context")?;
        *out = wordprob::end_logprob(model.inner.as_dyn(), &spec.inner, &context)?.value();
        Ok(())
    })
}

/// Log probability of a whole sentence, end of sentence included.
///
/// # Safety
/// As [`lexprob_score_word`], with `sentence` holding `n_words` strings.
#[no_mangle]
pub unsafe extern "C" fn lexprob_sentence_logprob(
    model: *const LexprobModel,
    spec: *const LexprobSpec,
    sentence: *const *const c_char,
    n_words: usize,
    out: *mut f64,
) -> LexprobStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let (model, spec) = (handle(model, "model")?, handle(spec, "spec")?);
        let sentence = words(sentence, n_words, "sentence")?;
        *out = wordprob::sequence_logprob(model.inner.as_dyn(), &spec.inner, &sentence)?.value();
        Ok(())
    })
}
