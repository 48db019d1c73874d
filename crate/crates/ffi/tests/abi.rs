use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use lexprob_ffi::*;

fn config() -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/toy.toml");
    CString::new(p.to_str().unwrap()).unwrap()
}

struct Loaded {
    spec: *mut LexprobSpec,
    model: *mut LexprobModel,
}

impl Loaded {
    fn new() -> Self {
        let cfg = config();
        let mut spec = ptr::null_mut();
        let mut model = ptr::null_mut();
        unsafe {
            assert_eq!(lexprob_spec_load(cfg.as_ptr(), &mut spec), LexprobStatus::Ok);
            assert_eq!(lexprob_model_load(cfg.as_ptr(), spec, &mut model), LexprobStatus::Ok);
        }
        Loaded { spec, model }
    }
}

impl Drop for Loaded {
    fn drop(&mut self) {
        unsafe {
            lexprob_model_free(self.model);
            lexprob_spec_free(self.spec);
        }
    }
}

fn last_error() -> String {
    let p = lexprob_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn cstrings(words: &[&str]) -> (Vec<CString>, Vec<*const c_char>) {
    let owned: Vec<CString> = words.iter().map(|w| CString::new(*w).unwrap()).collect();
    let ptrs = owned.iter().map(|c| c.as_ptr()).collect();
    (owned, ptrs)
}

#[test]
fn header_is_generated() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/lexprob.h")).unwrap();
    for name in ["lexprob_spec_load", "lexprob_score_word", "LEXPROB_STATUS_UNKNOWN_WORD", "typedef struct LexprobModel"] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn toy_first_word() {
    let h = Loaded::new();
    assert_eq!(unsafe { lexprob_spec_word_count(h.spec) }, 4);
    let word = CString::new("a").unwrap();
    let mut score = LexprobWordScore { logp_buggy: 0.0, log_correction: 0.0, logp_fixed: 0.0, applied_fix: LexprobFix::None };
    let status = unsafe { lexprob_score_word(h.model, h.spec, ptr::null(), 0, word.as_ptr(), &mut score) };
    assert_eq!(status, LexprobStatus::Ok);
    assert!((score.logp_buggy.exp() - 0.5).abs() < 1e-12);
    assert!((score.logp_fixed.exp() - 0.35).abs() < 1e-12);
    assert_eq!(score.applied_fix, LexprobFix::Fix1);
    assert!(lexprob_last_error().is_null());
}

#[test]
fn sentence_and_end() {
    let h = Loaded::new();
    let (_own, ptrs) = cstrings(&["a", "b"]);
    let mut whole = 0.0;
    let mut end = 0.0;
    let mut first = LexprobWordScore { logp_buggy: 0.0, log_correction: 0.0, logp_fixed: 0.0, applied_fix: LexprobFix::None };
    let mut second = first;
    unsafe {
        assert_eq!(lexprob_sentence_logprob(h.model, h.spec, ptrs.as_ptr(), 2, &mut whole), LexprobStatus::Ok);
        assert_eq!(lexprob_end_logprob(h.model, h.spec, ptrs.as_ptr(), 2, &mut end), LexprobStatus::Ok);
        assert_eq!(lexprob_score_word(h.model, h.spec, ptr::null(), 0, ptrs[0], &mut first), LexprobStatus::Ok);
        assert_eq!(lexprob_score_word(h.model, h.spec, ptrs.as_ptr(), 1, ptrs[1], &mut second), LexprobStatus::Ok);
    }
    assert!((first.logp_fixed + second.logp_fixed + end - whole).abs() < 1e-12);
}

#[test]
fn unknown_word_status() {
    let h = Loaded::new();
    let word = CString::new("zz").unwrap();
    let mut score = LexprobWordScore { logp_buggy: 0.0, log_correction: 0.0, logp_fixed: 0.0, applied_fix: LexprobFix::None };
    let status = unsafe { lexprob_score_word(h.model, h.spec, ptr::null(), 0, word.as_ptr(), &mut score) };
    assert_eq!(status, LexprobStatus::UnknownWord);
    assert!(last_error().contains("zz"));
}

#[test]
fn null_arguments() {
    let h = Loaded::new();
    let mut end = 0.0;
    assert_eq!(unsafe { lexprob_end_logprob(ptr::null(), h.spec, ptr::null(), 0, &mut end) }, LexprobStatus::NullArgument);
    assert_eq!(unsafe { lexprob_end_logprob(h.model, h.spec, ptr::null(), 0, ptr::null_mut()) }, LexprobStatus::NullArgument);
    assert_eq!(unsafe { lexprob_end_logprob(h.model, h.spec, ptr::null(), 2, &mut end) }, LexprobStatus::NullArgument);
    assert_eq!(unsafe { lexprob_spec_word_count(ptr::null()) }, 0);
    unsafe {
        lexprob_spec_free(ptr::null_mut());
        lexprob_model_free(ptr::null_mut());
    }
}

#[test]
fn invalid_utf8() {
    let h = Loaded::new();
    let bad = [0xffu8 as c_char, 0];
    let mut end = 0.0;
    let ctx = [bad.as_ptr()];
    assert_eq!(unsafe { lexprob_end_logprob(h.model, h.spec, ctx.as_ptr(), 1, &mut end) }, LexprobStatus::InvalidUtf8);
}

#[test]
fn missing_config() {
    let path = CString::new("/nonexistent/run.toml").unwrap();
    let mut spec = ptr::null_mut();
    assert_eq!(unsafe { lexprob_spec_load(path.as_ptr(), &mut spec) }, LexprobStatus::Load);
    assert!(spec.is_null());
    assert!(last_error().contains("/nonexistent/run.toml"));
}

#[test]
fn config_without_model() {
    let dir = tempfile::tempdir().unwrap();
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures");
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "vocab = \"{}\"\ntokeniser = \"{}\"\n",
            fixtures.join("toy_vocab.tsv").display(),
            fixtures.join("toy_tokeniser.tsv").display()
        ),
    )
    .unwrap();
    let cfg = CString::new(cfg.to_str().unwrap()).unwrap();
    let mut spec = ptr::null_mut();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(lexprob_spec_load(cfg.as_ptr(), &mut spec), LexprobStatus::Ok);
        assert_eq!(lexprob_model_load(cfg.as_ptr(), spec, &mut model), LexprobStatus::Load);
        assert!(model.is_null());
        lexprob_spec_free(spec);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/lexprob.h");
    let status = std::process::Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"]).arg(&header).status();
    match status {
        Ok(s) => assert!(s.success()),
        Err(e) => eprintln!("no C compiler, skipping: {e}"),
    }
}
