use super::*;
use crate::fixtures::{self, random_fixture, Shape};
use crate::lm::TabularLM;

fn words(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}

fn close(a: LogProb, p: f64) -> bool {
    (a.prob() - p).abs() < 1e-12
}

fn contexts(spec: &TokeniserSpec, max_words: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_words {
        let mut next = Vec::new();
        for c in &layer {
            for w in spec.lexicon() {
                let mut c2: Vec<String> = c.clone();
                c2.push(w.clone());
                next.push(c2);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn reachable(lm: &TabularLM, spec: &TokeniserSpec, ctx: &[String]) -> bool {
    let ids = context_ids(spec, ctx, Next::Plain).unwrap();
    !prefix_logprob(lm, &ids).unwrap().is_zero()
}

#[test]
fn toy_first_word() {
    let (lm, spec) = (fixtures::toy1_lm(), fixtures::toy1_spec());
    let s = word_conditional_bow(&lm, &spec, &[], "a").unwrap();
    assert!(close(s.p_buggy, 0.5));
    assert!((s.correction - 0.7f64.ln()).abs() < 1e-12);
    assert!(close(s.p_fixed, 0.35));
    assert_eq!(s.applied_fix, AppliedFix::Fix1);
    assert!((s.surprisal_fixed + 0.35f64.ln()).abs() < 1e-12);
}

#[test]
fn toy_sequence_and_prefix() {
    let (lm, spec) = (fixtures::toy1_lm(), fixtures::toy1_spec());
    assert!(close(sequence_logprob(&lm, &spec, &words(&["a"])).unwrap(), 0.15));
    assert!(close(prefix_logprob(&lm, &[0, 2]).unwrap(), 0.15));
    assert!(close(end_logprob(&lm, &spec, &words(&["a"])).unwrap(), 0.3 / 0.7));
}

#[test]
fn toy_first_position_sums_to_one() {
    let (lm, spec) = (fixtures::toy1_lm(), fixtures::toy1_spec());
    let total: f64 = spec
        .lexicon()
        .iter()
        .map(|w| word_conditional_bow(&lm, &spec, &[], w).unwrap().p_fixed.prob())
        .sum::<f64>()
        + end_logprob(&lm, &spec, &[]).unwrap().prob();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn buggy_bow_overcounts() {
    let (lm, spec) = (fixtures::toy1_lm(), fixtures::toy1_spec());
    let buggy: f64 =
        spec.lexicon().iter().map(|w| word_conditional_buggy(&lm, &spec, &[], w).unwrap().prob()).sum();
    assert!(buggy > 1.0 - 0.2 + 1e-3);
}

#[test]
fn first_word_without_mark() {
    let (lm, spec) = (fixtures::toy1_first_unmarked_lm(), fixtures::toy1_first_unmarked_spec());
    assert_eq!(word_conditional_bow(&lm, &spec, &[], "a"), Err(WordProbError::FirstWordNeedsFix3));
    let s = bugfix_bow_first(&lm, &spec, &[], "a").unwrap();
    // p(a|ε) = 0.6, then a boundary: 0.25 + 0.15 + 0.15, over the unmarked-or-eos mass at the start.
    assert!(close(s.p_buggy, 0.6));
    assert!(close(s.p_fixed, 0.6 * 0.55 / 1.0));
    assert_eq!(s.applied_fix, AppliedFix::Fix3);
    assert_eq!(
        bugfix_bow_first(&lm, &spec, &words(&["a"]), "b"),
        Err(WordProbError::NonEmptyContext)
    );
    let toy = fixtures::toy1_spec();
    assert!(matches!(
        bugfix_bow_first(&lm, &toy, &[], "a"),
        Err(WordProbError::SchemeMismatch { .. })
    ));
}

#[test]
fn scheme_checks() {
    let lm = fixtures::toy1_lm();
    let eow = fixtures::eow_toy_spec();
    let bow = fixtures::toy1_spec();
    assert!(matches!(word_conditional_bow(&lm, &eow, &[], "a"), Err(WordProbError::SchemeMismatch { .. })));
    assert!(matches!(word_conditional_eow(&lm, &bow, &[], "a"), Err(WordProbError::SchemeMismatch { .. })));
    assert!(matches!(bugfix_eow_final(&lm, &eow, &[], "a"), Err(WordProbError::SchemeMismatch { .. })));
    assert!(matches!(
        word_conditional_bow(&lm, &bow, &[], "zz"),
        Err(WordProbError::Tokeniser(TokeniserError::UnknownWord { .. }))
    ));
}

#[test]
fn eow_marked_is_plain_product() {
    let spec = fixtures::eow_toy_spec();
    let lm = crate::lm::random_exact_lm(3, &spec, 2).unwrap();
    for ctx in contexts(&spec, 2) {
        for w in spec.lexicon() {
            let s = score_word(&lm, &spec, &ctx, w, Form::Marked, Dispatch::Auto).unwrap();
            assert_eq!(s.p_buggy, s.p_fixed);
            assert_eq!(s.correction, 0.0);
            assert_eq!(s.applied_fix, AppliedFix::None);
        }
    }
}

fn assert_normalised(lm: &TabularLM, spec: &TokeniserSpec, max_ctx: usize, tag: &str) {
    for ctx in contexts(spec, max_ctx) {
        if !reachable(lm, spec, &ctx) {
            continue;
        }
        let mut total = end_logprob(lm, spec, &ctx).unwrap().prob();
        for w in spec.lexicon() {
            let form = Form::Marked;
            total += score_word(lm, spec, &ctx, w, form, Dispatch::Auto).unwrap().p_fixed.prob();
        }
        assert!((total - 1.0).abs() < 1e-9, "{tag}: context {ctx:?} sums to {total}");
    }
}

#[test]
fn corrected_conditionals_are_normalised() {
    for seed in 0..12 {
        for scheme in [Scheme::Bow, Scheme::Eow] {
            for shape in [Shape::random(seed, scheme), Shape::random_unmarked(seed, scheme)] {
                let fx = random_fixture(seed, shape);
                assert_normalised(&fx.lm, &fx.spec, 2, &format!("{shape:?} seed {seed}"));
            }
        }
    }
}

#[test]
fn question_word_after_unmarked_context() {
    let spec = fixtures::eow_final_unmarked_spec();
    let lm = crate::lm::random_exact_lm(1, &spec, 2).unwrap();
    assert_normalised(&lm, &spec, 3, "eow unmarked");
    let s = bugfix_eow_final(&lm, &spec, &words(&["a"]), "?").unwrap();
    assert_eq!(s.applied_fix, AppliedFix::Fix2);
    assert!(s.p_fixed.prob() > 0.0);
}

#[test]
fn corrections_telescope_to_the_sentence() {
    for seed in 0..10 {
        for scheme in [Scheme::Bow, Scheme::Eow] {
            for shape in [Shape::random(seed, scheme), Shape::random_unmarked(seed, scheme)] {
                let fx = random_fixture(seed, shape);
                let sentences: Vec<Vec<String>> =
                    contexts(&fx.spec, 3).into_iter().filter(|s| !s.is_empty()).collect();
                let scores = score_corpus(&fx.lm, &fx.spec, &sentences, Dispatch::Auto).unwrap();
                assert!(scores.skipped.is_empty());
                for (s, sentence) in sentences.iter().enumerate() {
                    let whole = sequence_logprob(&fx.lm, &fx.spec, sentence).unwrap();
                    if whole.is_zero() {
                        continue;
                    }
                    let parts: f64 = scores.rows.iter().filter(|r| r.sentence == s).map(|r| r.scored.p_fixed.value()).sum();
                    let end = end_logprob(&fx.lm, &fx.spec, sentence).unwrap();
                    assert!(
                        (parts + end.value() - whole.value()).abs() < 1e-9,
                        "{shape:?}: {sentence:?}"
                    );
                }
            }
        }
    }
}

#[test]
fn dropping_a_fix_reports_the_product() {
    let (lm, spec) = (fixtures::toy1_lm(), fixtures::toy1_spec());
    let s = score_word(&lm, &spec, &[], "a", Form::Marked, Dispatch::Without(AppliedFix::Fix1)).unwrap();
    assert!(close(s.p_fixed, 0.5));
    assert_eq!(s.applied_fix, AppliedFix::None);
    let kept = score_word(&lm, &spec, &[], "a", Form::Marked, Dispatch::Without(AppliedFix::Fix3)).unwrap();
    assert!(close(kept.p_fixed, 0.35));
}

#[test]
fn corpus_skips_unknown_words() {
    let (lm, spec) = (fixtures::toy1_lm(), fixtures::toy1_spec());
    let sentences = vec![words(&["a", "b"]), words(&["a", "zz"]), words(&["bc"])];
    let scores = score_corpus(&lm, &spec, &sentences, Dispatch::Auto).unwrap();
    assert_eq!(scores.rows.len(), 3);
    assert_eq!(scores.skipped.len(), 1);
    assert_eq!(scores.skipped[0].0, 1);
    assert_eq!(scores.rows[1].scored.context_words, words(&["a"]));
    assert_eq!(scores.rows[2].sentence, 2);
}

#[test]
fn fix_names_round_trip() {
    for f in [AppliedFix::None, AppliedFix::Fix1, AppliedFix::Fix2, AppliedFix::Fix3] {
        assert_eq!(AppliedFix::parse(&f.to_string()), Some(f));
    }
    assert_eq!(AppliedFix::parse("fix4"), None);
}
