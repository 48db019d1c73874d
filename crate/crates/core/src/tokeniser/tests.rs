use super::*;
use crate::fixtures;
use proptest::prelude::*;

fn words(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}

const QUESTION: &str = "How do you compute a word's probability?";

#[test]
fn question_eow_row() {
    let spec = fixtures::question_eow_spec();
    let ws = pretokenise(QUESTION, &SegmentationRules::default());
    let ids = spec.tokenise_sequence(&ws).unwrap();
    assert_eq!(ids.len(), 11);
    assert_eq!(spec.render(&ids), "How_ do_ you_ comp ute_ a_ word 's_ prob ability ?");
    assert_eq!(spec.detokenise(&ids).unwrap(), ws);
}

#[test]
fn question_bow_first_word_unmarked() {
    let spec = fixtures::question_bow_spec();
    assert_eq!(spec.render(&spec.tokenise_word("How", Position::First).unwrap()), "How");
    assert_eq!(spec.render(&spec.tokenise_word("How", Position::Medial).unwrap()), "_How");
    let ws = pretokenise(QUESTION, &SegmentationRules::default());
    let ids = spec.tokenise_sequence(&ws).unwrap();
    assert_eq!(spec.render(&ids), "How _do _you _comp ute _a _word _'s _prob ability _?");
    assert_eq!(spec.detokenise(&ids).unwrap(), ws);
}

#[test]
fn medial_word_is_marked() {
    let spec = fixtures::question_eow_spec();
    assert_eq!(spec.render(&spec.tokenise_word("probability", Position::Medial).unwrap()), "prob ability_");
    assert_eq!(spec.render(&spec.tokenise_word("probability", Position::Final).unwrap()), "prob ability");
}

#[test]
fn unknown_word() {
    let spec = fixtures::toy1_spec();
    assert_eq!(
        spec.tokenise_word("zzz", Position::Medial),
        Err(TokeniserError::UnknownWord { word: "zzz".into(), index: None })
    );
    assert_eq!(
        spec.tokenise_sequence(&words(&["a", "zzz"])),
        Err(TokeniserError::UnknownWord { word: "zzz".into(), index: Some(1) })
    );
}

#[test]
fn toy_sequences() {
    let spec = fixtures::toy1_spec();
    assert_eq!(spec.tokenise_sequence(&words(&["a", "ac"])).unwrap(), vec![0, 0, 2]);
    assert!(spec.tokenise_sequence(&[]).unwrap().is_empty());
    assert!(spec.detokenise(&[]).unwrap().is_empty());
    assert_eq!(spec.detokenise(&[0, 2, 1, 3]).unwrap(), words(&["ac", "b"]));
}

#[test]
fn leading_mid_subword_is_unmapped() {
    let spec = fixtures::toy1_spec();
    assert_eq!(spec.detokenise(&[2, 0]), Err(TokeniserError::UnmappedSequence(vec![2, 0])));
    assert_eq!(spec.detokenise(&[0, 2, 2]), Err(TokeniserError::UnmappedSequence(vec![0, 2, 2])));
}

#[test]
fn eow_is_instantaneous() {
    assert_eq!(fixtures::eow_toy_spec().certify_decodability(3).unwrap(), Decodability::Instantaneous);
}

#[test]
fn bow_is_near_instantaneous() {
    let spec = fixtures::toy1_spec();
    match spec.certify_decodability(3).unwrap() {
        Decodability::NearInstantaneous { prefix, word, confirms, diverts } => {
            assert_eq!(prefix, vec![0]);
            assert_eq!(word, "a");
            assert!([0, 1, 3].contains(&confirms));
            assert_eq!(diverts, 2);
            assert_eq!(spec.detokenise(&[0, 1]).unwrap()[0], "a");
            assert_eq!(spec.detokenise(&[0, 2]).unwrap()[0], "ac");
        }
        other => panic!("expected a witness, got {other:?}"),
    }
}

#[test]
fn unmarked_final_words_are_near_instantaneous() {
    let vocab = MarkedVocabulary::new(
        vec![
            crate::vocab::Subword::new(0, "c_", Role::Eow),
            crate::vocab::Subword::new(1, "a_", Role::Eow),
            crate::vocab::Subword::new(2, "c", Role::Mid),
            crate::vocab::Subword::new(3, "a", Role::Mid),
        ],
        Scheme::Eow,
        [],
    )
    .unwrap();
    let entries = vec![
        ("c".to_string(), vec![0], Some(vec![2])),
        ("ca".to_string(), vec![2, 1], Some(vec![2, 3])),
        ("a".to_string(), vec![1], Some(vec![3])),
    ];
    let flags = BoundaryFlags { mark_first_word: true, mark_final_word: false };
    let spec = TokeniserSpec::new(vocab, entries, flags).unwrap();
    assert_eq!(
        spec.certify_decodability(3).unwrap(),
        Decodability::NearInstantaneous { prefix: vec![2], word: "c".into(), confirms: 4, diverts: 1 }
    );
    // No unmarked image here is a proper prefix of another image.
    assert_eq!(fixtures::eow_final_unmarked_spec().certify_decodability(3).unwrap(), Decodability::Instantaneous);
}

#[test]
fn colliding_images() {
    let vocab = fixtures::toy1_vocab();
    let entries = vec![("a".to_string(), vec![0], None), ("x".to_string(), vec![0], None)];
    assert!(matches!(
        TokeniserSpec::new(vocab, entries, BoundaryFlags::default()),
        Err(TokeniserError::NotUniquelyDecodable { .. })
    ));
}

#[test]
fn shape_violations() {
    let vocab = fixtures::toy1_vocab();
    let entries = vec![("c".to_string(), vec![2], None)];
    assert!(matches!(
        TokeniserSpec::new(vocab.clone(), entries, BoundaryFlags::default()),
        Err(TokeniserError::Shape { .. })
    ));
    let flags = BoundaryFlags { mark_first_word: true, mark_final_word: false };
    assert!(matches!(TokeniserSpec::new(vocab, vec![], flags), Err(TokeniserError::UnsupportedFlags(_))));
}

#[test]
fn file_round_trip() {
    let spec = fixtures::toy1_first_unmarked_spec();
    let again = TokeniserSpec::from_tsv(&spec.to_tsv(), "mem", spec.vocab().clone(), spec.flags()).unwrap();
    assert_eq!(again.lexicon(), spec.lexicon());
    for w in spec.lexicon() {
        assert_eq!(again.marked_image(w), spec.marked_image(w));
        assert_eq!(again.mid_image(w), spec.mid_image(w));
    }
}

fn all_sequences(spec: &TokeniserSpec, max_len: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &layer {
            for w in spec.lexicon() {
                let mut s2 = s.clone();
                s2.push(w.clone());
                next.push(s2);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn specs() -> Vec<TokeniserSpec> {
    vec![
        fixtures::toy1_spec(),
        fixtures::toy1_first_unmarked_spec(),
        fixtures::eow_toy_spec(),
        fixtures::eow_final_unmarked_spec(),
    ]
}

#[test]
fn exhaustive_round_trip_and_injectivity() {
    for spec in specs() {
        let mut seen = std::collections::HashMap::new();
        for ws in all_sequences(&spec, 4) {
            let Ok(ids) = spec.tokenise_sequence(&ws) else { continue };
            assert_eq!(spec.detokenise(&ids).unwrap(), ws);
            if let Some(prev) = seen.insert(ids.clone(), ws.clone()) {
                panic!("{prev:?} and {ws:?} share {ids:?}");
            }
        }
    }
}

#[test]
fn segments_have_the_scheme_shape() {
    let spec = fixtures::toy1_spec();
    for ws in all_sequences(&spec, 3) {
        for (i, w) in ws.iter().enumerate() {
            let seg = spec.tokenise_word(w, spec.position_in(&ws, i)).unwrap();
            assert!(spec.vocab().is_marked(seg[0]));
            assert!(seg[1..].iter().all(|&id| spec.vocab().is_mid(id)));
        }
    }
    let spec = fixtures::eow_toy_spec();
    for ws in all_sequences(&spec, 3) {
        for (i, w) in ws.iter().enumerate() {
            let seg = spec.tokenise_word(w, spec.position_in(&ws, i)).unwrap();
            let (last, init) = seg.split_last().unwrap();
            assert!(spec.vocab().is_marked(*last));
            assert!(init.iter().all(|&id| spec.vocab().is_mid(id)));
        }
    }
}

#[test]
fn first_word_override_touches_only_the_first_segment() {
    let marked = fixtures::toy1_spec();
    let unmarked = fixtures::toy1_first_unmarked_spec();
    for ws in all_sequences(&marked, 3).into_iter().filter(|w| !w.is_empty()) {
        let segs = |spec: &TokeniserSpec| -> Vec<Vec<Id>> {
            ws.iter()
                .enumerate()
                .map(|(i, w)| spec.tokenise_word(w, spec.position_in(&ws, i)).unwrap())
                .collect()
        };
        let (a, b) = (segs(&marked), segs(&unmarked));
        assert_ne!(a[0], b[0]);
        assert_eq!(a[1..], b[1..]);
    }
}

proptest! {
    #[test]
    fn random_round_trip(picks in prop::collection::vec(0usize..4, 0..8), which in 0usize..4) {
        let spec = &specs()[which];
        let ws: Vec<String> = picks.iter().map(|&i| spec.lexicon()[i % spec.lexicon().len()].clone()).collect();
        let ids = spec.tokenise_sequence(&ws).unwrap();
        prop_assert_eq!(spec.detokenise(&ids).unwrap(), ws);
    }
}
