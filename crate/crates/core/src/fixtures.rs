//! Small hand-built and seeded vocabularies, lexicons and models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lm::{random_exact_lm, TabularLM};
use crate::tokeniser::{BoundaryFlags, TokeniserSpec};
use crate::vocab::{Id, MarkedVocabulary, Role, Scheme, Subword};

fn entry(word: &str, marked: &[Id], mid: Option<&[Id]>) -> (String, Vec<Id>, Option<Vec<Id>>) {
    (word.to_string(), marked.to_vec(), mid.map(<[Id]>::to_vec))
}

/// `_a`, `_b` (bow) and `c` (mid).
pub fn toy1_vocab() -> MarkedVocabulary {
    MarkedVocabulary::new(
        vec![Subword::new(0, "_a", Role::Bow), Subword::new(1, "_b", Role::Bow), Subword::new(2, "c", Role::Mid)],
        Scheme::Bow,
        [],
    )
    .expect("valid vocabulary")
}

/// Lexicon {a, b, ac, bc} over [`toy1_vocab`], every word marked.
pub fn toy1_spec() -> TokeniserSpec {
    TokeniserSpec::new(
        toy1_vocab(),
        vec![entry("a", &[0], None), entry("b", &[1], None), entry("ac", &[0, 2], None), entry("bc", &[1, 2], None)],
        BoundaryFlags::default(),
    )
    .expect("valid lexicon")
}

pub const TOY1_LM_TSV: &str = "\
#order\t2
#exact\ttrue
ε\t0\t0.5
ε\t1\t0.3
ε\tEOS\t0.2
0\t0\t0.2
0\t1\t0.2
0\t2\t0.3
0\tEOS\t0.3
1\t0\t0.3
1\t1\t0.1
1\t2\t0.4
1\tEOS\t0.2
2\t0\t0.4
2\t1\t0.35
2\tEOS\t0.25
";

/// Exact order-2 model over [`toy1_spec`] with four stored contexts.
pub fn toy1_lm() -> TabularLM {
    TabularLM::parse(TOY1_LM_TSV, "toy1", 4).expect("valid table")
}

/// [`toy1_vocab`] plus unmarked copies `a` (3) and `b` (4) of the bow
/// subwords, with the first word of a sentence left unmarked.
pub fn toy1_first_unmarked_spec() -> TokeniserSpec {
    let vocab = MarkedVocabulary::new(
        vec![
            Subword::new(0, "_a", Role::Bow),
            Subword::new(1, "_b", Role::Bow),
            Subword::new(2, "c", Role::Mid),
            Subword::new(3, "a", Role::Mid),
            Subword::new(4, "b", Role::Mid),
        ],
        Scheme::Bow,
        [],
    )
    .expect("valid vocabulary");
    TokeniserSpec::new(
        vocab,
        vec![
            entry("a", &[0], Some(&[3])),
            entry("b", &[1], Some(&[4])),
            entry("ac", &[0, 2], Some(&[3, 2])),
            entry("bc", &[1, 2], Some(&[4, 2])),
        ],
        BoundaryFlags { mark_first_word: false, mark_final_word: true },
    )
    .expect("valid lexicon")
}

pub const TOY1_FIRST_UNMARKED_LM_TSV: &str = "\
#order\t2
#exact\ttrue
ε\t3\t0.6
ε\t4\t0.3
ε\tEOS\t0.1
0\t0\t0.2
0\t1\t0.2
0\t2\t0.3
0\tEOS\t0.3
1\t0\t0.3
1\t1\t0.1
1\t2\t0.4
1\tEOS\t0.2
2\t0\t0.4
2\t1\t0.35
2\tEOS\t0.25
3\t0\t0.25
3\t1\t0.15
3\t2\t0.45
3\tEOS\t0.15
4\t0\t0.1
4\t1\t0.5
4\t2\t0.2
4\tEOS\t0.2
";

pub fn toy1_first_unmarked_lm() -> TabularLM {
    TabularLM::parse(TOY1_FIRST_UNMARKED_LM_TSV, "toy1-first-unmarked", 6).expect("valid table")
}

/// `a_`, `b_` (eow) and `c` (mid); lexicon {a, b, ca}.
pub fn eow_toy_spec() -> TokeniserSpec {
    let vocab = MarkedVocabulary::new(
        vec![Subword::new(0, "a_", Role::Eow), Subword::new(1, "b_", Role::Eow), Subword::new(2, "c", Role::Mid)],
        Scheme::Eow,
        [],
    )
    .expect("valid vocabulary");
    TokeniserSpec::new(
        vocab,
        vec![entry("a", &[0], None), entry("b", &[1], None), entry("ca", &[2, 0], None)],
        BoundaryFlags::default(),
    )
    .expect("valid lexicon")
}

/// Eow lexicon {a, b, ca, ?} whose sentence-final words, and words right
/// before `?`, are written without the end marker. Punctuation ids: `?_` (5)
/// and `?` (6).
pub fn eow_final_unmarked_spec() -> TokeniserSpec {
    let vocab = MarkedVocabulary::new(
        vec![
            Subword::new(0, "a_", Role::Eow),
            Subword::new(1, "b_", Role::Eow),
            Subword::new(2, "c", Role::Mid),
            Subword::new(3, "a", Role::Mid),
            Subword::new(4, "b", Role::Mid),
            Subword::new(5, "?_", Role::Eow),
            Subword::new(6, "?", Role::Mid),
        ],
        Scheme::Eow,
        [5, 6],
    )
    .expect("valid vocabulary");
    TokeniserSpec::new(
        vocab,
        vec![
            entry("a", &[0], Some(&[3])),
            entry("b", &[1], Some(&[4])),
            entry("ca", &[2, 0], Some(&[2, 3])),
            entry("?", &[5], Some(&[6])),
        ],
        BoundaryFlags { mark_first_word: true, mark_final_word: false },
    )
    .expect("valid lexicon")
}

/// The example question with an eow vocabulary whose unmarked forms are used
/// before `'s` and `?` and at the end.
pub fn question_eow_spec() -> TokeniserSpec {
    let rows: [(&str, Role); 15] = [
        ("How_", Role::Eow),
        ("do_", Role::Eow),
        ("you_", Role::Eow),
        ("comp", Role::Mid),
        ("ute_", Role::Eow),
        ("a_", Role::Eow),
        ("word_", Role::Eow),
        ("word", Role::Mid),
        ("'s_", Role::Eow),
        ("'s", Role::Mid),
        ("prob", Role::Mid),
        ("ability_", Role::Eow),
        ("ability", Role::Mid),
        ("?_", Role::Eow),
        ("?", Role::Mid),
    ];
    let subwords = rows.iter().enumerate().map(|(i, (s, r))| Subword::new(i as Id, *s, *r)).collect();
    let vocab = MarkedVocabulary::new(subwords, Scheme::Eow, [8, 9, 13, 14]).expect("valid vocabulary");
    TokeniserSpec::new(
        vocab,
        vec![
            entry("How", &[0], None),
            entry("do", &[1], None),
            entry("you", &[2], None),
            entry("compute", &[3, 4], None),
            entry("a", &[5], None),
            entry("word", &[6], Some(&[7])),
            entry("'s", &[8], Some(&[9])),
            entry("probability", &[10, 11], Some(&[10, 12])),
            entry("?", &[13], Some(&[14])),
        ],
        BoundaryFlags { mark_first_word: true, mark_final_word: false },
    )
    .expect("valid lexicon")
}

/// The example question with a bow vocabulary whose first word is unmarked.
pub fn question_bow_spec() -> TokeniserSpec {
    let rows: [(&str, Role); 12] = [
        ("How", Role::Mid),
        ("_How", Role::Bow),
        ("_do", Role::Bow),
        ("_you", Role::Bow),
        ("_comp", Role::Bow),
        ("ute", Role::Mid),
        ("_a", Role::Bow),
        ("_word", Role::Bow),
        ("_'s", Role::Bow),
        ("_prob", Role::Bow),
        ("ability", Role::Mid),
        ("_?", Role::Bow),
    ];
    let subwords = rows.iter().enumerate().map(|(i, (s, r))| Subword::new(i as Id, *s, *r)).collect();
    let vocab = MarkedVocabulary::new(subwords, Scheme::Bow, []).expect("valid vocabulary");
    TokeniserSpec::new(
        vocab,
        vec![
            entry("How", &[1], Some(&[0])),
            entry("do", &[2], None),
            entry("you", &[3], None),
            entry("compute", &[4, 5], None),
            entry("a", &[6], None),
            entry("word", &[7], None),
            entry("'s", &[8], None),
            entry("probability", &[9, 10], None),
            entry("?", &[11], None),
        ],
        BoundaryFlags { mark_first_word: false, mark_final_word: true },
    )
    .expect("valid lexicon")
}

/// Parameters of a generated lexicon: every word is one marked subword plus
/// up to `max_mids` plain mid subwords, in every combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shape {
    pub scheme: Scheme,
    pub n_marked: usize,
    pub n_mid: usize,
    pub max_mids: usize,
    pub order: usize,
    /// Unmarked first words (bow) or unmarked final words plus a `?` word (eow).
    pub unmarked_boundary: bool,
}

impl Shape {
    /// A seeded shape with at most 8 subwords and at most 8 words.
    pub fn random(seed: u64, scheme: Scheme) -> Shape {
        Self::pick(seed, scheme, false)
    }

    pub fn random_unmarked(seed: u64, scheme: Scheme) -> Shape {
        Self::pick(seed, scheme, true)
    }

    fn pick(seed: u64, scheme: Scheme, unmarked_boundary: bool) -> Shape {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
        loop {
            let order = rng.gen_range(1..=2);
            let n_marked = rng.gen_range(1..=3);
            let n_mid = rng.gen_range(1..=2);
            let max_mids = rng.gen_range(1..=order);
            let shape = Shape { scheme, n_marked, n_mid, max_mids, order, unmarked_boundary };
            if shape.vocab_size() <= 8 && shape.word_count() <= 8 {
                return shape;
            }
        }
    }

    pub fn vocab_size(&self) -> usize {
        let extra = match (self.unmarked_boundary, self.scheme) {
            (false, _) => 0,
            (true, Scheme::Bow) => self.n_marked,
            (true, Scheme::Eow) => self.n_marked + 2,
        };
        self.n_marked + self.n_mid + extra
    }

    pub fn word_count(&self) -> usize {
        let tails: usize = (0..=self.max_mids).map(|j| self.n_mid.pow(j as u32)).sum();
        self.n_marked * tails + usize::from(self.unmarked_boundary && self.scheme == Scheme::Eow)
    }
}

pub struct Fixture {
    pub shape: Shape,
    pub spec: TokeniserSpec,
    pub lm: TabularLM,
}

const HEADS: &str = "abcdefgh";
const TAILS: &str = "pqrstuvw";

/// Builds the lexicon for `shape` and a seeded exact model over it.
pub fn random_fixture(seed: u64, shape: Shape) -> Fixture {
    let spec = shaped_spec(shape);
    let lm = random_exact_lm(seed, &spec, shape.order).expect("generated lexicons fit their order");
    Fixture { shape, spec, lm }
}

pub fn shaped_spec(shape: Shape) -> TokeniserSpec {
    let marked_role = shape.scheme.marked_role();
    let mut subwords = Vec::new();
    let mut push = |surface: String, role: Role| {
        let id = subwords.len() as Id;
        subwords.push(Subword::new(id, surface, role));
        id
    };
    let heads: Vec<char> = HEADS.chars().take(shape.n_marked).collect();
    let marked: Vec<Id> = heads
        .iter()
        .map(|h| match shape.scheme {
            Scheme::Bow => push(format!("_{h}"), marked_role),
            Scheme::Eow => push(format!("{h}_"), marked_role),
        })
        .collect();
    let mids: Vec<(char, Id)> =
        TAILS.chars().take(shape.n_mid).map(|t| (t, push(t.to_string(), Role::Mid))).collect();
    let plain: Vec<Id> = if shape.unmarked_boundary {
        heads.iter().map(|h| push(h.to_string(), Role::Mid)).collect()
    } else {
        Vec::new()
    };
    let mut punct = Vec::new();
    let mut question = None;
    if shape.unmarked_boundary && shape.scheme == Scheme::Eow {
        let q_marked = push("?_".into(), Role::Eow);
        let q_plain = push("?".into(), Role::Mid);
        punct = vec![q_marked, q_plain];
        question = Some((q_marked, q_plain));
    }
    let vocab = MarkedVocabulary::new(subwords, shape.scheme, punct).expect("generated vocabulary is valid");

    let mut tails: Vec<Vec<(char, Id)>> = vec![Vec::new()];
    let mut layer: Vec<Vec<(char, Id)>> = vec![Vec::new()];
    for _ in 0..shape.max_mids {
        let mut next = Vec::new();
        for t in &layer {
            for &m in &mids {
                let mut t2 = t.clone();
                t2.push(m);
                next.push(t2);
            }
        }
        tails.extend(next.iter().cloned());
        layer = next;
    }
    let mut entries = Vec::new();
    for (i, h) in heads.iter().enumerate() {
        for tail in &tails {
            let tail_text: String = tail.iter().map(|(c, _)| *c).collect();
            let tail_ids: Vec<Id> = tail.iter().map(|(_, id)| *id).collect();
            let (word, img, mid) = match shape.scheme {
                Scheme::Bow => {
                    let img = [vec![marked[i]], tail_ids.clone()].concat();
                    let mid = shape.unmarked_boundary.then(|| [vec![plain[i]], tail_ids.clone()].concat());
                    (format!("{h}{tail_text}"), img, mid)
                }
                Scheme::Eow => {
                    let img = [tail_ids.clone(), vec![marked[i]]].concat();
                    let mid = shape.unmarked_boundary.then(|| [tail_ids.clone(), vec![plain[i]]].concat());
                    (format!("{tail_text}{h}"), img, mid)
                }
            };
            entries.push((word, img, mid));
        }
    }
    if let Some((q_marked, q_plain)) = question {
        entries.push(("?".to_string(), vec![q_marked], Some(vec![q_plain])));
    }
    let flags = match (shape.unmarked_boundary, shape.scheme) {
        (true, Scheme::Bow) => BoundaryFlags { mark_first_word: false, mark_final_word: true },
        (true, Scheme::Eow) => BoundaryFlags { mark_first_word: true, mark_final_word: false },
        _ => BoundaryFlags::default(),
    };
    TokeniserSpec::new(vocab, entries, flags).expect("generated lexicon is valid")
}
