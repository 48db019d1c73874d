//! Segmentation-aware tokenisation over a closed lexicon.
//!
//! Every word has a marked image (`word_map`) and optionally an unmarked
//! image built only from mid subwords (`mid_map`). Two boundary regimes swap
//! the marked image for the unmarked one:
//!
//! * `bow` with `mark_first_word = false`: the first word of a sentence.
//! * `eow` with `mark_final_word = false`: the last word of a sentence, and
//!   any word directly followed by a word that starts with a punctuation-class
//!   subword.
//!
//! Decoding is done by [`parse::Parser`], which tracks every reading of a
//! prefix, so unmapped sequences and ambiguities surface as errors instead of
//! guesses.

pub mod parse;
pub mod segment;

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::vocab::{Id, MarkedVocabulary, Role, Scheme};
pub use parse::{ParseState, Parser, Pending};
pub use segment::{normalise, pretokenise, SegmentationRules};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Form {
    Marked,
    Mid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    First,
    Medial,
    Final,
}

#[derive(Debug, Error, PartialEq)]
pub enum TokeniserError {
    #[error("word `{word}` is not in the lexicon{}", at_index(*.index))]
    UnknownWord { word: String, index: Option<usize> },
    #[error("subword sequence {0:?} is not the tokenisation of any word sequence")]
    UnmappedSequence(Vec<Id>),
    #[error("ids {ids:?} decode both as {first:?} and as {second:?}")]
    NotUniquelyDecodable { ids: Vec<Id>, first: Vec<String>, second: Vec<String> },
    #[error("word `{word}`: {reason}")]
    Shape { word: String, reason: String },
    #[error("unsupported boundary flags: {0}")]
    UnsupportedFlags(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

fn at_index(index: Option<usize>) -> String {
    index.map(|i| format!(" (word {i})")).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFlags {
    pub mark_first_word: bool,
    pub mark_final_word: bool,
}

impl Default for BoundaryFlags {
    fn default() -> Self {
        BoundaryFlags { mark_first_word: true, mark_final_word: true }
    }
}

#[derive(Debug, Clone)]
pub struct TokeniserSpec {
    vocab: MarkedVocabulary,
    words: Vec<String>,
    index: HashMap<String, usize>,
    marked: Vec<Vec<Id>>,
    mid: Vec<Option<Vec<Id>>>,
    flags: BoundaryFlags,
    starts: HashMap<(Form, Id), Vec<usize>>,
    forms_first: Vec<Form>,
    forms_rest: Vec<Form>,
}

/// Outcome of [`TokeniserSpec::certify_decodability`].
#[derive(Debug, Clone, PartialEq)]
pub enum Decodability {
    /// A word is fixed as soon as its last subword is read.
    Instantaneous,
    /// Reading `prefix` (one whole word) leaves that word open: continuing
    /// with `confirms` decodes it, continuing with `diverts` does not.
    NearInstantaneous { prefix: Vec<Id>, word: String, confirms: Id, diverts: Id },
}

impl TokeniserSpec {
    /// `entries` are (word, marked image, unmarked image).
    pub fn new(
        vocab: MarkedVocabulary,
        entries: Vec<(String, Vec<Id>, Option<Vec<Id>>)>,
        flags: BoundaryFlags,
    ) -> Result<Self, TokeniserError> {
        let scheme = vocab.scheme();
        if scheme == Scheme::Bow && !flags.mark_final_word {
            return Err(TokeniserError::UnsupportedFlags(
                "unmarked final words with a bow scheme".into(),
            ));
        }
        if scheme == Scheme::Eow && !flags.mark_first_word {
            return Err(TokeniserError::UnsupportedFlags(
                "unmarked first words with an eow scheme".into(),
            ));
        }
        let mut words = Vec::new();
        let mut index = HashMap::new();
        let mut marked = Vec::new();
        let mut mid = Vec::new();
        for (word, img, mid_img) in entries {
            if index.insert(word.clone(), words.len()).is_some() {
                return Err(TokeniserError::Shape { word, reason: "listed twice".into() });
            }
            check_marked_shape(&vocab, &word, &img)?;
            if let Some(m) = &mid_img {
                if m.is_empty() || !m.iter().all(|&id| vocab.is_mid(id)) {
                    return Err(TokeniserError::Shape {
                        word,
                        reason: "unmarked image must be a non-empty run of mid subwords".into(),
                    });
                }
                if vocab.is_punct(img[0]) != vocab.is_punct(m[0]) {
                    return Err(TokeniserError::Shape {
                        word,
                        reason: "marked and unmarked images disagree on starting with punctuation".into(),
                    });
                }
            }
            words.push(word);
            marked.push(img);
            mid.push(mid_img);
        }
        for form in [Form::Marked, Form::Mid] {
            let mut seen: HashMap<&[Id], usize> = HashMap::new();
            for w in 0..words.len() {
                let img = match form {
                    Form::Marked => Some(marked[w].as_slice()),
                    Form::Mid => mid[w].as_deref(),
                };
                let Some(img) = img else { continue };
                if let Some(&other) = seen.get(img) {
                    return Err(TokeniserError::NotUniquelyDecodable {
                        ids: img.to_vec(),
                        first: vec![words[other].clone()],
                        second: vec![words[w].clone()],
                    });
                }
                seen.insert(img, w);
            }
        }
        let mut starts: HashMap<(Form, Id), Vec<usize>> = HashMap::new();
        for (w, img) in marked.iter().enumerate() {
            starts.entry((Form::Marked, img[0])).or_default().push(w);
        }
        for (w, img) in mid.iter().enumerate() {
            if let Some(img) = img {
                starts.entry((Form::Mid, img[0])).or_default().push(w);
            }
        }
        let (forms_first, forms_rest) = match (scheme, flags.mark_first_word, flags.mark_final_word) {
            (Scheme::Bow, false, _) => (vec![Form::Mid], vec![Form::Marked]),
            (Scheme::Eow, _, false) => (vec![Form::Marked, Form::Mid], vec![Form::Marked, Form::Mid]),
            _ => (vec![Form::Marked], vec![Form::Marked]),
        };
        Ok(TokeniserSpec { vocab, words, index, marked, mid, flags, starts, forms_first, forms_rest })
    }

    /// Reads `word<TAB>ids` lines, then a `#mid` line, then unmarked images.
    pub fn load(path: &Path, vocab: MarkedVocabulary, flags: BoundaryFlags) -> Result<Self, TokeniserError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|e| TokeniserError::Io { path: shown.clone(), msg: e.to_string() })?;
        Self::from_tsv(&text, &shown, vocab, flags)
    }

    pub fn from_tsv(
        text: &str,
        source: &str,
        vocab: MarkedVocabulary,
        flags: BoundaryFlags,
    ) -> Result<Self, TokeniserError> {
        let err = |line: usize, msg: String| TokeniserError::Parse { path: source.to_string(), line, msg };
        let mut entries: Vec<(String, Vec<Id>, Option<Vec<Id>>)> = Vec::new();
        let mut in_mid = false;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            if line.trim() == "#mid" {
                in_mid = true;
                continue;
            }
            let (word, ids) = line.split_once('\t').ok_or_else(|| err(line_no, "expected `word<TAB>ids`".into()))?;
            let ids: Vec<Id> = ids
                .split(',')
                .map(|s| s.trim().parse::<Id>())
                .collect::<Result<_, _>>()
                .map_err(|e| err(line_no, e.to_string()))?;
            if let Some(&bad) = ids.iter().find(|&&id| !vocab.contains(id)) {
                return Err(err(line_no, format!("id {bad} is not in the vocabulary")));
            }
            if in_mid {
                let entry = entries
                    .iter_mut()
                    .find(|e| e.0 == word)
                    .ok_or_else(|| err(line_no, format!("unmarked image for unlisted word `{word}`")))?;
                entry.2 = Some(ids);
            } else {
                entries.push((word.to_string(), ids, None));
            }
        }
        Self::new(vocab, entries, flags)
    }

    pub fn to_tsv(&self) -> String {
        let join = |ids: &[Id]| ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        for (w, img) in self.words.iter().zip(&self.marked) {
            out.push_str(&format!("{w}\t{}\n", join(img)));
        }
        if self.mid.iter().any(Option::is_some) {
            out.push_str("#mid\n");
            for (w, img) in self.words.iter().zip(&self.mid) {
                if let Some(img) = img {
                    out.push_str(&format!("{w}\t{}\n", join(img)));
                }
            }
        }
        out
    }

    pub fn vocab(&self) -> &MarkedVocabulary {
        &self.vocab
    }

    pub fn scheme(&self) -> Scheme {
        self.vocab.scheme()
    }

    pub fn flags(&self) -> BoundaryFlags {
        self.flags
    }

    pub fn lexicon(&self) -> &[String] {
        &self.words
    }

    pub fn word_index(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn image(&self, word: usize, form: Form) -> Option<&[Id]> {
        match form {
            Form::Marked => self.marked.get(word).map(Vec::as_slice),
            Form::Mid => self.mid.get(word).and_then(|m| m.as_deref()),
        }
    }

    pub fn marked_image(&self, word: &str) -> Option<&[Id]> {
        self.word_index(word).and_then(|w| self.image(w, Form::Marked))
    }

    pub fn mid_image(&self, word: &str) -> Option<&[Id]> {
        self.word_index(word).and_then(|w| self.image(w, Form::Mid))
    }

    pub(crate) fn words_starting_with(&self, form: Form, id: Id) -> &[usize] {
        self.starts.get(&(form, id)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub(crate) fn forms_at(&self, position: usize) -> &[Form] {
        if position == 0 {
            &self.forms_first
        } else {
            &self.forms_rest
        }
    }

    pub(crate) fn pending_after(&self, form: Form) -> Pending {
        if self.scheme() == Scheme::Eow && !self.flags.mark_final_word {
            match form {
                Form::Mid => Pending::PunctOrEnd,
                Form::Marked => Pending::NotPunctOrEnd,
            }
        } else {
            Pending::Free
        }
    }

    /// True when the word, in either form, opens with a punctuation-class subword.
    pub fn starts_with_punct(&self, word: &str) -> bool {
        self.marked_image(word).is_some_and(|img| self.vocab.is_punct(img[0]))
    }

    /// Form used for a word at `position`.
    pub fn form_at(&self, position: Position) -> Form {
        match (self.scheme(), position) {
            (Scheme::Bow, Position::First) if !self.flags.mark_first_word => Form::Mid,
            (Scheme::Eow, Position::Final) if !self.flags.mark_final_word => Form::Mid,
            _ => Form::Marked,
        }
    }

    pub fn tokenise_word(&self, word: &str, position: Position) -> Result<Vec<Id>, TokeniserError> {
        self.tokenise_form(word, self.form_at(position), None)
    }

    pub fn tokenise_form(&self, word: &str, form: Form, index: Option<usize>) -> Result<Vec<Id>, TokeniserError> {
        let unknown = || TokeniserError::UnknownWord { word: word.to_string(), index };
        let w = self.word_index(word).ok_or_else(unknown)?;
        self.image(w, form).map(<[Id]>::to_vec).ok_or_else(unknown)
    }

    /// Position of word `i` in a sentence of `n` words, given what follows it.
    /// A word directly followed by punctuation counts as final.
    pub fn position_in(&self, words: &[String], i: usize) -> Position {
        let n = words.len();
        if i + 1 == n || (i + 1 < n && self.starts_with_punct(&words[i + 1])) {
            if i == 0 && self.scheme() == Scheme::Bow {
                return Position::First;
            }
            Position::Final
        } else if i == 0 {
            Position::First
        } else {
            Position::Medial
        }
    }

    /// Per-word forms for a whole sentence.
    pub fn forms_for(&self, words: &[String]) -> Vec<Form> {
        (0..words.len()).map(|i| self.form_at(self.position_in(words, i))).collect()
    }

    pub fn tokenise_sequence(&self, words: &[String]) -> Result<Vec<Id>, TokeniserError> {
        let forms = self.forms_for(words);
        let mut out = Vec::new();
        for (i, (w, form)) in words.iter().zip(forms).enumerate() {
            out.extend(self.tokenise_form(w, form, Some(i))?);
        }
        Ok(out)
    }

    /// Inverse of [`TokeniserSpec::tokenise_sequence`]. A trailing eos is ignored.
    pub fn detokenise(&self, ids: &[Id]) -> Result<Vec<String>, TokeniserError> {
        let ids = match ids.split_last() {
            Some((&last, rest)) if last == self.vocab.eos() => rest,
            _ => ids,
        };
        if ids.iter().any(|&id| !self.vocab.contains(id)) {
            return Err(TokeniserError::UnmappedSequence(ids.to_vec()));
        }
        let parser = Parser::new(self);
        let decodings = parser.complete(&parser.run(ids));
        match decodings.as_slice() {
            [] => Err(TokeniserError::UnmappedSequence(ids.to_vec())),
            [only] => Ok(self.names(only)),
            [a, b, ..] => Err(TokeniserError::NotUniquelyDecodable {
                ids: ids.to_vec(),
                first: self.names(a),
                second: self.names(b),
            }),
        }
    }

    pub fn names(&self, indices: &[usize]) -> Vec<String> {
        indices.iter().map(|&i| self.words[i].clone()).collect()
    }

    /// Joins subword surfaces with the marker shown as `_`.
    pub fn render(&self, ids: &[Id]) -> String {
        ids.iter()
            .map(|&id| self.vocab.get(id).map(|s| s.surface.clone()).unwrap_or_else(|| "<eos>".into()))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Injectivity over word sequences of up to `max_words` words, then the
    /// decodability class with a witness.
    pub fn certify_decodability(&self, max_words: usize) -> Result<Decodability, TokeniserError> {
        self.check_injective(max_words)?;
        if self.scheme() == Scheme::Eow && self.flags.mark_final_word {
            return Ok(Decodability::Instantaneous);
        }
        let parser = Parser::new(self);
        let eos = self.vocab.eos();
        for (w, word) in self.words.iter().enumerate() {
            let form = match self.scheme() {
                Scheme::Bow if !self.flags.mark_first_word => Form::Mid,
                Scheme::Eow => Form::Mid,
                Scheme::Bow => Form::Marked,
            };
            let Some(prefix) = self.image(w, form) else { continue };
            let states = parser.run(prefix);
            let mut confirms = None;
            let mut diverts = None;
            for u in 0..=eos {
                let verdict = if u == eos {
                    let done = parser.complete(&states);
                    if done.is_empty() {
                        None
                    } else {
                        Some(done.iter().all(|d| d.first() == Some(&w)))
                    }
                } else {
                    let next = parser.step(&states, u);
                    first_word_verdict(&next, w)
                };
                match verdict {
                    Some(true) if confirms.is_none() => confirms = Some(u),
                    Some(false) if diverts.is_none() => diverts = Some(u),
                    _ => {}
                }
            }
            if let (Some(confirms), Some(diverts)) = (confirms, diverts) {
                return Ok(Decodability::NearInstantaneous {
                    prefix: prefix.to_vec(),
                    word: word.clone(),
                    confirms,
                    diverts,
                });
            }
        }
        Ok(Decodability::Instantaneous)
    }

    fn check_injective(&self, max_words: usize) -> Result<(), TokeniserError> {
        let parser = Parser::new(self);
        let n = self.words.len();
        let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..max_words {
            let mut next = Vec::new();
            for seq in &frontier {
                for w in 0..n {
                    let mut s = seq.clone();
                    s.push(w);
                    let words = self.names(&s);
                    let Ok(ids) = self.tokenise_sequence(&words) else { continue };
                    let decodings = parser.complete(&parser.run(&ids));
                    if let Some(other) = decodings.iter().find(|d| **d != s) {
                        return Err(TokeniserError::NotUniquelyDecodable {
                            ids,
                            first: words,
                            second: self.names(other),
                        });
                    }
                    next.push(s);
                }
            }
            frontier = next;
        }
        Ok(())
    }
}

/// `Some(true)` if every reading has `w` as a completed first word,
/// `Some(false)` if none can, `None` when still open or no reading survives.
fn first_word_verdict(states: &[ParseState], w: usize) -> Option<bool> {
    if states.is_empty() {
        return None;
    }
    let fixed_w = |st: &ParseState| st.words().first() == Some(&w);
    let rules_out_w = |st: &ParseState| match st.words().first() {
        Some(&first) => first != w,
        None => st.open_word() != Some(w),
    };
    if states.iter().all(fixed_w) {
        Some(true)
    } else if states.iter().all(rules_out_w) {
        Some(false)
    } else {
        None
    }
}

fn check_marked_shape(vocab: &MarkedVocabulary, word: &str, img: &[Id]) -> Result<(), TokeniserError> {
    let shape = |reason: &str| TokeniserError::Shape { word: word.to_string(), reason: reason.to_string() };
    if img.is_empty() {
        return Err(shape("empty image"));
    }
    let marked = vocab.scheme().marked_role();
    let roles: Vec<Role> = img.iter().map(|&id| vocab.role(id).expect("ids checked")).collect();
    let ok = match vocab.scheme() {
        Scheme::Bow => roles[0] == marked && roles[1..].iter().all(|&r| r == Role::Mid),
        Scheme::Eow => {
            let (last, init) = roles.split_last().expect("non-empty");
            *last == marked && init.iter().all(|&r| r == Role::Mid)
        }
    };
    if ok {
        Ok(())
    } else {
        Err(shape(match vocab.scheme() {
            Scheme::Bow => "marked image must be one bow subword followed by mid subwords",
            Scheme::Eow => "marked image must be mid subwords followed by one eow subword",
        }))
    }
}

#[cfg(test)]
mod tests;
