//! Incremental left-to-right parsing of subword ids into lexicon words.
//!
//! A parse state is one way of reading the ids seen so far: completed words,
//! the word currently being read (if any), and the constraint the finished
//! form places on what may follow. The set of states after a prefix covers
//! every word sequence whose tokenisation starts with that prefix.

use std::collections::HashSet;

use super::{Form, TokeniserSpec};
use crate::vocab::Id;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pending {
    Free,
    /// Previous word was written in its unmarked form: only punctuation or the end may follow.
    PunctOrEnd,
    /// Previous word was written in its marked form: punctuation and the end are excluded.
    NotPunctOrEnd,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParseState {
    words: Vec<usize>,
    partial: Option<(usize, Form, usize)>,
    pending: Pending,
}

impl ParseState {
    /// Lexicon indices of completed words.
    pub fn words(&self) -> &[usize] {
        &self.words
    }

    /// Lexicon index of the word being read, if one is open.
    pub fn open_word(&self) -> Option<usize> {
        self.partial.map(|(w, _, _)| w)
    }

    /// Open word, its form, and how many of its subwords were read.
    pub fn partial(&self) -> Option<(usize, Form, usize)> {
        self.partial
    }

    pub fn pending(&self) -> Pending {
        self.pending
    }
}

pub struct Parser<'a> {
    spec: &'a TokeniserSpec,
}

impl<'a> Parser<'a> {
    pub fn new(spec: &'a TokeniserSpec) -> Self {
        Parser { spec }
    }

    pub fn start(&self) -> Vec<ParseState> {
        vec![ParseState { words: Vec::new(), partial: None, pending: Pending::Free }]
    }

    pub fn step(&self, states: &[ParseState], id: Id) -> Vec<ParseState> {
        let mut out: Vec<ParseState> = Vec::new();
        let mut seen = HashSet::new();
        for st in states {
            match st.partial {
                Some((w, form, off)) => {
                    let img = self.spec.image(w, form).expect("open word has an image");
                    if img[off] == id {
                        let next = self.advance(st, w, form, off + 1, img.len());
                        if seen.insert(next.clone()) {
                            out.push(next);
                        }
                    }
                }
                None => {
                    if !self.pending_allows(st.pending, Some(id)) {
                        continue;
                    }
                    for &form in self.spec.forms_at(st.words.len()) {
                        for &w in self.spec.words_starting_with(form, id) {
                            let len = self.spec.image(w, form).map(|i| i.len()).unwrap_or(0);
                            let next = self.advance(st, w, form, 1, len);
                            if seen.insert(next.clone()) {
                                out.push(next);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn run(&self, ids: &[Id]) -> Vec<ParseState> {
        let mut states = self.start();
        for &id in ids {
            states = self.step(&states, id);
            if states.is_empty() {
                break;
            }
        }
        states
    }

    /// Word sequences the ids decode to if the sequence ends here.
    pub fn complete(&self, states: &[ParseState]) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = states
            .iter()
            .filter(|st| st.partial.is_none() && self.pending_allows(st.pending, None))
            .map(|st| st.words.clone())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    fn advance(&self, st: &ParseState, w: usize, form: Form, off: usize, len: usize) -> ParseState {
        let mut next = st.clone();
        if off == len {
            next.words.push(w);
            next.partial = None;
            next.pending = self.spec.pending_after(form);
        } else {
            next.partial = Some((w, form, off));
        }
        next
    }

    fn pending_allows(&self, pending: Pending, next: Option<Id>) -> bool {
        let punct_or_end = next.is_none_or(|id| self.spec.vocab().is_punct(id));
        match pending {
            Pending::Free => true,
            Pending::PunctOrEnd => punct_or_end,
            Pending::NotPunctOrEnd => !punct_or_end,
        }
    }
}
