//! Brute-force ground truth by enumeration over small exact models.
//!
//! Event probabilities are sums over complete subword sequences (eos
//! appended). The enumeration walks the prefix tree of positive-probability
//! subword prefixes. An event reports for each prefix whether every
//! extension is in the event, none is, or it is still open. Closed-in
//! subtrees contribute their completion mass within the length budget to
//! the lower bound and their whole prefix mass to the upper bound; open
//! prefixes at the length limit contribute their continuation mass to the
//! upper bound only. The result is a certified interval.
//!
//! Nothing here uses the word-probability formulas; the only shared pieces
//! are the tokeniser's parser and the model interface.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::lm::{ConditionalLM, LmError};
use crate::tokeniser::{ParseState, Parser, TokeniserError, TokeniserSpec};
use crate::vocab::{Id, MarkedVocabulary};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("residual bound {residual:e} is not below tolerance {tolerance:e}; raise max_len")]
    BudgetTooSmall { residual: f64, tolerance: f64 },
    #[error("the context has zero enumerated mass")]
    ZeroContextMass,
    #[error("enumeration needs a model with a bounded context")]
    UnboundedContext,
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error(transparent)]
    Tokeniser(#[from] TokeniserError),
}

type Result<T> = std::result::Result<T, OracleError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationBudget {
    pub max_len: usize,
    pub min_eos_mass: f64,
}

impl EnumerationBudget {
    pub fn new(max_len: usize, min_eos_mass: f64) -> Self {
        EnumerationBudget { max_len, min_eos_mass }
    }

    /// `(1 - min_eos_mass)^max_len`.
    pub fn residual_bound(&self) -> f64 {
        (1.0 - self.min_eos_mass).powi(self.max_len as i32)
    }

    pub fn check(&self, tolerance: f64) -> Result<()> {
        let residual = self.residual_bound();
        if residual < tolerance {
            Ok(())
        } else {
            Err(OracleError::BudgetTooSmall { residual, tolerance })
        }
    }
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget { max_len: 1000, min_eos_mass: crate::lm::random::MIN_EOS_MASS }
    }
}

/// Closed interval in linear space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64, tolerance: f64) -> bool {
        x >= self.lo - tolerance && x <= self.hi + tolerance
    }

    /// Bounds on `a / b` for `a ⊆ b`, rounded outwards.
    pub fn quotient(num: Interval, den: Interval) -> Result<Interval> {
        if den.hi <= 0.0 {
            return Err(OracleError::ZeroContextMass);
        }
        let lo = (num.lo / den.hi).next_down().max(0.0);
        let hi = if den.lo > 0.0 { (num.hi / den.lo).next_up().min(1.0) } else { 1.0 };
        Ok(Interval { lo, hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Every complete extension is in the event.
    In,
    /// No complete extension is in the event.
    Out,
    Open,
}

/// A set of complete subword sequences, read left to right.
pub trait Event {
    type State: Clone;
    fn start(&self) -> Self::State;
    fn step(&self, state: &Self::State, id: Id) -> Self::State;
    fn verdict(&self, state: &Self::State) -> Verdict;
    /// Whether the sequence read so far, ended here, is in the event.
    fn accepts_end(&self, state: &Self::State) -> bool;
}

pub struct Always;
pub struct Never;

impl Event for Always {
    type State = ();
    fn start(&self) {}
    fn step(&self, _: &(), _: Id) {}
    fn verdict(&self, _: &()) -> Verdict {
        Verdict::In
    }
    fn accepts_end(&self, _: &()) -> bool {
        true
    }
}

impl Event for Never {
    type State = ();
    fn start(&self) {}
    fn step(&self, _: &(), _: Id) {}
    fn verdict(&self, _: &()) -> Verdict {
        Verdict::Out
    }
    fn accepts_end(&self, _: &()) -> bool {
        false
    }
}

/// Membership decided only on complete sequences, so every prefix stays open.
pub struct Predicate<F: Fn(&[Id]) -> bool>(pub F);

impl<F: Fn(&[Id]) -> bool> Event for Predicate<F> {
    type State = Vec<Id>;
    fn start(&self) -> Vec<Id> {
        Vec::new()
    }
    fn step(&self, state: &Vec<Id>, id: Id) -> Vec<Id> {
        let mut s = state.clone();
        s.push(id);
        s
    }
    fn verdict(&self, _: &Vec<Id>) -> Verdict {
        Verdict::Open
    }
    fn accepts_end(&self, state: &Vec<Id>) -> bool {
        (self.0)(state)
    }
}

/// Sequences decoding to words that start with `words` (or equal them, when exact).
pub struct WordPrefixEvent<'a> {
    parser: Parser<'a>,
    words: Vec<usize>,
    exact: bool,
}

impl<'a> WordPrefixEvent<'a> {
    pub fn new(spec: &'a TokeniserSpec, words: &[String], exact: bool) -> Result<Self> {
        let words = words
            .iter()
            .enumerate()
            .map(|(i, w)| {
                spec.word_index(w).ok_or_else(|| TokeniserError::UnknownWord { word: w.clone(), index: Some(i) })
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(WordPrefixEvent { parser: Parser::new(spec), words, exact })
    }

    fn consistent(&self, st: &ParseState) -> bool {
        let done = st.words();
        let k = self.words.len();
        if done.len() > k {
            return !self.exact && done[..k] == self.words[..];
        }
        if done[..] != self.words[..done.len()] {
            return false;
        }
        match st.open_word() {
            None => true,
            Some(w) => done.len() < k && w == self.words[done.len()] || (!self.exact && done.len() == k),
        }
    }

    fn settled(&self, st: &ParseState) -> bool {
        let k = self.words.len();
        !self.exact && st.words().len() >= k && st.words()[..k] == self.words[..]
    }

    fn matches(&self, decoded: &[usize]) -> bool {
        if self.exact {
            decoded == &self.words[..]
        } else {
            decoded.starts_with(&self.words)
        }
    }
}

impl Event for WordPrefixEvent<'_> {
    type State = Vec<ParseState>;
    fn start(&self) -> Vec<ParseState> {
        self.parser.start()
    }
    fn step(&self, state: &Vec<ParseState>, id: Id) -> Vec<ParseState> {
        self.parser.step(state, id)
    }
    fn verdict(&self, state: &Vec<ParseState>) -> Verdict {
        if !state.iter().any(|st| self.consistent(st)) {
            Verdict::Out
        } else if state.iter().all(|st| self.settled(st)) {
            Verdict::In
        } else {
            Verdict::Open
        }
    }
    fn accepts_end(&self, state: &Vec<ParseState>) -> bool {
        self.parser.complete(state).iter().any(|d| self.matches(d))
    }
}

/// Sequences no word sequence tokenises to.
pub struct UnmappedEvent<'a> {
    parser: Parser<'a>,
}

impl<'a> UnmappedEvent<'a> {
    pub fn new(spec: &'a TokeniserSpec) -> Self {
        UnmappedEvent { parser: Parser::new(spec) }
    }
}

impl Event for UnmappedEvent<'_> {
    type State = Vec<ParseState>;
    fn start(&self) -> Vec<ParseState> {
        self.parser.start()
    }
    fn step(&self, state: &Vec<ParseState>, id: Id) -> Vec<ParseState> {
        if state.is_empty() {
            return Vec::new();
        }
        self.parser.step(state, id)
    }
    fn verdict(&self, state: &Vec<ParseState>) -> Verdict {
        if state.is_empty() {
            Verdict::In
        } else {
            Verdict::Open
        }
    }
    fn accepts_end(&self, state: &Vec<ParseState>) -> bool {
        self.parser.complete(state).is_empty()
    }
}

/// What may follow a subword prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SuffixClass {
    Any,
    /// The next id must be in the set; eos in the set allows the prefix to end the sequence.
    OneOf(BTreeSet<Id>),
}

impl SuffixClass {
    pub fn marked_or_eos(vocab: &MarkedVocabulary) -> Self {
        SuffixClass::OneOf(vocab.marked_with_eos().into_iter().collect())
    }

    pub fn mid_or_eos(vocab: &MarkedVocabulary) -> Self {
        SuffixClass::OneOf(vocab.mid_with_eos().into_iter().collect())
    }

    pub fn punct_or_eos(vocab: &MarkedVocabulary) -> Self {
        let mut set: BTreeSet<Id> = vocab.punct_ids().clone();
        set.insert(vocab.eos());
        SuffixClass::OneOf(set)
    }

    fn admits(&self, next: Id) -> bool {
        match self {
            SuffixClass::Any => true,
            SuffixClass::OneOf(set) => set.contains(&next),
        }
    }
}

/// A set of complete subword sequences described by prefixes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubwordEvent {
    Empty,
    /// `prefix ∘ class ∘ V*`.
    Prefix { prefix: Vec<Id>, then: SuffixClass },
    Exactly(Vec<Id>),
    Union(Vec<SubwordEvent>),
}

impl SubwordEvent {
    pub fn prefix(prefix: Vec<Id>, then: SuffixClass) -> Self {
        SubwordEvent::Prefix { prefix, then }
    }

    /// Membership of the complete sequence `seq` (eos not included).
    pub fn contains(&self, seq: &[Id], eos: Id) -> bool {
        match self {
            SubwordEvent::Empty => false,
            SubwordEvent::Exactly(ids) => seq == &ids[..],
            SubwordEvent::Prefix { prefix, then } => {
                seq.starts_with(prefix) && then.admits(seq.get(prefix.len()).copied().unwrap_or(eos))
            }
            SubwordEvent::Union(parts) => parts.iter().any(|p| p.contains(seq, eos)),
        }
    }

    /// Verdict after reading `seen`.
    fn decide(&self, seen: &[Id]) -> Verdict {
        match self {
            SubwordEvent::Empty => Verdict::Out,
            SubwordEvent::Exactly(ids) => {
                if ids.starts_with(seen) {
                    Verdict::Open
                } else {
                    Verdict::Out
                }
            }
            SubwordEvent::Prefix { prefix, then } => {
                let n = seen.len().min(prefix.len());
                if seen[..n] != prefix[..n] {
                    Verdict::Out
                } else if seen.len() <= prefix.len() {
                    Verdict::Open
                } else if then.admits(seen[prefix.len()]) {
                    Verdict::In
                } else {
                    Verdict::Out
                }
            }
            SubwordEvent::Union(parts) => {
                let vs: Vec<Verdict> = parts.iter().map(|p| p.decide(seen)).collect();
                if vs.contains(&Verdict::In) {
                    Verdict::In
                } else if vs.iter().all(|&v| v == Verdict::Out) {
                    Verdict::Out
                } else {
                    Verdict::Open
                }
            }
        }
    }
}

/// A [`SubwordEvent`] as an enumerable event.
pub struct SubwordEventOver {
    pub event: SubwordEvent,
    pub eos: Id,
}

impl Event for SubwordEventOver {
    type State = Vec<Id>;
    fn start(&self) -> Vec<Id> {
        Vec::new()
    }
    fn step(&self, state: &Vec<Id>, id: Id) -> Vec<Id> {
        let mut s = state.clone();
        s.push(id);
        s
    }
    fn verdict(&self, state: &Vec<Id>) -> Verdict {
        self.event.decide(state)
    }
    fn accepts_end(&self, state: &Vec<Id>) -> bool {
        self.event.contains(state, self.eos)
    }
}

/// The model as a finite Markov chain over truncated contexts.
struct Chain {
    eos: usize,
    index: HashMap<Vec<Id>, usize>,
    /// Linear-space next distributions per state.
    probs: Vec<Vec<f64>>,
    /// Successor state per (state, id); `usize::MAX` for zero-probability ids.
    next: Vec<Vec<usize>>,
}

impl Chain {
    fn build(lm: &dyn ConditionalLM) -> Result<Chain> {
        let order = lm.markov_order().ok_or(OracleError::UnboundedContext)?;
        let eos = lm.eos() as usize;
        let mut chain = Chain { eos, index: HashMap::new(), probs: Vec::new(), next: Vec::new() };
        let mut queue = VecDeque::new();
        chain.intern(Vec::new(), lm, &mut queue)?;
        while let Some((s, ctx)) = queue.pop_front() {
            let mut succ = vec![usize::MAX; chain.probs[s].len()];
            for u in 0..chain.probs[s].len() {
                if u == eos || chain.probs[s][u] <= 0.0 {
                    continue;
                }
                let mut c: Vec<Id> = ctx.clone();
                c.push(u as Id);
                if c.len() > order {
                    c.remove(0);
                }
                succ[u] = chain.intern(c, lm, &mut queue)?;
            }
            chain.next[s] = succ;
        }
        Ok(chain)
    }

    fn intern(&mut self, ctx: Vec<Id>, lm: &dyn ConditionalLM, queue: &mut VecDeque<(usize, Vec<Id>)>) -> Result<usize> {
        if let Some(&s) = self.index.get(&ctx) {
            return Ok(s);
        }
        let s = self.probs.len();
        let dist = lm.next_distribution(&ctx)?;
        self.probs.push(dist.iter().map(|lp| lp.prob()).collect());
        self.next.push(Vec::new());
        self.index.insert(ctx.clone(), s);
        queue.push_back((s, ctx));
        Ok(s)
    }

    /// `z[h][s]`: probability of ending within `h` more subwords from `s`.
    fn completion_table(&self, max_len: usize) -> Vec<Vec<f64>> {
        let n = self.probs.len();
        let mut z = Vec::with_capacity(max_len + 1);
        z.push((0..n).map(|s| self.probs[s][self.eos]).collect::<Vec<_>>());
        for h in 1..=max_len {
            let prev: &Vec<f64> = &z[h - 1];
            let row = (0..n)
                .map(|s| {
                    let mut acc = self.probs[s][self.eos];
                    for (u, &t) in self.next[s].iter().enumerate() {
                        if t != usize::MAX {
                            acc += self.probs[s][u] * prev[t];
                        }
                    }
                    acc
                })
                .collect();
            z.push(row);
        }
        z
    }
}

/// Which traversal computes the sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Explicit-stack depth-first walk accumulating path masses.
    Stack,
    /// Recursion over the prefix tree, scaling child sums on return, with
    /// memoised completion masses.
    Recursive,
}

/// Enumerator bound to one model; reuse it across many events.
pub struct Oracle {
    chain: Chain,
    budget: EnumerationBudget,
    completion: Vec<Vec<f64>>,
    memo: RefCell<HashMap<(usize, usize), f64>>,
}

impl Oracle {
    /// Fails with `BudgetTooSmall` unless the residual bound is below `tolerance`.
    pub fn new(lm: &dyn ConditionalLM, budget: EnumerationBudget, tolerance: f64) -> Result<Self> {
        budget.check(tolerance)?;
        Self::unchecked(lm, budget)
    }

    /// For exploratory sums whose intervals may be wide.
    pub fn unchecked(lm: &dyn ConditionalLM, budget: EnumerationBudget) -> Result<Self> {
        let chain = Chain::build(lm)?;
        let completion = chain.completion_table(budget.max_len);
        Ok(Oracle { chain, budget, completion, memo: RefCell::new(HashMap::new()) })
    }

    pub fn budget(&self) -> EnumerationBudget {
        self.budget
    }

    pub fn event_prob<E: Event>(&self, event: &E, method: Method) -> Interval {
        match method {
            Method::Stack => self.walk(event),
            Method::Recursive => {
                let (lo, hi) = self.descend(event, &event.start(), 0, 0);
                Interval { lo, hi }
            }
        }
    }

    fn walk<E: Event>(&self, event: &E) -> Interval {
        let max_len = self.budget.max_len;
        let (mut lo, mut hi) = (0.0, 0.0);
        let mut stack = vec![(event.start(), 0usize, 0usize, 1.0f64)];
        while let Some((st, s, depth, mass)) = stack.pop() {
            match event.verdict(&st) {
                Verdict::Out => {}
                Verdict::In => {
                    lo += mass * self.completion[max_len - depth][s];
                    hi += mass;
                }
                Verdict::Open => {
                    let probs = &self.chain.probs[s];
                    if event.accepts_end(&st) {
                        lo += mass * probs[self.chain.eos];
                        hi += mass * probs[self.chain.eos];
                    }
                    for (u, &t) in self.chain.next[s].iter().enumerate() {
                        if t == usize::MAX {
                            continue;
                        }
                        if depth == max_len {
                            hi += mass * probs[u];
                        } else {
                            stack.push((event.step(&st, u as Id), t, depth + 1, mass * probs[u]));
                        }
                    }
                }
            }
        }
        Interval { lo, hi }
    }

    /// Conditional sums below one prefix, relative to its own mass.
    fn descend<E: Event>(&self, event: &E, st: &E::State, s: usize, depth: usize) -> (f64, f64) {
        match event.verdict(st) {
            Verdict::Out => (0.0, 0.0),
            Verdict::In => (self.ends_within(s, self.budget.max_len - depth), 1.0),
            Verdict::Open => {
                let probs = &self.chain.probs[s];
                let end = if event.accepts_end(st) { probs[self.chain.eos] } else { 0.0 };
                let (mut lo, mut hi) = (0.0, 0.0);
                for (u, &t) in self.chain.next[s].iter().enumerate() {
                    if t == usize::MAX {
                        continue;
                    }
                    let (l, h) = if depth == self.budget.max_len {
                        (0.0, 1.0)
                    } else {
                        self.descend(event, &event.step(st, u as Id), t, depth + 1)
                    };
                    lo += probs[u] * l;
                    hi += probs[u] * h;
                }
                (end + lo, end + hi)
            }
        }
    }

    fn ends_within(&self, s: usize, h: usize) -> f64 {
        if let Some(&v) = self.memo.borrow().get(&(s, h)) {
            return v;
        }
        let probs = &self.chain.probs[s];
        let mut v = probs[self.chain.eos];
        if h > 0 {
            for (u, &t) in self.chain.next[s].iter().enumerate() {
                if t != usize::MAX {
                    v += probs[u] * self.ends_within(t, h - 1);
                }
            }
        }
        self.memo.borrow_mut().insert((s, h), v);
        v
    }

    /// `P(context ∘ word ∘ ...) / P(context ∘ ...)` over decoded word sequences.
    pub fn word_conditional(&self, spec: &TokeniserSpec, context: &[String], word: &str) -> Result<Interval> {
        let den = self.event_prob(&WordPrefixEvent::new(spec, context, false)?, Method::Stack);
        let mut extended = context.to_vec();
        extended.push(word.to_string());
        let num = self.event_prob(&WordPrefixEvent::new(spec, &extended, false)?, Method::Stack);
        Interval::quotient(num, den)
    }

    /// `P(the sentence is exactly context) / P(context ∘ ...)`.
    pub fn end_conditional(&self, spec: &TokeniserSpec, context: &[String]) -> Result<Interval> {
        let den = self.event_prob(&WordPrefixEvent::new(spec, context, false)?, Method::Stack);
        let num = self.event_prob(&WordPrefixEvent::new(spec, context, true)?, Method::Stack);
        Interval::quotient(num, den)
    }

    pub fn unmapped_mass(&self, spec: &TokeniserSpec) -> Interval {
        self.event_prob(&UnmappedEvent::new(spec), Method::Stack)
    }
}

/// One-shot event probability.
pub fn enumerate_event_prob<E: Event>(
    lm: &dyn ConditionalLM,
    event: &E,
    budget: EnumerationBudget,
    tolerance: f64,
) -> Result<Interval> {
    Ok(Oracle::new(lm, budget, tolerance)?.event_prob(event, Method::Stack))
}

/// One-shot word conditional.
pub fn oracle_word_conditional(
    lm: &dyn ConditionalLM,
    spec: &TokeniserSpec,
    context: &[String],
    word: &str,
    budget: EnumerationBudget,
    tolerance: f64,
) -> Result<Interval> {
    Oracle::new(lm, budget, tolerance)?.word_conditional(spec, context, word)
}

/// Mass on unmapped sequences. No tolerance check: this is a diagnostic and
/// the interval width shows how much is left unexplored.
pub fn unmapped_mass(lm: &dyn ConditionalLM, spec: &TokeniserSpec, budget: EnumerationBudget) -> Result<Interval> {
    Ok(Oracle::unchecked(lm, budget)?.unmapped_mass(spec))
}

/// A word-sequence event for set comparisons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WordEvent {
    Empty,
    /// `words ∘ L*`.
    Prefix(Vec<String>),
    Exactly(Vec<String>),
}

impl WordEvent {
    pub fn contains(&self, words: &[String]) -> bool {
        match self {
            WordEvent::Empty => false,
            WordEvent::Prefix(p) => words.starts_with(p),
            WordEvent::Exactly(p) => words == &p[..],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EquivalenceReport {
    pub word_sequences_checked: usize,
    pub subword_sequences_checked: usize,
    /// In the word event, but tokenised outside the subword event.
    pub word_counterexamples: Vec<Vec<String>>,
    /// Mapped, in the subword event, but decoded outside the word event.
    pub subword_counterexamples: Vec<Vec<Id>>,
}

impl EquivalenceReport {
    pub fn is_equivalent(&self) -> bool {
        self.word_counterexamples.is_empty() && self.subword_counterexamples.is_empty()
    }
}

/// Compares the two events on every sequence with at most `budget.max_len`
/// subwords, in both directions. Unmapped subword sequences are skipped.
pub fn check_set_equivalence(
    spec: &TokeniserSpec,
    word_event: &WordEvent,
    subword_event: &SubwordEvent,
    budget: EnumerationBudget,
) -> EquivalenceReport {
    let eos = spec.vocab().eos();
    let max_len = budget.max_len;
    let mut report = EquivalenceReport::default();

    let mut layer: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..=max_len {
        let mut next = Vec::new();
        for ws in layer {
            let Ok(ids) = spec.tokenise_sequence(&ws) else { continue };
            if ids.len() > max_len {
                continue;
            }
            report.word_sequences_checked += 1;
            if word_event.contains(&ws) && !subword_event.contains(&ids, eos) {
                report.word_counterexamples.push(ws.clone());
            }
            for w in spec.lexicon() {
                let mut longer = ws.clone();
                longer.push(w.clone());
                next.push(longer);
            }
        }
        layer = next;
    }

    let n = spec.vocab().len() as Id;
    let mut layer: Vec<Vec<Id>> = vec![Vec::new()];
    for len in 0..=max_len {
        for ids in &layer {
            if !subword_event.contains(ids, eos) {
                continue;
            }
            let Ok(words) = spec.detokenise(ids) else { continue };
            report.subword_sequences_checked += 1;
            if !word_event.contains(&words) {
                report.subword_counterexamples.push(ids.clone());
            }
        }
        if len == max_len {
            break;
        }
        layer = layer
            .iter()
            .flat_map(|ids| {
                (0..n).map(move |u| {
                    let mut longer = ids.clone();
                    longer.push(u);
                    longer
                })
            })
            .collect();
    }
    report
}
