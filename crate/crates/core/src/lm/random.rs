//! Seeded exact models for property tests.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LmError, TabularLM};
use crate::logprob::LogProb;
use crate::tokeniser::{Form, ParseState, Parser, Pending, TokeniserSpec};
use crate::vocab::Id;

/// Smallest eos probability wherever a sentence may end.
pub const MIN_EOS_MASS: f64 = 0.05;

/// Allowed next ids (eos included) for each truncated context.
pub type SupportMap = BTreeMap<Vec<Id>, BTreeSet<Id>>;

/// The set of continuations the lexicon allows after every reachable
/// context, keyed by its last `order` ids. Fails when two prefixes with the
/// same key need different supports, since no order-`order` table can then
/// be exact.
pub fn exact_support(spec: &TokeniserSpec, order: usize) -> Result<SupportMap, LmError> {
    let parser = Parser::new(spec);
    let eos = spec.vocab().eos();
    let n = spec.vocab().len() as Id;
    let mut support: SupportMap = BTreeMap::new();
    let mut visited: HashSet<(Vec<Id>, Vec<Signature>)> = HashSet::new();
    let mut queue: VecDeque<(Vec<Id>, Vec<ParseState>)> = VecDeque::new();
    queue.push_back((Vec::new(), parser.start()));
    while let Some((key, states)) = queue.pop_front() {
        let sig = signatures(&states);
        if !visited.insert((key.clone(), sig)) {
            continue;
        }
        let mut allowed = BTreeSet::new();
        if !parser.complete(&states).is_empty() {
            allowed.insert(eos);
        }
        for u in 0..n {
            let next = parser.step(&states, u);
            if next.is_empty() {
                continue;
            }
            allowed.insert(u);
            let mut k = key.clone();
            k.push(u);
            if k.len() > order {
                k.remove(0);
            }
            queue.push_back((k, next));
        }
        match support.get(&key) {
            Some(prev) if *prev != allowed => {
                return Err(LmError::OrderTooSmall { order, context: key });
            }
            Some(_) => {}
            None => {
                support.insert(key, allowed);
            }
        }
    }
    Ok(support)
}

/// What a parse state can still do, ignoring which words were read.
type Signature = (Option<(usize, Form, usize)>, Pending, bool);

fn signatures(states: &[ParseState]) -> Vec<Signature> {
    let mut sig: Vec<Signature> =
        states.iter().map(|s| (s.partial(), s.pending(), s.words().is_empty())).collect();
    sig.sort();
    sig.dedup();
    sig
}

/// An exact model of the given order: strictly positive probabilities on
/// the lexicon's continuations, zero elsewhere, and at least
/// [`MIN_EOS_MASS`] on eos wherever a sentence may end.
pub fn random_exact_lm(seed: u64, spec: &TokeniserSpec, order: usize) -> Result<TabularLM, LmError> {
    assert!(order >= 1, "order must be at least 1");
    let support = exact_support(spec, order)?;
    let eos = spec.vocab().eos();
    let width = spec.vocab().support_len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = BTreeMap::new();
    for (ctx, allowed) in &support {
        let mut probs = vec![0.0; width];
        let others: Vec<Id> = allowed.iter().copied().filter(|&u| u != eos).collect();
        let eos_mass = match (allowed.contains(&eos), others.is_empty()) {
            (false, _) => 0.0,
            (true, true) => 1.0,
            (true, false) => rng.gen_range(MIN_EOS_MASS..0.5),
        };
        probs[eos as usize] = eos_mass;
        let weights: Vec<f64> = others.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for (&u, w) in others.iter().zip(&weights) {
            probs[u as usize] = (1.0 - eos_mass) * w / total;
        }
        let logs: Vec<LogProb> = probs.into_iter().map(LogProb::from_prob).collect();
        rows.insert(ctx.clone(), logs);
    }
    rows.entry(Vec::new()).or_insert_with(|| {
        let mut probs = vec![LogProb::ZERO; width];
        probs[eos as usize] = LogProb::ONE;
        probs
    });
    TabularLM::from_log_rows(order, width, true, rows)
}
