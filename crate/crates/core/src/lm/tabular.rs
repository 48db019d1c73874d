//! Explicit conditional tables keyed by context.
//!
//! Lookups keep the last `order` context ids and then use the longest stored
//! suffix, so a file only needs the contexts that differ.

use std::collections::BTreeMap;
use std::path::Path;

use super::{normalisation_error, ConditionalLM, LmError, TABULAR_TOLERANCE};
use crate::logprob::LogProb;
use crate::tokeniser::{Parser, TokeniserSpec};
use crate::vocab::Id;

#[derive(Debug, Clone, PartialEq)]
pub struct TabularLM {
    order: usize,
    support_len: usize,
    exact: bool,
    rows: BTreeMap<Vec<Id>, Vec<LogProb>>,
}

impl TabularLM {
    /// Rows are linear-space probabilities over vocabulary plus eos.
    pub fn from_rows(
        order: usize,
        support_len: usize,
        exact: bool,
        rows: impl IntoIterator<Item = (Vec<Id>, Vec<f64>)>,
    ) -> Result<Self, LmError> {
        let mut table = BTreeMap::new();
        for (ctx, probs) in rows {
            if probs.len() != support_len {
                return Err(LmError::MalformedResponse(format!(
                    "row for {ctx:?} has {} entries, expected {support_len}",
                    probs.len()
                )));
            }
            table.insert(ctx, probs.into_iter().map(LogProb::from_prob).collect());
        }
        Self::from_log_rows(order, support_len, exact, table)
    }

    pub fn from_log_rows(
        order: usize,
        support_len: usize,
        exact: bool,
        rows: BTreeMap<Vec<Id>, Vec<LogProb>>,
    ) -> Result<Self, LmError> {
        for (ctx, dist) in &rows {
            if ctx.len() > order {
                return Err(LmError::MalformedResponse(format!(
                    "context {ctx:?} is longer than the order {order}"
                )));
            }
            if let Some(&bad) = ctx.iter().find(|&&id| id as usize >= support_len - 1) {
                return Err(LmError::InvalidContext(bad));
            }
            let deviation = normalisation_error(dist);
            if deviation.abs() > TABULAR_TOLERANCE {
                return Err(LmError::NotNormalised { context: ctx.clone(), deviation });
            }
        }
        if !rows.contains_key(&Vec::new()) {
            return Err(LmError::MalformedResponse("no row for the empty context".into()));
        }
        Ok(TabularLM { order, support_len, exact, rows })
    }

    /// Reads `context<TAB>subword<TAB>probability` rows. The empty context is
    /// written `ε`, eos as `EOS`. Optional leading directives `#order<TAB>n`
    /// and `#exact<TAB>true|false`. Missing entries are zero.
    pub fn load(path: &Path, support_len: usize) -> Result<Self, LmError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| LmError::ParseError {
            path: shown.clone(),
            line: 0,
            msg: e.to_string(),
        })?;
        Self::parse(&text, &shown, support_len)
    }

    pub fn parse(text: &str, source: &str, support_len: usize) -> Result<Self, LmError> {
        let err = |line: usize, msg: String| LmError::ParseError { path: source.to_string(), line, msg };
        let eos = (support_len - 1) as Id;
        let mut order = None;
        let mut exact = false;
        let mut rows: BTreeMap<Vec<Id>, Vec<f64>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if let Some(directive) = cols[0].strip_prefix('#') {
                match (directive, cols.get(1)) {
                    ("order", Some(v)) => order = Some(v.trim().parse::<usize>().map_err(|e| err(n, e.to_string()))?),
                    ("exact", Some(v)) => exact = v.trim().parse::<bool>().map_err(|e| err(n, e.to_string()))?,
                    _ => return Err(err(n, format!("unknown directive `{line}`"))),
                }
                continue;
            }
            if cols.len() != 3 {
                return Err(err(n, format!("expected 3 columns, found {}", cols.len())));
            }
            let ctx: Vec<Id> = if cols[0] == "ε" {
                Vec::new()
            } else {
                cols[0]
                    .split(',')
                    .map(|s| s.trim().parse::<Id>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| err(n, format!("context: {e}")))?
            };
            let sub: Id = if cols[1] == "EOS" {
                eos
            } else {
                cols[1].trim().parse().map_err(|e| err(n, format!("subword: {e}")))?
            };
            if sub > eos {
                return Err(err(n, format!("subword {sub} is outside the vocabulary")));
            }
            let p: f64 = cols[2].trim().parse().map_err(|e| err(n, format!("probability: {e}")))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(err(n, format!("probability {p} outside [0, 1]")));
            }
            let row = rows.entry(ctx).or_insert_with(|| vec![0.0; support_len]);
            row[sub as usize] += p;
        }
        let order = order.unwrap_or_else(|| rows.keys().map(Vec::len).max().unwrap_or(0).max(1));
        Self::from_rows(order, support_len, exact, rows)
    }

    pub fn to_tsv(&self) -> String {
        let eos = self.support_len - 1;
        let mut out = format!("#order\t{}\n#exact\t{}\n", self.order, self.exact);
        for (ctx, dist) in &self.rows {
            let key = if ctx.is_empty() {
                "ε".to_string()
            } else {
                ctx.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
            };
            for (u, lp) in dist.iter().enumerate() {
                if lp.is_zero() {
                    continue;
                }
                let sub = if u == eos { "EOS".to_string() } else { u.to_string() };
                out.push_str(&format!("{key}\t{sub}\t{:.17}\n", lp.prob()));
            }
        }
        out
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn contexts(&self) -> impl Iterator<Item = &Vec<Id>> {
        self.rows.keys()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn set_exact(&mut self, exact: bool) {
        self.exact = exact;
    }

    fn lookup(&self, context: &[Id]) -> &[LogProb] {
        let start = context.len().saturating_sub(self.order);
        let tail = &context[start..];
        for k in 0..=tail.len() {
            if let Some(dist) = self.rows.get(&tail[k..]) {
                return dist;
            }
        }
        unreachable!("the empty context is always stored")
    }
}

impl ConditionalLM for TabularLM {
    fn support_len(&self) -> usize {
        self.support_len
    }

    fn next_distribution(&self, context: &[Id]) -> Result<Vec<LogProb>, LmError> {
        if let Some(&bad) = context.iter().find(|&&id| id as usize >= self.support_len - 1) {
            return Err(LmError::InvalidContext(bad));
        }
        Ok(self.lookup(context).to_vec())
    }

    fn markov_order(&self) -> Option<usize> {
        Some(self.order)
    }

    fn is_exact(&self) -> bool {
        self.exact
    }
}

/// Walks every positive-probability prefix up to `depth` subwords and checks
/// that each positive next-subword (or eos) keeps the sequence inside the
/// tokeniser's image.
pub fn verify_exactness(lm: &dyn ConditionalLM, spec: &TokeniserSpec, depth: usize) -> Result<(), LmError> {
    let parser = Parser::new(spec);
    let eos = lm.eos();
    let mut frontier = vec![(Vec::<Id>::new(), parser.start())];
    for _ in 0..=depth {
        let mut next = Vec::new();
        for (prefix, states) in &frontier {
            let dist = lm.next_distribution(prefix)?;
            for (u, lp) in dist.iter().enumerate() {
                if lp.is_zero() {
                    continue;
                }
                let u = u as Id;
                let ok = if u == eos {
                    !parser.complete(states).is_empty()
                } else {
                    let stepped = parser.step(states, u);
                    let ok = !stepped.is_empty();
                    if ok {
                        let mut p = prefix.clone();
                        p.push(u);
                        next.push((p, stepped));
                    }
                    ok
                };
                if !ok {
                    return Err(LmError::SupportViolation { context: prefix.clone(), subword: u });
                }
            }
        }
        frontier = next;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn toy_rows_read_back() {
        let lm = fixtures::toy1_lm();
        assert_eq!(lm.row_count(), 4);
        let root: Vec<f64> = lm.next_distribution(&[]).unwrap().iter().map(|l| l.prob()).collect();
        assert_eq!(root, vec![0.5, 0.3, 0.0, 0.2]);
        let after_a: Vec<f64> = lm.next_distribution(&[0]).unwrap().iter().map(|l| l.prob()).collect();
        for (x, y) in after_a.iter().zip([0.2, 0.2, 0.3, 0.3]) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(normalisation_error(&lm.next_distribution(&[]).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn same_context_same_distribution() {
        let lm = fixtures::toy1_lm();
        assert_eq!(lm.next_distribution(&[0, 2]).unwrap(), lm.next_distribution(&[0, 2]).unwrap());
    }

    #[test]
    fn long_contexts_are_truncated() {
        let lm = fixtures::toy1_lm();
        assert_eq!(lm.next_distribution(&[1, 0, 1, 0, 2]).unwrap(), lm.next_distribution(&[2]).unwrap());
    }

    #[test]
    fn file_round_trip() {
        let lm = fixtures::toy1_lm();
        let again = TabularLM::parse(&lm.to_tsv(), "mem", 4).unwrap();
        assert_eq!(again.order(), 2);
        assert!(again.is_exact());
        for ctx in [vec![], vec![0], vec![1], vec![2], vec![0, 2]] {
            let a = lm.next_distribution(&ctx).unwrap();
            let b = again.next_distribution(&ctx).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x.prob() - y.prob()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn row_summing_to_point_nine() {
        let text = "ε\t0\t0.5\nε\t1\t0.2\nε\tEOS\t0.2\n";
        match TabularLM::parse(text, "mem", 4) {
            Err(LmError::NotNormalised { context, deviation }) => {
                assert!(context.is_empty());
                assert!((deviation + 0.1).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "ε\t0\t0.5\nε\tx\t0.5\n";
        assert!(matches!(TabularLM::parse(text, "mem", 4), Err(LmError::ParseError { line: 2, .. })));
    }

    #[test]
    fn toy_lm_is_exact() {
        let (spec, lm) = (fixtures::toy1_spec(), fixtures::toy1_lm());
        verify_exactness(&lm, &spec, 6).unwrap();
    }

    #[test]
    fn mid_subword_first_is_a_violation() {
        let spec = fixtures::toy1_spec();
        let text = "#order\t2\n#exact\ttrue\nε\t0\t0.5\nε\t2\t0.3\nε\tEOS\t0.2\n";
        let lm = TabularLM::parse(text, "mem", 4).unwrap();
        assert_eq!(
            verify_exactness(&lm, &spec, 3),
            Err(LmError::SupportViolation { context: vec![], subword: 2 })
        );
    }
}
