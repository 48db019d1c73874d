//! Natural-log probabilities.
//!
//! Probability zero is carried as negative infinity, which composes correctly
//! under both products (addition) and sums (`logsumexp`).

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogProb(f64);

impl LogProb {
    pub const ZERO: LogProb = LogProb(f64::NEG_INFINITY);
    pub const ONE: LogProb = LogProb(0.0);

    /// Wraps a log value. Values slightly above zero from rounding are kept as-is;
    /// NaN is rejected.
    pub fn new(value: f64) -> Self {
        assert!(!value.is_nan(), "log probability is NaN");
        LogProb(value)
    }

    pub fn from_prob(p: f64) -> Self {
        assert!(p >= 0.0 && !p.is_nan(), "probability {p} is negative or NaN");
        LogProb(p.ln())
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn prob(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// Negative log probability in nats; `+inf` for probability zero.
    pub fn surprisal(self) -> f64 {
        -self.0
    }
}

impl fmt::Debug for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogProb({})", self.0)
    }
}

impl fmt::Display for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Product of probabilities.
impl Add for LogProb {
    type Output = LogProb;
    fn add(self, rhs: LogProb) -> LogProb {
        if self.is_zero() || rhs.is_zero() {
            return LogProb::ZERO;
        }
        LogProb(self.0 + rhs.0)
    }
}

impl AddAssign for LogProb {
    fn add_assign(&mut self, rhs: LogProb) {
        *self = *self + rhs;
    }
}

/// Ratio of probabilities. The result is a log ratio and may be positive.
impl Sub for LogProb {
    type Output = f64;
    fn sub(self, rhs: LogProb) -> f64 {
        if self.is_zero() && rhs.is_zero() {
            return f64::NAN;
        }
        self.0 - rhs.0
    }
}

impl Sum for LogProb {
    fn sum<I: Iterator<Item = LogProb>>(iter: I) -> LogProb {
        iter.fold(LogProb::ONE, |acc, x| acc + x)
    }
}

/// `log Σ exp(x_i)`, stable against overflow and underflow.
pub fn logsumexp<I>(terms: I) -> LogProb
where
    I: IntoIterator<Item = LogProb>,
{
    let terms: Vec<f64> = terms.into_iter().map(|t| t.0).collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return LogProb::ZERO;
    }
    let acc: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    LogProb(max + acc.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn halves_make_one() {
        let s = logsumexp([LogProb::from_prob(0.5), LogProb::from_prob(0.5)]);
        assert!(s.value().abs() < 1e-15);
    }

    #[test]
    fn empty_sum_is_zero() {
        assert!(logsumexp(Vec::new()).is_zero());
    }

    #[test]
    fn three_terms() {
        let s = logsumexp([0.2, 0.2, 0.3].map(LogProb::from_prob));
        assert!((s.value() - 0.7f64.ln()).abs() <= 1e-12);
    }

    #[test]
    fn zero_absorbs_products() {
        assert!((LogProb::ZERO + LogProb::from_prob(0.3)).is_zero());
        assert_eq!(logsumexp([LogProb::ZERO, LogProb::from_prob(0.25)]).prob(), 0.25);
    }

    #[test]
    fn long_products_stay_precise() {
        let term = LogProb::from_prob(1e-9);
        let total: LogProb = std::iter::repeat_n(term, 10_000).sum();
        let expected = 10_000.0 * 1e-9f64.ln();
        assert!(!total.is_zero());
        assert!(((total.value() - expected) / expected).abs() <= 1e-9);
    }

    proptest! {
        #[test]
        fn logsumexp_matches_linear_sum(ps in prop::collection::vec(1e-6f64..=1.0, 1..40)) {
            let direct: f64 = ps.iter().sum();
            let via_log = logsumexp(ps.iter().map(|&p| LogProb::from_prob(p))).prob();
            prop_assert!((via_log - direct).abs() <= 1e-12 * direct);
        }

        #[test]
        fn product_is_addition(a in 1e-12f64..=1.0, b in 1e-12f64..=1.0) {
            let lp = LogProb::from_prob(a) + LogProb::from_prob(b);
            prop_assert!((lp.prob() - a * b).abs() <= 1e-15);
        }
    }
}
