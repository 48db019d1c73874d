//! Sign-flip permutation tests and a uniformity check for p-values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::AnalysisError;

pub const DEFAULT_PERMUTATIONS: usize = 10_000;

/// Two-sided p-value for a zero mean paired difference `a - b`. Signs of the
/// differences are flipped at random `n_perm` times, or exhaustively when
/// `2^n <= n_perm`. The Monte-Carlo estimate counts the observed statistic.
pub fn paired_permutation_test(a: &[f64], b: &[f64], n_perm: usize, seed: u64) -> Result<f64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch(a.len(), b.len()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len();
    if n == 0 {
        return Ok(1.0);
    }
    let observed = d.iter().sum::<f64>().abs();
    // Sums within a few ulps of the observed one count as ties.
    let slack = observed * 1e-12;
    if n < 64 && (1u64 << n) as usize <= n_perm.max(1) {
        let total = 1u64 << n;
        let hits = (0..total)
            .filter(|mask| {
                let s: f64 = d.iter().enumerate().map(|(i, x)| if mask >> i & 1 == 1 { -x } else { *x }).sum();
                s.abs() >= observed - slack
            })
            .count();
        return Ok(hits as f64 / total as f64);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..n_perm {
        let s: f64 = d.iter().map(|x| if rng.gen::<bool>() { -x } else { *x }).sum();
        if s.abs() >= observed - slack {
            hits += 1;
        }
    }
    Ok((hits + 1) as f64 / (n_perm + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov-Smirnov test against Uniform(0, 1), with the
/// asymptotic distribution and Stephens' small-sample adjustment.
pub fn ks_uniform(samples: &[f64]) -> Result<KsResult, AnalysisError> {
    if samples.is_empty() {
        return Err(AnalysisError::DegenerateInput("an empty sample".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let statistic = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max);
    let t = statistic * (n.sqrt() + 0.12 + 0.11 / n.sqrt());
    Ok(KsResult { statistic, p_value: kolmogorov_tail(t) })
}

/// `P(K > t)` for the Kolmogorov distribution.
fn kolmogorov_tail(t: f64) -> f64 {
    if t < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * t * t).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let a = [1.0, 2.0, 3.5, -1.0];
        assert_eq!(paired_permutation_test(&a, &a, 10_000, 1).unwrap(), 1.0);
        let big: Vec<f64> = (0..40).map(|i| i as f64).collect();
        assert_eq!(paired_permutation_test(&big, &big, 1000, 1).unwrap(), 1.0);
    }

    #[test]
    fn shifted_samples_exhaustive() {
        let b: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let a: Vec<f64> = b.iter().enumerate().map(|(i, x)| x + 10.0 + i as f64 * 1e-3).collect();
        assert_eq!(paired_permutation_test(&a, &b, 10_000, 3).unwrap(), 2.0 / 1024.0);
    }

    #[test]
    fn shifted_samples_monte_carlo() {
        let b = vec![0.0; 20];
        let a: Vec<f64> = (0..20).map(|i| 10.0 + i as f64 * 1e-3).collect();
        let p = paired_permutation_test(&a, &b, 10_000, 3).unwrap();
        assert!(p <= 2.0 / 1024.0 + 1e-3);
        assert_eq!(p, paired_permutation_test(&a, &b, 10_000, 3).unwrap());
    }

    #[test]
    fn length_mismatch() {
        assert_eq!(paired_permutation_test(&[1.0], &[1.0, 2.0], 10, 0), Err(AnalysisError::LengthMismatch(1, 2)));
    }

    #[test]
    fn ks_detects_non_uniform() {
        let uniform: Vec<f64> = (0..200).map(|i| (i as f64 + 0.5) / 200.0).collect();
        assert!(ks_uniform(&uniform).unwrap().p_value > 0.99);
        let skewed: Vec<f64> = uniform.iter().map(|x| x * x).collect();
        assert!(ks_uniform(&skewed).unwrap().p_value < 1e-6);
    }

    #[test]
    fn kolmogorov_reference_points() {
        // Classic critical values: P(K > 1.358) = 0.05, P(K > 1.628) = 0.01.
        assert!((kolmogorov_tail(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_tail(1.628) - 0.01).abs() < 1e-3);
    }
}
