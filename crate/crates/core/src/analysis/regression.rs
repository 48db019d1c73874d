//! Linear reading-time regressions and cross-validated log-likelihood gains.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::AnalysisError;

pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Predictor {
    Length,
    LogFrequency,
    Surprisal,
    /// Surprisal of the word `k` positions back, `k` in 1..=3.
    Spillover(u8),
}

impl Predictor {
    /// Length, log frequency and the three spillover surprisals.
    pub const BASELINE: [Predictor; 5] = [
        Predictor::Length,
        Predictor::LogFrequency,
        Predictor::Spillover(1),
        Predictor::Spillover(2),
        Predictor::Spillover(3),
    ];

    pub fn name(self) -> String {
        match self {
            Predictor::Length => "length".into(),
            Predictor::LogFrequency => "log_freq".into(),
            Predictor::Surprisal => "surprisal".into(),
            Predictor::Spillover(k) => format!("surprisal_prev{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RTObservation {
    pub word: String,
    pub sentence_idx: usize,
    pub word_idx: usize,
    /// Milliseconds.
    pub avg_rt: f64,
    pub length: f64,
    pub log_frequency: f64,
    pub surprisal: f64,
    pub spillover: [f64; 3],
}

impl RTObservation {
    pub fn get(&self, p: Predictor) -> f64 {
        match p {
            Predictor::Length => self.length,
            Predictor::LogFrequency => self.log_frequency,
            Predictor::Surprisal => self.surprisal,
            Predictor::Spillover(k) => self.spillover[(k - 1) as usize],
        }
    }

    pub fn set(&mut self, p: Predictor, v: f64) {
        match p {
            Predictor::Length => self.length = v,
            Predictor::LogFrequency => self.log_frequency = v,
            Predictor::Surprisal => self.surprisal = v,
            Predictor::Spillover(k) => self.spillover[(k - 1) as usize] = v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub predictors: Vec<Predictor>,
    /// Intercept first.
    pub coefficients: Vec<f64>,
    /// Standard errors, same order.
    pub std_errors: Vec<f64>,
    /// Maximum-likelihood residual variance, floored.
    pub variance: f64,
    /// Training log-likelihood.
    pub log_likelihood: f64,
}

impl LinearFit {
    pub fn predict(&self, obs: &RTObservation) -> f64 {
        self.coefficients[0] + self.predictors.iter().zip(&self.coefficients[1..]).map(|(&p, b)| b * obs.get(p)).sum::<f64>()
    }

    pub fn pointwise_log_likelihood(&self, obs: &RTObservation) -> f64 {
        let r = obs.avg_rt - self.predict(obs);
        -0.5 * (2.0 * PI * self.variance).ln() - r * r / (2.0 * self.variance)
    }
}

/// Ordinary least squares with an intercept, Gaussian likelihood at the
/// maximum-likelihood variance.
pub fn fit_linear(frame: &[RTObservation], predictors: &[Predictor]) -> Result<LinearFit, AnalysisError> {
    let (n, k) = (frame.len(), predictors.len() + 1);
    if n < k + 1 {
        return Err(AnalysisError::TooFewObservations { needed: k + 1, got: n });
    }
    let x = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { frame[i].get(predictors[j - 1]) });
    let y = DVector::from_iterator(n, frame.iter().map(|o| o.avg_rt));
    // Unit-norm columns make the rank test scale free.
    let norms: Vec<f64> = (0..k).map(|j| x.column(j).norm()).collect();
    if norms.iter().any(|&s| s == 0.0 || !s.is_finite()) {
        return Err(AnalysisError::SingularDesign);
    }
    let mut xs = x.clone();
    for (j, s) in norms.iter().enumerate() {
        xs.column_mut(j).scale_mut(1.0 / s);
    }
    let qr = xs.qr();
    let r = qr.r();
    let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..k).any(|i| r[(i, i)].abs() <= 1e-10 * max_diag) {
        return Err(AnalysisError::SingularDesign);
    }
    let qty = qr.q().transpose() * &y;
    let scaled = r.solve_upper_triangular(&qty).ok_or(AnalysisError::SingularDesign)?;
    let beta: Vec<f64> = scaled.iter().zip(&norms).map(|(b, s)| b / s).collect();
    let beta_v = DVector::from_column_slice(&beta);
    let residuals = &y - &x * &beta_v;
    let sse = residuals.norm_squared();
    let variance = (sse / n as f64).max(VARIANCE_FLOOR);
    let r_inv = r.try_inverse().ok_or(AnalysisError::SingularDesign)?;
    let unbiased = sse / (n - k).max(1) as f64;
    let std_errors = (0..k).map(|j| (r_inv.row(j).norm_squared() * unbiased).sqrt() / norms[j]).collect();
    let mut fit = LinearFit { predictors: predictors.to_vec(), coefficients: beta, std_errors, variance, log_likelihood: 0.0 };
    fit.log_likelihood = frame.iter().map(|o| fit.pointwise_log_likelihood(o)).sum();
    Ok(fit)
}

/// Fold index for each of `n` observations, from a seeded shuffle.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Result<Vec<usize>, AnalysisError> {
    if folds < 2 {
        return Err(AnalysisError::Input(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n {
        return Err(AnalysisError::TooFewObservations { needed: folds, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = rank % folds;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaLlh {
    /// Mean per-observation gain within each held-out fold.
    pub fold_deltas: Vec<f64>,
    pub mean: f64,
    /// Held-out gain per observation, in frame order.
    pub pointwise: Vec<f64>,
}

/// Held-out log-likelihood with the target predictor minus without it.
pub fn delta_llh(
    frame: &[RTObservation],
    baseline: &[Predictor],
    target: Predictor,
    folds: usize,
    seed: u64,
) -> Result<DeltaLlh, AnalysisError> {
    let assignment = fold_assignment(frame.len(), folds, seed)?;
    let mut with_target = baseline.to_vec();
    with_target.push(target);
    let mut pointwise = vec![0.0; frame.len()];
    let mut fold_deltas = Vec::with_capacity(folds);
    for f in 0..folds {
        let (train, test): (Vec<usize>, Vec<usize>) = (0..frame.len()).partition(|&i| assignment[i] != f);
        let train_rows: Vec<RTObservation> = train.iter().map(|&i| frame[i].clone()).collect();
        let base = fit_linear(&train_rows, baseline)?;
        let full = fit_linear(&train_rows, &with_target)?;
        let mut sum = 0.0;
        for &i in &test {
            let d = full.pointwise_log_likelihood(&frame[i]) - base.pointwise_log_likelihood(&frame[i]);
            pointwise[i] = d;
            sum += d;
        }
        fold_deltas.push(sum / test.len() as f64);
    }
    let mean = super::mean(&fold_deltas);
    Ok(DeltaLlh { fold_deltas, mean, pointwise })
}

/// The `level` quantile of `|mean Δ_llh|` over `shuffles` seeded
/// permutations of the target column.
pub fn null_band(
    frame: &[RTObservation],
    baseline: &[Predictor],
    target: Predictor,
    folds: usize,
    seed: u64,
    shuffles: usize,
    level: f64,
) -> Result<f64, AnalysisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let column: Vec<f64> = frame.iter().map(|o| o.get(target)).collect();
    let mut means = Vec::with_capacity(shuffles);
    for _ in 0..shuffles {
        let mut shuffled = column.clone();
        shuffled.shuffle(&mut rng);
        let mut null_frame = frame.to_vec();
        for (o, v) in null_frame.iter_mut().zip(shuffled) {
            o.set(target, v);
        }
        means.push(delta_llh(&null_frame, baseline, target, folds, seed)?.mean.abs());
    }
    means.sort_by(f64::total_cmp);
    let idx = ((level * shuffles as f64).ceil() as usize).clamp(1, shuffles) - 1;
    Ok(means[idx])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::synthetic::{reading_times, SyntheticRt};

    fn obs(length: f64, freq: f64, surprisal: f64, rt: f64) -> RTObservation {
        RTObservation {
            word: "w".into(),
            sentence_idx: 0,
            word_idx: 0,
            avg_rt: rt,
            length,
            log_frequency: freq,
            surprisal,
            spillover: [0.0; 3],
        }
    }

    #[test]
    fn exact_fit_hits_the_floor() {
        let frame: Vec<RTObservation> =
            (0..20).map(|i| obs(i as f64, (i * i % 7) as f64, 0.0, 3.0 + 2.0 * i as f64 - 0.5 * (i * i % 7) as f64)).collect();
        let fit = fit_linear(&frame, &[Predictor::Length, Predictor::LogFrequency]).unwrap();
        assert!(frame.iter().all(|o| (o.avg_rt - fit.predict(o)).abs() < 1e-8));
        assert_eq!(fit.variance, VARIANCE_FLOOR);
        assert!(fit.log_likelihood.is_finite() && fit.log_likelihood > 0.0);
    }

    #[test]
    fn duplicate_columns_are_singular() {
        let frame: Vec<RTObservation> = (0..20).map(|i| obs(i as f64, i as f64, 0.0, i as f64)).collect();
        assert_eq!(fit_linear(&frame, &[Predictor::Length, Predictor::LogFrequency]), Err(AnalysisError::SingularDesign));
        assert_eq!(fit_linear(&frame, &[Predictor::Surprisal]), Err(AnalysisError::SingularDesign));
    }

    #[test]
    fn recovers_a_generating_coefficient() {
        let frame = reading_times(&SyntheticRt { n: 2000, seed: 7, ..SyntheticRt::default() });
        let fit = fit_linear(&frame, &[Predictor::Length, Predictor::LogFrequency, Predictor::Surprisal]).unwrap();
        // Closed form on the same design: β = (XᵀX)⁻¹ Xᵀ y.
        let x = DMatrix::from_fn(frame.len(), 4, |i, j| match j {
            0 => 1.0,
            1 => frame[i].length,
            2 => frame[i].log_frequency,
            _ => frame[i].surprisal,
        });
        let y = DVector::from_iterator(frame.len(), frame.iter().map(|o| o.avg_rt));
        let beta = (x.transpose() * &x).try_inverse().unwrap() * x.transpose() * y;
        for j in 0..4 {
            assert!((beta[j] - fit.coefficients[j]).abs() < 1e-6 * (1.0 + beta[j].abs()));
        }
        assert!((fit.coefficients[3] - 2.0).abs() < 3.0 * fit.std_errors[3]);
    }

    #[test]
    fn folds_partition() {
        let a = fold_assignment(103, 10, 9).unwrap();
        assert_eq!(a, fold_assignment(103, 10, 9).unwrap());
        for f in 0..10 {
            let size = a.iter().filter(|&&x| x == f).count();
            assert!(size == 10 || size == 11);
        }
        assert!(a.iter().all(|&f| f < 10));
        assert!(fold_assignment(5, 10, 0).is_err());
    }

    #[test]
    fn surprisal_helps_when_it_generates() {
        let frame = reading_times(&SyntheticRt { n: 600, seed: 2, ..SyntheticRt::default() });
        let d = delta_llh(&frame, &Predictor::BASELINE, Predictor::Surprisal, 10, 2).unwrap();
        assert!(d.mean > 0.0);
        assert_eq!(d.fold_deltas.len(), 10);
    }

    #[test]
    fn target_scale_does_not_matter() {
        let frame = reading_times(&SyntheticRt { n: 300, seed: 4, ..SyntheticRt::default() });
        let scaled: Vec<RTObservation> = frame
            .iter()
            .map(|o| {
                let mut o = o.clone();
                o.surprisal = -3.5 * o.surprisal + 11.0;
                o
            })
            .collect();
        let a = delta_llh(&frame, &Predictor::BASELINE, Predictor::Surprisal, 10, 1).unwrap();
        let b = delta_llh(&scaled, &Predictor::BASELINE, Predictor::Surprisal, 10, 1).unwrap();
        assert!((a.mean - b.mean).abs() < 1e-8);
    }
}
