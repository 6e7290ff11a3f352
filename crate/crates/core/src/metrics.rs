//! Diagnostics: Gaussian and empirical 2-Wasserstein distances, radius and
//! excess-error Monte Carlo, interval coverage and the enlarged-set check,
//! and the predictive scores (CRPS, NLPD, RMSE).

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::Samples;
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::McRng;

/// A model with a closed-form (or exactly samplable) Bayesian posterior.
pub trait ReferenceModel: Sync {
    fn dim(&self) -> usize;
    fn sample_prior(&self, rng: &mut McRng) -> Result<DVector<f64>>;
    fn sample_data(&self, theta: &DVector<f64>, j: usize, rng: &mut McRng) -> Result<Samples>;
    fn posterior_mean(&self, data: &Samples) -> Result<DVector<f64>>;
    fn sample_posterior(&self, data: &Samples, rng: &mut McRng) -> Result<DVector<f64>>;
    /// Squared semantic norm of a parameter difference.
    fn sq_norm(&self, v: &DVector<f64>) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub replications: usize,
}

impl McEstimate {
    pub fn exact(value: f64) -> Self {
        McEstimate {
            value,
            std_error: 0.0,
            replications: 0,
        }
    }

    /// Sample mean and its standard error.
    pub fn from_draws(draws: &[f64]) -> Self {
        let n = draws.len();
        assert!(n > 0, "no Monte Carlo draws");
        let mean = draws.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        McEstimate {
            value: mean,
            std_error,
            replications: n,
        }
    }

    /// Binomial proportion with standard error `sqrt(p (1-p) / n)`.
    pub fn proportion(successes: usize, trials: usize) -> Self {
        assert!(trials > 0, "no trials");
        let p = successes as f64 / trials as f64;
        McEstimate {
            value: p,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
            replications: trials,
        }
    }

    /// True when `target` lies within `sigmas` standard errors.
    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.value - target).abs() <= sigmas * self.std_error
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CredibleInterval {
    pub lo: f64,
    pub hi: f64,
    /// Nominal content, e.g. 0.8 for an 80% interval.
    pub level: f64,
}

impl CredibleInterval {
    pub fn new(lo: f64, hi: f64, level: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::input("interval", format!("lo ({lo}) exceeds hi ({hi})")));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::input("level", "must lie in (0, 1)"));
        }
        Ok(CredibleInterval { lo, hi, level })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Closed-interval membership.
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Central interval `mean +- z sd` of a Gaussian.
    pub fn gaussian(mean: f64, var: f64, level: f64) -> Result<Self> {
        if var < 0.0 {
            return Err(Error::input("var", "negative variance"));
        }
        let half = standard_normal_quantile(0.5 + level / 2.0) * var.sqrt();
        Self::new(mean - half, mean + half, level)
    }
}

/// How ensemble members are turned into a credible interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMode {
    /// `mean +- z sqrt(inflation) sd`.
    Gaussian,
    /// Central empirical quantiles, widened about the mean by `sqrt(inflation)`.
    EmpiricalQuantile,
}

/// Credible interval from ensemble draws of a scalar. `inflation` scales the variance.
pub fn ensemble_interval(draws: &[f64], level: f64, inflation: f64, mode: IntervalMode) -> Result<CredibleInterval> {
    if draws.is_empty() {
        return Err(Error::input("draws", "empty ensemble"));
    }
    if !(inflation > 0.0) {
        return Err(Error::input("inflation", "must be positive"));
    }
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    match mode {
        IntervalMode::Gaussian => {
            let var = if draws.len() > 1 {
                draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            CredibleInterval::gaussian(mean, inflation * var, level)
        }
        IntervalMode::EmpiricalQuantile => {
            let (lo, hi) = central_quantiles(draws, 1.0 - level)?;
            let scale = inflation.sqrt();
            CredibleInterval::new(mean + scale * (lo - mean), mean + scale * (hi - mean), level)
        }
    }
}

pub fn standard_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Linear-interpolation (type 7) quantile of unsorted data.
pub fn quantile(data: &[f64], p: f64) -> Result<f64> {
    let mut sorted = data.to_vec();
    sort(&mut sorted);
    quantile_sorted(&sorted, p)
}

fn quantile_sorted(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::input("data", "empty sample"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::input("p", "quantile level must lie in [0, 1]"));
    }
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// The `gamma/2` and `1 - gamma/2` empirical quantiles.
pub fn central_quantiles(data: &[f64], gamma: f64) -> Result<(f64, f64)> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::input("gamma", "must lie in (0, 1)"));
    }
    let mut sorted = data.to_vec();
    sort(&mut sorted);
    Ok((quantile_sorted(&sorted, gamma / 2.0)?, quantile_sorted(&sorted, 1.0 - gamma / 2.0)?))
}

fn sort(v: &mut [f64]) {
    v.sort_by(|a, b| a.total_cmp(b));
}

/// Squared 2-Wasserstein distance between `N(m1, c1)` and `N(m2, c2)`:
/// `||m1 - m2||^2 + tr(c1 + c2 - 2 (c2^1/2 c1 c2^1/2)^1/2)`.
pub fn w2_gaussian(m1: &DVector<f64>, c1: &DMatrix<f64>, m2: &DVector<f64>, c2: &DMatrix<f64>) -> Result<f64> {
    let d = m1.len();
    if m2.len() != d || c1.shape() != (d, d) || c2.shape() != (d, d) {
        return Err(Error::input("w2_gaussian", "dimension mismatch"));
    }
    let root2 = linalg::psd_sqrt(c2, "c2")?;
    // Validates c1 as PSD as well.
    linalg::psd_eigen(c1, "c1")?;
    let cross = linalg::symmetrize(&(&root2 * c1 * &root2));
    let bures = c1.trace() + c2.trace() - 2.0 * linalg::trace_sqrt_psd(&cross, "cross term")?;
    Ok(((m1 - m2).norm_squared() + bures).max(0.0))
}

/// Squared 2-Wasserstein distance between two empirical distributions on the line.
///
/// With equal sample counts this is the mean squared difference of aligned
/// order statistics. Unequal counts are handled exactly by integrating the
/// squared difference of the two step quantile functions over `(0, 1)`.
pub fn w2_empirical_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::input("samples", "empty sample"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    sort(&mut a);
    sort(&mut b);
    if a.len() == b.len() {
        let s: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
        return Ok(s / a.len() as f64);
    }
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut u = 0.0;
    let mut total = 0.0;
    while i < na && j < nb {
        let next_a = (i + 1) as f64 / na as f64;
        let next_b = (j + 1) as f64 / nb as f64;
        let next = next_a.min(next_b);
        total += (next - u) * (a[i] - b[j]).powi(2);
        u = next;
        if next_a <= next {
            i += 1;
        }
        if next_b <= next {
            j += 1;
        }
    }
    Ok(total)
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::input("samples", "empty sample"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    sort(&mut a);
    sort(&mut b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Monte Carlo estimate of the radius `E ||theta_p - posterior mean||^2` with
/// `theta_0 ~ prior`, `z_1..z_j ~ p_theta_0` and `theta_p ~ posterior`.
pub fn radius_mc<M: ReferenceModel + ?Sized>(model: &M, j: usize, reps: usize, rng: &mut McRng) -> Result<McEstimate> {
    if reps == 0 {
        return Err(Error::input("reps", "must be positive"));
    }
    let mut draws = Vec::with_capacity(reps);
    for _ in 0..reps {
        let theta0 = model.sample_prior(rng)?;
        let data = model.sample_data(&theta0, j, rng)?;
        let mean = model.posterior_mean(&data)?;
        let theta_p = model.sample_posterior(&data, rng)?;
        draws.push(model.sq_norm(&(theta_p - mean)));
    }
    Ok(McEstimate::from_draws(&draws))
}

/// Monte Carlo estimate of the excess error
/// `E[||follower_j - theta_0||^2 - ||posterior mean_j - theta_0||^2]`,
/// computed as a paired difference on shared `theta_0` and data.
pub fn excess_mc<M, F>(model: &M, follower: F, j: usize, reps: usize, rng: &mut McRng) -> Result<McEstimate>
where
    M: ReferenceModel + ?Sized,
    F: Fn(&Samples) -> Result<DVector<f64>>,
{
    if reps == 0 {
        return Err(Error::input("reps", "must be positive"));
    }
    let mut draws = Vec::with_capacity(reps);
    for _ in 0..reps {
        let theta0 = model.sample_prior(rng)?;
        let data = model.sample_data(&theta0, j, rng)?;
        let follow = follower(&data)?;
        let bayes = model.posterior_mean(&data)?;
        draws.push(model.sq_norm(&(follow - &theta0)) - model.sq_norm(&(bayes - &theta0)));
    }
    Ok(McEstimate::from_draws(&draws))
}

pub fn coverage(intervals: &[CredibleInterval], truths: &[f64]) -> Result<f64> {
    if intervals.len() != truths.len() {
        return Err(Error::input(
            "truths",
            format!("{} intervals but {} truths", intervals.len(), truths.len()),
        ));
    }
    if intervals.is_empty() {
        return Err(Error::input("intervals", "empty"));
    }
    let hits = intervals.iter().zip(truths).filter(|(iv, &t)| iv.contains(t)).count();
    Ok(hits as f64 / intervals.len() as f64)
}

/// Posterior mass of the `delta`-enlargement of the MP's central `(1 - gamma)`
/// interval, estimated from `reps` posterior draws.
pub fn enlarged_coverage<F>(mp_samples: &[f64], mut posterior_sampler: F, gamma: f64, delta: f64, reps: usize) -> Result<McEstimate>
where
    F: FnMut() -> f64,
{
    if delta < 0.0 {
        return Err(Error::input("delta", "must be non-negative"));
    }
    if reps == 0 {
        return Err(Error::input("reps", "must be positive"));
    }
    let (lo, hi) = central_quantiles(mp_samples, gamma)?;
    let (lo, hi) = (lo - delta, hi + delta);
    let hits = (0..reps)
        .filter(|_| {
            let x = posterior_sampler();
            lo <= x && x <= hi
        })
        .count();
    Ok(McEstimate::proportion(hits, reps))
}

/// Ensemble CRPS `E|Y - y| - E|Y - Y'| / 2` over all ordered member pairs.
pub fn crps_ensemble(samples: &[f64], y: f64) -> Result<f64> {
    let k = samples.len();
    if k < 2 {
        return Err(Error::input("samples", "CRPS needs at least two members"));
    }
    let mut sorted = samples.to_vec();
    sort(&mut sorted);
    let kf = k as f64;
    let abs_dev = sorted.iter().map(|x| (x - y).abs()).sum::<f64>() / kf;
    // sum_{i,j} |x_i - x_j| = 2 sum_i (2i - k + 1) x_(i) for sorted x.
    let pair_sum: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * i as f64 - kf + 1.0) * x)
        .sum::<f64>()
        * 2.0;
    Ok((abs_dev - 0.5 * pair_sum / (kf * kf)).max(0.0))
}

/// Negative log density at `y` of the equal-weight mixture of `N(means[i], vars[i])`.
pub fn nlpd_gaussian_mixture(means: &[f64], vars: &[f64], y: f64) -> Result<f64> {
    if means.is_empty() || means.len() != vars.len() {
        return Err(Error::input("members", "need equally many means and variances"));
    }
    if vars.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::input("vars", "variances must be positive"));
    }
    let logs: Vec<f64> = means
        .iter()
        .zip(vars)
        .map(|(m, v)| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (y - m).powi(2) / v))
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    Ok(-(lse - (means.len() as f64).ln()))
}

pub fn rmse(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    if predictions.len() != truths.len() || predictions.is_empty() {
        return Err(Error::input("predictions", "need equally many non-empty predictions and truths"));
    }
    let mse = predictions.iter().zip(truths).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / predictions.len() as f64;
    Ok(mse.sqrt())
}
