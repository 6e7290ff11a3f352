//! Driver for the iterative parametric bootstrap.
//!
//! A chain starts from the initial fit on the real data, then repeatedly
//! imputes a batch of `delta_n` synthetic samples from the current fit,
//! appends them, and refits warm-started at the previous parameter. After
//! `floor(cap_n / delta_n)` batches the final parameter is one ensemble
//! member; `k` independent chains form the ensemble.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{self, McRng};

pub type ParamVector = DVector<f64>;

/// A pluggable estimation algorithm: initial fit, synthetic-data generator
/// and warm-started refit.
pub trait Estimator: Sync {
    type Data: Dataset;
    /// Per-chain state; carries the parameter plus whatever the refit caches.
    type State: Clone + Send + Sync;

    /// Fit on the real data. Estimators with initialization randomness draw it from `rng`.
    fn init_fit(&self, data: &Self::Data, rng: &mut McRng) -> Result<Self::State>;

    /// Writes `count` samples from the model at `state` into `out` (cleared first).
    /// `history` is the chain's dataset so far, used by input samplers.
    fn synthesize(
        &self,
        state: &Self::State,
        history: &Self::Data,
        count: usize,
        out: &mut Self::Data,
        rng: &mut McRng,
    );

    /// Refit on `data`, whose last `new` rows were just appended, starting from `state`.
    fn refit(&self, data: &Self::Data, new: usize, state: Self::State) -> Result<Self::State>;

    fn param(&self, state: &Self::State) -> ParamVector;

    fn clamp_events(&self, _state: &Self::State) -> usize {
        0
    }

    /// Whether `init_fit` consumes randomness (anchors, random initializations).
    fn has_init_randomness(&self) -> bool {
        false
    }

    /// True when `refit` only reads the newest rows and `synthesize` ignores
    /// `history`. The engine then passes just the batch to `refit` and never
    /// grows the chain dataset.
    fn streaming(&self) -> bool {
        false
    }
}

/// `(n, Δn, N, K, seed)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpRunConfig {
    /// Number of real samples.
    pub n: usize,
    /// Synthetic samples per batch.
    pub delta_n: usize,
    /// Total synthetic horizon.
    pub cap_n: usize,
    /// Ensemble size.
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
}

impl MpRunConfig {
    pub fn new(n: usize, delta_n: usize, cap_n: usize, k: usize, seed: u64) -> Self {
        MpRunConfig {
            n,
            delta_n,
            cap_n,
            k,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n", "must be at least 1"));
        }
        if self.delta_n == 0 {
            return Err(Error::config("delta_n", "must be at least 1"));
        }
        if self.cap_n > 0 && self.delta_n > self.cap_n {
            return Err(Error::config(
                "delta_n",
                format!("delta_n ({}) exceeds cap_n ({})", self.delta_n, self.cap_n),
            ));
        }
        if self.k == 0 {
            return Err(Error::config("k", "ensemble size must be at least 1"));
        }
        Ok(())
    }

    /// Number of synthetic batches; the `cap_n mod delta_n` remainder is dropped.
    pub fn iterations(&self) -> usize {
        if self.delta_n == 0 {
            0
        } else {
            self.cap_n / self.delta_n
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainOutcome {
    pub theta: ParamVector,
    pub clamp_events: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub members: Vec<ParamVector>,
    pub empirical_mean: ParamVector,
    pub empirical_cov: DMatrix<f64>,
    pub clamp_events: usize,
    /// Covariance multiplier for credible sets; `None` when undefined for the run.
    pub inflation: Option<f64>,
    /// Set when every member is identical by construction (deterministic estimator
    /// in an initialization ensemble).
    pub degenerate: bool,
}

impl EnsembleResult {
    pub fn from_members(members: Vec<ParamVector>, clamp_events: usize, inflation: Option<f64>) -> Self {
        let (empirical_mean, empirical_cov) = linalg::mean_and_cov(&members);
        EnsembleResult {
            members,
            empirical_mean,
            empirical_cov,
            clamp_events,
            inflation,
            degenerate: false,
        }
    }

    pub fn k(&self) -> usize {
        self.members.len()
    }

    /// Values of coordinate `i` across members.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.members.iter().map(|m| m[i]).collect()
    }

    /// Variance of the projection of the members onto `direction` (divisor `K - 1`).
    pub fn variance_along(&self, direction: &DVector<f64>) -> f64 {
        let k = self.members.len();
        if k < 2 {
            return 0.0;
        }
        // Projecting members first avoids the cancellation in v^T C v.
        let proj: Vec<f64> = self.members.iter().map(|m| m.dot(direction)).collect();
        let origin = proj[0];
        let mean = origin + proj.iter().map(|p| p - origin).sum::<f64>() / k as f64;
        proj.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (k - 1) as f64
    }
}

/// Runs one chain. With `cap_n = 0` this is just the initial fit.
pub fn run_mp_chain<E: Estimator>(
    estimator: &E,
    data: &E::Data,
    config: &MpRunConfig,
    rng: &mut McRng,
) -> Result<ChainOutcome> {
    run_chain_indexed(estimator, data, config, rng, 0)
}

fn run_chain_indexed<E: Estimator>(
    estimator: &E,
    data: &E::Data,
    config: &MpRunConfig,
    rng: &mut McRng,
    chain: usize,
) -> Result<ChainOutcome> {
    let wrap = |iteration: usize| {
        move |e: Error| Error::Chain {
            chain,
            iteration,
            source: Box::new(e),
        }
    };
    let mut state = estimator.init_fit(data, rng).map_err(wrap(0))?;
    let iterations = config.iterations();
    if iterations > 0 {
        let mut batch = data.empty_like();
        if estimator.streaming() {
            for it in 1..=iterations {
                estimator.synthesize(&state, data, config.delta_n, &mut batch, rng);
                state = estimator.refit(&batch, batch.len(), state).map_err(wrap(it))?;
            }
        } else {
            let mut dataset = data.clone();
            for it in 1..=iterations {
                estimator.synthesize(&state, &dataset, config.delta_n, &mut batch, rng);
                dataset.extend_from(&batch);
                state = estimator
                    .refit(&dataset, batch.len(), state)
                    .map_err(wrap(it))?;
            }
        }
    }
    Ok(ChainOutcome {
        theta: estimator.param(&state),
        clamp_events: estimator.clamp_events(&state),
    })
}

/// Runs `k` independent chains; chain `i` uses `rng::stream(seed, i)`. Chains may
/// execute in parallel; members are always ordered by chain index.
pub fn run_ensemble<E: Estimator>(
    estimator: &E,
    data: &E::Data,
    config: &MpRunConfig,
) -> Result<EnsembleResult> {
    config.validate()?;
    if data.len() != config.n {
        return Err(Error::config(
            "n",
            format!("config says n = {} but data has {} points", config.n, data.len()),
        ));
    }
    let rem = config.cap_n % config.delta_n;
    if rem != 0 {
        log::debug!("dropping {rem} leftover synthetic samples (cap_n mod delta_n)");
    }
    let outcomes: Vec<ChainOutcome> = (0..config.k)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(config.seed, i as u64);
            run_chain_indexed(estimator, data, config, &mut rng, i)
        })
        .collect::<Result<_>>()?;
    let clamp_events = outcomes.iter().map(|o| o.clamp_events).sum();
    let members = outcomes.into_iter().map(|o| o.theta).collect();
    let inflation = if config.cap_n > 0 {
        inflation_factor(config.n, config.delta_n, config.cap_n).ok()
    } else {
        None
    };
    Ok(EnsembleResult::from_members(members, clamp_events, inflation))
}

/// Covariance multiplier that maps the truncated, batched ensemble covariance
/// `(1/(n+Δn) - 1/(N+Δn)) F^-1` back to the untruncated one-sample scale `F^-1 / n`.
pub fn inflation_factor(n: usize, delta_n: usize, cap_n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::config("n", "must be at least 1"));
    }
    if delta_n == 0 {
        return Err(Error::config("delta_n", "must be at least 1"));
    }
    if cap_n == 0 {
        return Err(Error::config("cap_n", "inflation needs a positive horizon"));
    }
    let (n, dn, cap) = (n as f64, delta_n as f64, cap_n as f64);
    let coeff = 1.0 / (n + dn) - 1.0 / (cap + dn);
    if coeff <= 0.0 {
        return Err(Error::config(
            "cap_n",
            "horizon must exceed n for the ensemble covariance to be positive",
        ));
    }
    Ok((1.0 / n) / coeff)
}

/// First-order approximation `1 + Δn/n + n/N` of [`inflation_factor`]; a heuristic only.
pub fn inflation_first_order(n: usize, delta_n: usize, cap_n: usize) -> f64 {
    1.0 + delta_n as f64 / n as f64 + n as f64 / cap_n as f64
}

/// Exact across-chain variance coefficient of batched sequential MLE:
/// `sum_{b=1}^{B} Δn / (n + bΔn)^2` with `B = floor(N/Δn)`.
pub fn batched_variance_coefficient(n: usize, delta_n: usize, cap_n: usize) -> f64 {
    let batches = if delta_n == 0 { 0 } else { cap_n / delta_n };
    let (n, dn) = (n as f64, delta_n as f64);
    (1..=batches)
        .map(|b| {
            let c = n + b as f64 * dn;
            dn / (c * c)
        })
        .sum()
}

/// One step of a deterministic online algorithm driven by self-generated data.
pub trait OnlineRule {
    /// Draws one observation from the model at `theta`.
    fn draw(&self, theta: &ParamVector, rng: &mut McRng) -> DVector<f64>;

    /// Applies the `j`-th update to `theta` with observation `z`.
    fn apply(&self, theta: &ParamVector, z: &DVector<f64>, j: usize) -> Result<ParamVector>;
}

/// Samples `z ~ p_theta` and applies the rule's `j`-th update.
pub fn online_mp_step<R: OnlineRule + ?Sized>(
    rule: &R,
    theta: &ParamVector,
    j: usize,
    rng: &mut McRng,
) -> Result<ParamVector> {
    let z = rule.draw(theta, rng);
    rule.apply(theta, &z, j)
}
