//! Bootstrap and initialization-randomness ensembles, plus the two-category
//! model used to contrast them with the MP.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Samples};
use crate::engine::{EnsembleResult, Estimator, ParamVector};
use crate::error::{Error, Result};
use crate::rng::{self, McRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    ParametricBootstrap,
    NonparametricBootstrap,
    InitEnsemble,
}

impl BaselineKind {
    pub fn run<E: Estimator>(&self, estimator: &E, data: &E::Data, k: usize, seed: u64) -> Result<EnsembleResult> {
        match self {
            BaselineKind::ParametricBootstrap => parametric_bootstrap(estimator, data, k, seed),
            BaselineKind::NonparametricBootstrap => nonparametric_bootstrap(estimator, data, k, seed),
            BaselineKind::InitEnsemble => init_ensemble(estimator, data, k, seed),
        }
    }
}

fn check(k: usize, n: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::config("k", "ensemble size must be at least 1"));
    }
    if n == 0 {
        return Err(Error::input("data", "need at least one observation"));
    }
    Ok(())
}

fn collect<E: Estimator>(
    estimator: &E,
    k: usize,
    seed: u64,
    replicate: impl Fn(&mut McRng) -> Result<E::State> + Sync,
) -> Result<EnsembleResult> {
    let states: Vec<E::State> = (0..k)
        .into_par_iter()
        .map(|i| replicate(&mut rng::stream(seed, i as u64)))
        .collect::<Result<_>>()?;
    let clamps = states.iter().map(|s| estimator.clamp_events(s)).sum();
    let members = states.iter().map(|s| estimator.param(s)).collect();
    Ok(EnsembleResult::from_members(members, clamps, None))
}

/// Fits once on `data`, then each replicate refits from scratch on `n` fresh
/// samples from the fitted model, discarding the original data.
///
/// The base fit uses `rng::stream(seed, u64::MAX)`; replicate `i` uses `rng::stream(seed, i)`.
pub fn parametric_bootstrap<E: Estimator>(estimator: &E, data: &E::Data, k: usize, seed: u64) -> Result<EnsembleResult> {
    check(k, data.len())?;
    let base = estimator.init_fit(data, &mut rng::stream(seed, u64::MAX))?;
    collect(estimator, k, seed, |r| {
        let mut synthetic = data.empty_like();
        estimator.synthesize(&base, data, data.len(), &mut synthetic, r);
        estimator.init_fit(&synthetic, r)
    })
}

/// Each replicate refits from scratch on `n` points resampled with replacement.
pub fn nonparametric_bootstrap<E: Estimator>(estimator: &E, data: &E::Data, k: usize, seed: u64) -> Result<EnsembleResult> {
    check(k, data.len())?;
    let n = data.len();
    collect(estimator, k, seed, |r| {
        let idx: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
        estimator.init_fit(&data.select(&idx), r)
    })
}

/// `k` initial fits on identical data that differ only in their initialization
/// draws. Deterministic estimators yield identical members and the result is
/// flagged degenerate.
pub fn init_ensemble<E: Estimator>(estimator: &E, data: &E::Data, k: usize, seed: u64) -> Result<EnsembleResult> {
    check(k, data.len())?;
    let mut result = collect(estimator, k, seed, |r| estimator.init_fit(data, r))?;
    result.degenerate = !estimator.has_init_randomness() || result.members.iter().all(|m| m == &result.members[0]);
    Ok(result)
}

/// Wraps an estimator so that each refit starts from scratch on the newest
/// batch only. Run as an MP chain with `delta_n = cap_n = n`, this is the
/// parametric bootstrap. The inner initial fit must not need randomness
/// during refits; it is given a fixed stream.
#[derive(Debug, Clone)]
pub struct DiscardOriginal<E>(pub E);

impl<E: Estimator> Estimator for DiscardOriginal<E> {
    type Data = E::Data;
    type State = E::State;

    fn init_fit(&self, data: &E::Data, rng: &mut McRng) -> Result<E::State> {
        self.0.init_fit(data, rng)
    }

    fn synthesize(&self, state: &E::State, history: &E::Data, count: usize, out: &mut E::Data, rng: &mut McRng) {
        self.0.synthesize(state, history, count, out, rng)
    }

    fn refit(&self, data: &E::Data, new: usize, _state: E::State) -> Result<E::State> {
        let idx: Vec<usize> = (data.len() - new..data.len()).collect();
        self.0.init_fit(&data.select(&idx), &mut rng::from_seed(0))
    }

    fn param(&self, state: &E::State) -> ParamVector {
        self.0.param(state)
    }

    fn clamp_events(&self, state: &E::State) -> usize {
        self.0.clamp_events(state)
    }
}

/// Two-category model: `z1 ~ Bern(gate)` and `z2 | z1 ~ N(means[z1], 1)`.
/// Rows are `(z1, z2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RareCategoryModel {
    /// `P(z1 = 1)`, i.e. `1 - eps`.
    pub gate: f64,
}

impl RareCategoryModel {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::config("eps", "must lie in (0, 1)"));
        }
        Ok(RareCategoryModel { gate: 1.0 - eps })
    }

    pub fn sample_into(&self, means: [f64; 2], out: &mut [f64], rng: &mut McRng) {
        let cat = usize::from(rng.random::<f64>() < self.gate);
        let xi: f64 = rng.sample(StandardNormal);
        out[0] = cat as f64;
        out[1] = means[cat] + xi;
    }

    pub fn sample_n(&self, means: [f64; 2], count: usize, rng: &mut McRng) -> Samples {
        let mut out = Samples::with_capacity(2, count);
        for _ in 0..count {
            self.sample_into(means, out.push_zeroed(), rng);
        }
        out
    }
}

/// Ridge-regularized category means with the gate treated as known. The
/// parameter vector is `(mean_0, mean_1, count_0)`, where `count_0` is the
/// number of category-0 rows the fit has absorbed.
#[derive(Debug, Clone)]
pub struct RareCategoryEstimator {
    pub model: RareCategoryModel,
    pub ridge: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RareCategoryState {
    sums: [f64; 2],
    counts: [usize; 2],
}

impl RareCategoryState {
    pub fn means(&self, ridge: f64) -> [f64; 2] {
        [0, 1].map(|c| self.sums[c] / (self.counts[c] as f64 + ridge))
    }

    pub fn counts(&self) -> [usize; 2] {
        self.counts
    }

    fn absorb(&mut self, row: &[f64]) -> Result<()> {
        let cat = match row[0] {
            c if c == 0.0 => 0,
            c if c == 1.0 => 1,
            other => return Err(Error::input("z1", format!("category must be 0 or 1, got {other}"))),
        };
        self.sums[cat] += row[1];
        self.counts[cat] += 1;
        Ok(())
    }
}

impl RareCategoryEstimator {
    pub fn new(eps: f64, ridge: f64) -> Result<Self> {
        if !(ridge > 0.0) {
            return Err(Error::config("ridge", "must be positive"));
        }
        Ok(RareCategoryEstimator {
            model: RareCategoryModel::new(eps)?,
            ridge,
        })
    }
}

impl Estimator for RareCategoryEstimator {
    type Data = Samples;
    type State = RareCategoryState;

    fn init_fit(&self, data: &Samples, _rng: &mut McRng) -> Result<RareCategoryState> {
        if data.dim() != 2 {
            return Err(Error::input("data", "rows must be (category, value)"));
        }
        let mut state = RareCategoryState {
            sums: [0.0; 2],
            counts: [0; 2],
        };
        for row in data.rows() {
            state.absorb(row)?;
        }
        Ok(state)
    }

    fn synthesize(&self, state: &RareCategoryState, _history: &Samples, count: usize, out: &mut Samples, rng: &mut McRng) {
        out.clear();
        let means = state.means(self.ridge);
        for _ in 0..count {
            self.model.sample_into(means, out.push_zeroed(), rng);
        }
    }

    fn refit(&self, data: &Samples, new: usize, mut state: RareCategoryState) -> Result<RareCategoryState> {
        for i in data.len() - new..data.len() {
            state.absorb(data.row(i))?;
        }
        Ok(state)
    }

    fn param(&self, state: &RareCategoryState) -> ParamVector {
        let m = state.means(self.ridge);
        DVector::from_column_slice(&[m[0], m[1], state.counts[0] as f64])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_ensemble, MpRunConfig};
    use crate::expfam::{ExpFamilyModel, MeanParam, SeqMleEstimator};
    use crate::gp::{gapped_toy_data, AnchoredMapEstimator, GpModel, RegWeight, RffKernel, XSampler};
    use crate::linalg;
    use crate::metrics::{ks_statistic, McEstimate};

    fn gaussian_est(d: usize) -> SeqMleEstimator {
        SeqMleEstimator::new(ExpFamilyModel::gaussian_isotropic(d, 1.0).unwrap())
    }

    #[test]
    fn parametric_bootstrap_concentrates() {
        let est = gaussian_est(1);
        let n = 10_000;
        let mut r = rng::from_seed(50);
        let data = est.model.sample_n(&MeanParam::scalar(0.3), n, &mut r).unwrap();
        let theta_n = data.as_slice().iter().sum::<f64>() / n as f64;
        let k = 200;
        let res = parametric_bootstrap(&est, &data, k, 7).unwrap();
        let est_mean = McEstimate::from_draws(&res.coordinate(0));
        // Replicate means scatter with sd 1/sqrt(n) around theta_n.
        assert!((est_mean.value - theta_n).abs() < 3.0 / (n as f64).sqrt() / (k as f64).sqrt());
        assert_eq!(res, parametric_bootstrap(&est, &data, k, 7).unwrap());
    }

    #[test]
    fn parametric_bootstrap_misses_rare_category() {
        let est = RareCategoryEstimator::new(0.01, 1e-6).unwrap();
        let mut r = rng::from_seed(51);
        let data = est.model.sample_n([-1.0, 1.0], 50, &mut r);
        let k = 4000;
        let res = parametric_bootstrap(&est, &data, k, 3).unwrap();
        let missing = res.members.iter().filter(|m| m[2] == 0.0).count() as f64 / k as f64;
        assert!((missing - 0.99f64.powi(50)).abs() < 0.05, "{missing}");
        // No category-0 data means the ridge pins the mean at exactly zero.
        assert!(res.members.iter().filter(|m| m[2] == 0.0).all(|m| m[0] == 0.0));
    }

    #[test]
    fn nonparametric_bootstrap_examples() {
        let est = gaussian_est(2);
        let single = Samples::from_rows(2, &[[0.5, -1.0]]);
        let res = nonparametric_bootstrap(&est, &single, 20, 1).unwrap();
        assert!(res.members.iter().all(|m| m == &res.members[0]));
        assert_eq!(res.empirical_cov, nalgebra::DMatrix::zeros(2, 2));

        let mut r = rng::from_seed(52);
        let data = est.model.sample_n(&MeanParam::from_slice(&[0.0, 0.0]), 30, &mut r).unwrap();
        let res = nonparametric_bootstrap(&est, &data, 2000, 2).unwrap();
        let sample_mean: f64 = data.rows().map(|z| z[0]).sum::<f64>() / 30.0;
        assert!(McEstimate::from_draws(&res.coordinate(0)).within(sample_mean, 3.0));
    }

    #[test]
    fn nonparametric_bootstrap_has_no_null_space_variance() {
        let est = gaussian_est(50);
        let mut r = rng::from_seed(53);
        let data = est.model.sample_n(&MeanParam(DVector::zeros(50)), 10, &mut r).unwrap();
        let res = nonparametric_bootstrap(&est, &data, 500, 4).unwrap();
        for u in linalg::null_directions(&data, 40) {
            assert!(res.variance_along(&u) < 1e-10);
        }
    }

    /// Orthonormal directions orthogonal to the centered data.
    #[test]
    fn deterministic_init_ensemble_is_degenerate() {
        let est = gaussian_est(1);
        let data = Samples::from_scalars(&[0.1, 0.4, -0.2]);
        let res = init_ensemble(&est, &data, 10, 9).unwrap();
        assert!(res.degenerate);
        assert_eq!(res.empirical_cov[(0, 0)], 0.0);
    }

    #[test]
    fn anchored_ensemble_far_from_data_keeps_prior_variance() {
        let mut r = rng::from_seed(54);
        let kernel = RffKernel::matern32(1, 200, 1.0, &mut r).unwrap();
        let model = GpModel::new(kernel, 0.64).unwrap();
        let data = gapped_toy_data(25, (0.4, 0.6), 0.64, &mut r).unwrap();
        let est = AnchoredMapEstimator {
            model: model.clone(),
            sampler: XSampler::Empirical,
            reg: RegWeight::NoiseOverN,
        };
        let k = 2000;
        let res = init_ensemble(&est, &data, k, 11).unwrap();
        assert!(!res.degenerate);
        let far = [40.0];
        let f: Vec<f64> = res.members.iter().map(|t| model.predict(t, &far)).collect();
        let mean = f.iter().sum::<f64>() / k as f64;
        let var = f.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        // Closed form: theta = (P + wI)^-1 (Phi^T y + w anchor), so Var f(x) = w^2 |(P + wI)^-1 phi(x)|^2.
        let w = 0.64 / data.len() as f64;
        let phi = model.kernel.features(&data.xs);
        let mut system = phi.transpose() * &phi;
        for i in 0..200 {
            system[(i, i)] += w;
        }
        let phi_far = model.kernel.feature_map(&far);
        let exact = w * w * system.cholesky().unwrap().solve(&phi_far).norm_squared();
        // Sample variance of a Gaussian has relative sd sqrt(2 / (k - 1)).
        assert!((var / exact - 1.0).abs() < 3.0 * (2.0 / (k - 1) as f64).sqrt(), "{var} vs {exact}");
        // The anchor dominates: only the few directions the data pins down are lost.
        let prior = phi_far.norm_squared();
        assert!(exact > 0.8 * prior && exact <= prior, "{exact} vs {prior}");
        assert_eq!(res, init_ensemble(&est, &data, k, 11).unwrap());
    }

    #[test]
    fn discard_original_chain_is_parametric_bootstrap() {
        let est = gaussian_est(1);
        let mut r = rng::from_seed(55);
        let n = 20;
        let data = est.model.sample_n(&MeanParam::scalar(1.0), n, &mut r).unwrap();
        let k = 2000;
        let pb = parametric_bootstrap(&est, &data, k, 21).unwrap();
        let chain = run_ensemble(&DiscardOriginal(est.clone()), &data, &MpRunConfig::new(n, n, n, k, 21)).unwrap();
        let ks = ks_statistic(&pb.coordinate(0), &chain.coordinate(0)).unwrap();
        assert!(ks < 0.05, "{ks}");
    }
}
