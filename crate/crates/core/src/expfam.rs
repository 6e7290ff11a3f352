//! Exponential-family models in mean parametrization: Gaussian with known
//! covariance, Bernoulli and exponential (mean = 1/rate), with their conjugate
//! priors, sequential MLE and the matching MP estimator.
//!
//! Bernoulli and exponential models of dimension `d` are products of `d`
//! independent scalar coordinates. Every family uses the identity sufficient
//! statistic `T(z) = z`, so the mean parameter is `E[z]`.
//!
//! The conjugate prior with strength `alpha` and pseudo-statistic `theta_pi`
//! has density `exp(eta . theta_pi - alpha A(eta))` in the natural parameter.
//! After `j` observations it becomes `(alpha + j, theta_pi + sum T(z_i))` and
//! the posterior mean of the mean parameter is `(theta_pi + sum T(z_i)) / (alpha + j)`.
//! Concretely:
//!
//! - Gaussian: `theta ~ N(theta_pi / alpha, cov / alpha)`.
//! - Bernoulli: `p ~ Beta(theta_pi, alpha - theta_pi)`.
//! - Exponential: `rate ~ Gamma(alpha + 1, theta_pi)` (shape, rate) and `theta = 1 / rate`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1, Gamma, StandardNormal};

use crate::data::{Dataset, Samples};
use crate::engine::{Estimator, OnlineRule, ParamVector};
use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics::ReferenceModel;
use crate::rng::McRng;

/// Bernoulli means are kept in `[MEAN_FLOOR, 1 - MEAN_FLOOR]`, exponential means in `[MEAN_FLOOR, inf)`.
pub const MEAN_FLOOR: f64 = 1e-9;

const MIN_COV_EIGENVALUE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    GaussianKnownCov {
        cov: DMatrix<f64>,
        /// Lower Cholesky factor of `cov`.
        chol: DMatrix<f64>,
        precision: DMatrix<f64>,
        /// Per-coordinate standard deviations when `cov` is diagonal.
        diag_sd: Option<Vec<f64>>,
    },
    Bernoulli,
    ExponentialRate,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::GaussianKnownCov { .. } => "gaussian_known_cov",
            Family::Bernoulli => "bernoulli",
            Family::ExponentialRate => "exponential_rate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpFamilyModel {
    family: Family,
    dim: usize,
}

/// A mean parameter `E[T(z)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanParam(pub DVector<f64>);

impl MeanParam {
    pub fn from_slice(v: &[f64]) -> Self {
        MeanParam(DVector::from_column_slice(v))
    }

    pub fn scalar(v: f64) -> Self {
        MeanParam(DVector::from_element(1, v))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugatePrior {
    pub alpha: f64,
    pub theta_pi: DVector<f64>,
}

impl ConjugatePrior {
    pub fn new(alpha: f64, theta_pi: DVector<f64>) -> Self {
        ConjugatePrior { alpha, theta_pi }
    }

    /// The prior mean of the mean parameter, `theta_pi / alpha`.
    pub fn mean(&self) -> DVector<f64> {
        &self.theta_pi / self.alpha
    }
}

/// Gaussian summary (mean, covariance) of a posterior over the mean parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGaussianSummary {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// True when the posterior is exactly Gaussian; otherwise these are its first two moments.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugatePosterior {
    /// The prior hyperparameters after absorbing the data.
    pub updated: ConjugatePrior,
    pub count: usize,
    pub summary: PosteriorGaussianSummary,
}

/// Result of one sequential-MLE step.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqMleStep {
    pub theta: MeanParam,
    /// Number of coordinates that had to be clamped back into the mean domain.
    pub clamped: usize,
}

impl ExpFamilyModel {
    /// `N(theta, cov)` with known symmetric positive definite `cov`.
    pub fn gaussian(cov: DMatrix<f64>) -> Result<Self> {
        if !cov.is_square() || cov.nrows() == 0 {
            return Err(Error::input("cov", "must be a non-empty square matrix"));
        }
        if !linalg::is_symmetric(&cov, 1e-12) {
            return Err(Error::input("cov", "must be symmetric"));
        }
        let min_eig = cov.symmetric_eigenvalues().min();
        if min_eig <= MIN_COV_EIGENVALUE {
            return Err(Error::input(
                "cov",
                format!("must be positive definite (smallest eigenvalue {min_eig:e})"),
            ));
        }
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::input("cov", "Cholesky factorization failed"))?;
        let precision = chol.inverse();
        let dim = cov.nrows();
        let is_diag = (0..dim).all(|i| (0..dim).all(|j| i == j || cov[(i, j)] == 0.0));
        let diag_sd = is_diag.then(|| (0..dim).map(|i| cov[(i, i)].sqrt()).collect());
        Ok(ExpFamilyModel {
            family: Family::GaussianKnownCov {
                chol: chol.l(),
                cov,
                precision,
                diag_sd,
            },
            dim,
        })
    }

    pub fn gaussian_isotropic(dim: usize, variance: f64) -> Result<Self> {
        Self::gaussian(DMatrix::identity(dim, dim) * variance)
    }

    pub fn bernoulli(dim: usize) -> Result<Self> {
        Self::product(Family::Bernoulli, dim)
    }

    pub fn exponential_rate(dim: usize) -> Result<Self> {
        Self::product(Family::ExponentialRate, dim)
    }

    fn product(family: Family, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("dim", "must be positive"));
        }
        Ok(ExpFamilyModel { family, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    fn check_len(&self, what: &'static str, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::input(what, format!("expected length {}, got {len}", self.dim)));
        }
        Ok(())
    }

    fn check_datum(&self, z: &[f64]) -> Result<()> {
        self.check_len("z", z.len())?;
        let ok = match self.family {
            Family::GaussianKnownCov { .. } => z.iter().all(|v| v.is_finite()),
            Family::Bernoulli => z.iter().all(|&v| v == 0.0 || v == 1.0),
            Family::ExponentialRate => z.iter().all(|&v| v.is_finite() && v > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::input("z", format!("outside the {} data domain", self.family.name())))
        }
    }

    /// Rejects means outside the closure of the domain; boundary values are accepted
    /// (and clamped by the operations that need interior points).
    fn check_mean(&self, theta: &[f64]) -> Result<()> {
        self.check_len("theta", theta.len())?;
        let ok = match self.family {
            Family::GaussianKnownCov { .. } => theta.iter().all(|v| v.is_finite()),
            Family::Bernoulli => theta.iter().all(|&v| (0.0..=1.0).contains(&v)),
            Family::ExponentialRate => theta.iter().all(|&v| v.is_finite() && v >= 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::input("theta", format!("outside the {} mean domain", self.family.name())))
        }
    }

    /// Clamps `theta` into the mean domain in place; returns the number of clamped coordinates.
    pub fn clamp(&self, theta: &mut [f64]) -> usize {
        let mut hits = 0;
        match self.family {
            Family::GaussianKnownCov { .. } => {}
            Family::Bernoulli => {
                for v in theta.iter_mut() {
                    let c = v.clamp(MEAN_FLOOR, 1.0 - MEAN_FLOOR);
                    if c != *v {
                        *v = c;
                        hits += 1;
                    }
                }
            }
            Family::ExponentialRate => {
                for v in theta.iter_mut() {
                    if *v < MEAN_FLOOR {
                        *v = MEAN_FLOOR;
                        hits += 1;
                    }
                }
            }
        }
        hits
    }

    pub fn sufficient_stat(&self, z: &[f64]) -> Result<DVector<f64>> {
        self.check_datum(z)?;
        Ok(DVector::from_column_slice(z))
    }

    pub fn sample(&self, theta: &MeanParam, rng: &mut McRng) -> Result<DVector<f64>> {
        self.check_mean(theta.0.as_slice())?;
        let mut t = theta.0.clone();
        self.clamp(t.as_mut_slice());
        let mut out = DVector::zeros(self.dim);
        self.sample_into(t.as_slice(), out.as_mut_slice(), rng);
        Ok(out)
    }

    /// Fills `out` (a whole number of rows) with independent draws at `theta`.
    #[inline]
    pub fn sample_rows_into(&self, theta: &[f64], out: &mut [f64], rng: &mut McRng) {
        if let Family::GaussianKnownCov {
            diag_sd: Some(sd), ..
        } = &self.family
        {
            for row in out.chunks_exact_mut(self.dim) {
                for ((o, &t), &s) in row.iter_mut().zip(theta).zip(sd) {
                    let xi: f64 = rng.sample(StandardNormal);
                    *o = t + s * xi;
                }
            }
        } else {
            for row in out.chunks_exact_mut(self.dim) {
                self.sample_into(theta, row, rng);
            }
        }
    }

    /// Draws one observation into `out`; `theta` must already be in the (clamped) domain.
    #[inline]
    pub fn sample_into(&self, theta: &[f64], out: &mut [f64], rng: &mut McRng) {
        match &self.family {
            Family::GaussianKnownCov {
                diag_sd: Some(sd), ..
            } => {
                for ((o, &t), &s) in out.iter_mut().zip(theta).zip(sd) {
                    let xi: f64 = rng.sample(StandardNormal);
                    *o = t + s * xi;
                }
            }
            Family::GaussianKnownCov { chol, .. } => {
                for o in out.iter_mut() {
                    *o = rng.sample(StandardNormal);
                }
                // out <- theta + L xi, bottom row first so xi[..=i] is still intact.
                for i in (0..self.dim).rev() {
                    let mut acc = theta[i];
                    for k in 0..=i {
                        acc += chol[(i, k)] * out[k];
                    }
                    out[i] = acc;
                }
            }
            Family::Bernoulli => {
                for (o, &p) in out.iter_mut().zip(theta) {
                    *o = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
                }
            }
            Family::ExponentialRate => {
                for (o, &m) in out.iter_mut().zip(theta) {
                    let e: f64 = rng.sample(Exp1);
                    *o = m * e;
                }
            }
        }
    }

    /// Draws `count` observations at `theta` into a new sample set.
    pub fn sample_n(&self, theta: &MeanParam, count: usize, rng: &mut McRng) -> Result<Samples> {
        self.check_mean(theta.0.as_slice())?;
        let mut t = theta.0.clone();
        self.clamp(t.as_mut_slice());
        let mut out = Samples::with_capacity(self.dim, count);
        for _ in 0..count {
            let row = out.push_zeroed();
            self.sample_into(t.as_slice(), row, rng);
        }
        Ok(out)
    }

    /// `theta_j = theta_{j-1} + (T(z_j) - theta_{j-1}) / j`, then clamped.
    pub fn seq_mle_update(&self, theta_prev: &MeanParam, z: &[f64], j: usize) -> Result<SeqMleStep> {
        if j == 0 {
            return Err(Error::input("j", "must be at least 1"));
        }
        self.check_mean(theta_prev.0.as_slice())?;
        let t = self.sufficient_stat(z)?;
        let mut theta = &theta_prev.0 + (t - &theta_prev.0) / j as f64;
        let clamped = self.clamp(theta.as_mut_slice());
        Ok(SeqMleStep {
            theta: MeanParam(theta),
            clamped,
        })
    }

    fn check_prior(&self, prior: &ConjugatePrior) -> Result<()> {
        if !(prior.alpha > 0.0 && prior.alpha.is_finite()) {
            return Err(Error::input("alpha", "prior strength must be positive and finite"));
        }
        self.check_len("theta_pi", prior.theta_pi.len())?;
        let ok = match self.family {
            Family::GaussianKnownCov { .. } => prior.theta_pi.iter().all(|v| v.is_finite()),
            Family::Bernoulli => prior.theta_pi.iter().all(|&v| v >= 0.0 && v <= prior.alpha),
            Family::ExponentialRate => prior.theta_pi.iter().all(|&v| v.is_finite() && v >= 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::input(
                "theta_pi",
                "prior pseudo-statistic outside the closure of the mean domain",
            ))
        }
    }

    pub fn conjugate_posterior(&self, prior: &ConjugatePrior, data: &Samples) -> Result<ConjugatePosterior> {
        self.check_prior(prior)?;
        if !data.is_empty() && data.dim() != self.dim {
            return Err(Error::input("data", "dimension does not match the model"));
        }
        let mut stat_sum = prior.theta_pi.clone();
        for z in data.rows() {
            stat_sum += self.sufficient_stat(z)?;
        }
        let updated = ConjugatePrior::new(prior.alpha + data.len() as f64, stat_sum);
        let summary = self.posterior_summary(&updated);
        Ok(ConjugatePosterior {
            updated,
            count: data.len(),
            summary,
        })
    }

    fn posterior_summary(&self, post: &ConjugatePrior) -> PosteriorGaussianSummary {
        let a = post.alpha;
        let mean = post.mean();
        match &self.family {
            Family::GaussianKnownCov { cov, .. } => PosteriorGaussianSummary {
                mean,
                cov: cov / a,
                exact: true,
            },
            Family::Bernoulli => {
                let var = post.theta_pi.map(|s| {
                    let (pa, pb) = (s, a - s);
                    pa * pb / (a * a * (a + 1.0))
                });
                PosteriorGaussianSummary {
                    mean,
                    cov: DMatrix::from_diagonal(&var),
                    exact: false,
                }
            }
            Family::ExponentialRate => {
                // theta = 1/rate with rate ~ Gamma(a + 1, s): Var = s^2 / (a^2 (a - 1)).
                let var = post
                    .theta_pi
                    .map(|s| if a > 1.0 { s * s / (a * a * (a - 1.0)) } else { f64::INFINITY });
                PosteriorGaussianSummary {
                    mean,
                    cov: DMatrix::from_diagonal(&var),
                    exact: false,
                }
            }
        }
    }

    /// One exact draw of the mean parameter from a conjugate posterior (or prior).
    pub fn posterior_sample(&self, posterior: &ConjugatePrior, rng: &mut McRng) -> Result<MeanParam> {
        self.check_prior(posterior)?;
        let a = posterior.alpha;
        let mut out = DVector::zeros(self.dim);
        match &self.family {
            Family::GaussianKnownCov { chol, .. } => {
                let xi = DVector::from_fn(self.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                out = posterior.mean() + chol * xi / a.sqrt();
            }
            Family::Bernoulli => {
                for (o, &s) in out.iter_mut().zip(posterior.theta_pi.iter()) {
                    let beta = Beta::new(s, a - s).map_err(|_| {
                        Error::input("posterior", format!("improper Beta({s}, {}) posterior", a - s))
                    })?;
                    *o = beta.sample(rng);
                }
            }
            Family::ExponentialRate => {
                for (o, &s) in out.iter_mut().zip(posterior.theta_pi.iter()) {
                    if s <= 0.0 {
                        return Err(Error::input("posterior", "Gamma posterior needs a positive rate"));
                    }
                    let gamma = Gamma::new(a + 1.0, 1.0 / s)
                        .map_err(|e| Error::input("posterior", e.to_string()))?;
                    let rate: f64 = gamma.sample(rng);
                    *o = 1.0 / rate;
                }
            }
        }
        Ok(MeanParam(out))
    }

    /// Closed-form radius `tr(cov) / (j + alpha)`; Gaussian family only.
    pub fn radius_closed_form(&self, prior: &ConjugatePrior, j: usize) -> Result<f64> {
        self.check_prior(prior)?;
        match &self.family {
            Family::GaussianKnownCov { cov, .. } => Ok(cov.trace() / (j as f64 + prior.alpha)),
            other => Err(Error::UnsupportedFamily {
                family: other.name(),
                operation: "radius_closed_form (use metrics::radius_mc)",
            }),
        }
    }

    /// Fisher information in the mean parametrization.
    pub fn fisher_info(&self, theta: &MeanParam) -> Result<DMatrix<f64>> {
        self.check_mean(theta.0.as_slice())?;
        match &self.family {
            Family::GaussianKnownCov { precision, .. } => Ok(precision.clone()),
            Family::Bernoulli => {
                if theta.0.iter().any(|&p| p <= 0.0 || p >= 1.0) {
                    return Err(Error::Numerical("Bernoulli Fisher information is singular at the boundary".into()));
                }
                Ok(DMatrix::from_diagonal(&theta.0.map(|p| 1.0 / (p * (1.0 - p)))))
            }
            Family::ExponentialRate => {
                if theta.0.iter().any(|&m| m <= 0.0) {
                    return Err(Error::Numerical("exponential Fisher information is singular at 0".into()));
                }
                Ok(DMatrix::from_diagonal(&theta.0.map(|m| 1.0 / (m * m))))
            }
        }
    }

    /// `grad_theta log p_theta(z)` in the mean parametrization; equals `F(theta) (z - theta)`.
    pub fn log_lik_grad(&self, theta: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        let resid = z - theta;
        match &self.family {
            Family::GaussianKnownCov { precision, .. } => precision * resid,
            Family::Bernoulli => resid.zip_map(theta, |r, p| r / (p * (1.0 - p))),
            Family::ExponentialRate => resid.zip_map(theta, |r, m| r / (m * m)),
        }
    }
}

/// Sequential MLE as an MP estimator: the initial fit is the sample mean of the
/// sufficient statistics and every refit continues the running mean.
#[derive(Debug, Clone)]
pub struct SeqMleEstimator {
    pub model: ExpFamilyModel,
}

#[derive(Debug, Clone)]
pub struct SeqMleState {
    pub theta: DVector<f64>,
    pub count: usize,
    pub clamps: usize,
}

impl SeqMleEstimator {
    pub fn new(model: ExpFamilyModel) -> Self {
        SeqMleEstimator { model }
    }
}

impl Estimator for SeqMleEstimator {
    type Data = Samples;
    type State = SeqMleState;

    fn init_fit(&self, data: &Samples, _rng: &mut McRng) -> Result<SeqMleState> {
        if data.is_empty() {
            return Err(Error::input("data", "sequential MLE needs at least one observation"));
        }
        let mut theta = DVector::zeros(self.model.dim());
        let mut clamps = 0;
        for (i, z) in data.rows().enumerate() {
            let step = self.model.seq_mle_update(&MeanParam(theta), z, i + 1)?;
            theta = step.theta.0;
            clamps += step.clamped;
        }
        Ok(SeqMleState {
            theta,
            count: data.len(),
            clamps,
        })
    }

    #[inline]
    fn synthesize(&self, state: &SeqMleState, _history: &Samples, count: usize, out: &mut Samples, rng: &mut McRng) {
        out.resize_rows(count);
        self.model
            .sample_rows_into(state.theta.as_slice(), out.as_mut_slice(), rng);
    }

    #[inline]
    fn refit(&self, data: &Samples, new: usize, mut state: SeqMleState) -> Result<SeqMleState> {
        let theta = state.theta.as_mut_slice();
        let bounded = !matches!(self.model.family, Family::GaussianKnownCov { .. });
        let mut count = state.count;
        for z in data.tail(data.len() - new).chunks_exact(self.model.dim) {
            count += 1;
            let step = 1.0 / count as f64;
            for (t, &zi) in theta.iter_mut().zip(z) {
                *t += step * (zi - *t);
            }
            if bounded {
                state.clamps += self.model.clamp(theta);
            }
        }
        state.count = count;
        Ok(state)
    }

    fn param(&self, state: &SeqMleState) -> ParamVector {
        state.theta.clone()
    }

    fn clamp_events(&self, state: &SeqMleState) -> usize {
        state.clamps
    }

    fn streaming(&self) -> bool {
        true
    }
}

/// An exponential-family model paired with its conjugate prior; the closed-form
/// reference posterior for radius and excess-error Monte Carlo.
#[derive(Debug, Clone)]
pub struct ConjugateModel {
    pub model: ExpFamilyModel,
    pub prior: ConjugatePrior,
}

impl ReferenceModel for ConjugateModel {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn sample_prior(&self, rng: &mut McRng) -> Result<DVector<f64>> {
        let mut theta = self.model.posterior_sample(&self.prior, rng)?.0;
        self.model.clamp(theta.as_mut_slice());
        Ok(theta)
    }

    fn sample_data(&self, theta: &DVector<f64>, j: usize, rng: &mut McRng) -> Result<Samples> {
        self.model.sample_n(&MeanParam(theta.clone()), j, rng)
    }

    fn posterior_mean(&self, data: &Samples) -> Result<DVector<f64>> {
        Ok(self.model.conjugate_posterior(&self.prior, data)?.summary.mean)
    }

    fn sample_posterior(&self, data: &Samples, rng: &mut McRng) -> Result<DVector<f64>> {
        let post = self.model.conjugate_posterior(&self.prior, data)?;
        Ok(self.model.posterior_sample(&post.updated, rng)?.0)
    }

    fn sq_norm(&self, v: &DVector<f64>) -> f64 {
        v.norm_squared()
    }
}

/// Sequential MLE as a one-sample online rule.
pub struct SeqMleRule<'a>(pub &'a ExpFamilyModel);

impl OnlineRule for SeqMleRule<'_> {
    fn draw(&self, theta: &ParamVector, rng: &mut McRng) -> DVector<f64> {
        let mut z = DVector::zeros(self.0.dim());
        self.0.sample_into(theta.as_slice(), z.as_mut_slice(), rng);
        z
    }

    fn apply(&self, theta: &ParamVector, z: &DVector<f64>, j: usize) -> Result<ParamVector> {
        Ok(self.0.seq_mle_update(&MeanParam(theta.clone()), z.as_slice(), j)?.theta.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Constant(f64),
    /// `1 / j`.
    Harmonic,
}

impl StepSize {
    pub fn at(&self, j: usize) -> f64 {
        match *self {
            StepSize::Constant(eta) => eta,
            StepSize::Harmonic => 1.0 / j as f64,
        }
    }
}

/// Online gradient ascent on the log-likelihood, `theta + eta_j grad log p_theta(z)`.
pub struct GradientRule<'a> {
    pub model: &'a ExpFamilyModel,
    pub step: StepSize,
}

impl OnlineRule for GradientRule<'_> {
    fn draw(&self, theta: &ParamVector, rng: &mut McRng) -> DVector<f64> {
        SeqMleRule(self.model).draw(theta, rng)
    }

    fn apply(&self, theta: &ParamVector, z: &DVector<f64>, j: usize) -> Result<ParamVector> {
        let eta = self.step.at(j);
        if eta == 0.0 {
            return Ok(theta.clone());
        }
        let mut next = theta + self.model.log_lik_grad(theta, z) * eta;
        self.model.clamp(next.as_mut_slice());
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{radius_mc, McEstimate};
    use crate::rng;
    use proptest::prelude::*;

    fn gauss1() -> ExpFamilyModel {
        ExpFamilyModel::gaussian_isotropic(1, 1.0).unwrap()
    }

    #[test]
    fn sufficient_stat_is_identity() {
        let g = ExpFamilyModel::gaussian_isotropic(2, 1.0).unwrap();
        assert_eq!(g.sufficient_stat(&[1.5, -0.5]).unwrap().as_slice(), &[1.5, -0.5]);
        let b = ExpFamilyModel::bernoulli(1).unwrap();
        assert_eq!(b.sufficient_stat(&[1.0]).unwrap()[0], 1.0);
        assert!(b.sufficient_stat(&[0.5]).is_err());
        let e = ExpFamilyModel::exponential_rate(1).unwrap();
        assert_eq!(e.sufficient_stat(&[2.0]).unwrap()[0], 2.0);
        assert!(e.sufficient_stat(&[-1.0]).is_err());
    }

    #[test]
    fn gaussian_cov_must_be_spd() {
        assert!(ExpFamilyModel::gaussian(DMatrix::zeros(1, 1)).is_err());
        assert!(ExpFamilyModel::gaussian(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
    }

    #[test]
    fn bernoulli_near_one_samples_ones() {
        let b = ExpFamilyModel::bernoulli(1).unwrap();
        let theta = MeanParam::scalar(1.0 - 1e-15);
        let mut r = rng::from_seed(1);
        let reps = 100_000;
        let ones: usize = (0..reps).map(|_| b.sample(&theta, &mut r).unwrap()[0] as usize).sum();
        // The mean is clamped to 1 - 1e-9, so the binomial band is essentially a point.
        let p = 1.0 - MEAN_FLOOR;
        let sd = (p * (1.0 - p) / reps as f64).sqrt();
        assert!((ones as f64 / reps as f64 - p).abs() <= 3.0 * sd + 1.0 / reps as f64);
    }

    #[test]
    fn exponential_sample_mean() {
        let e = ExpFamilyModel::exponential_rate(1).unwrap();
        let mut r = rng::from_seed(2);
        let reps = 100_000;
        let s = e.sample_n(&MeanParam::scalar(2.0), reps, &mut r).unwrap();
        let mean = s.as_slice().iter().sum::<f64>() / reps as f64;
        assert!((mean - 2.0).abs() < 3.0 * 2.0 / (reps as f64).sqrt());
    }

    #[test]
    fn seq_mle_examples() {
        let g = gauss1();
        let first = g.seq_mle_update(&MeanParam::scalar(-7.0), &[2.0], 1).unwrap();
        assert_eq!(first.theta.0[0], 2.0);
        let second = g.seq_mle_update(&MeanParam::scalar(2.0), &[4.0], 2).unwrap();
        assert_eq!(second.theta.0[0], 3.0);
        let mut theta = MeanParam::scalar(0.0);
        for (j, z) in [1.0, 2.0, 3.0, 4.0, 5.0].iter().enumerate() {
            theta = g.seq_mle_update(&theta, &[*z], j + 1).unwrap().theta;
        }
        assert_eq!(theta.0[0], 3.0);
        assert!(g.seq_mle_update(&theta, &[1.0], 0).is_err());
    }

    #[test]
    fn seq_mle_clamps_bernoulli() {
        let b = ExpFamilyModel::bernoulli(1).unwrap();
        let step = b.seq_mle_update(&MeanParam::scalar(0.5), &[0.0], 1).unwrap();
        assert_eq!(step.theta.0[0], MEAN_FLOOR);
        assert_eq!(step.clamped, 1);
    }

    #[test]
    fn conjugate_examples() {
        let g = gauss1();
        let prior = ConjugatePrior::new(1.0, DVector::from_element(1, 0.0));
        let post = g.conjugate_posterior(&prior, &Samples::from_scalars(&[1.0])).unwrap();
        assert!((post.summary.mean[0] - 0.5).abs() < 1e-15);
        assert!((post.summary.cov[(0, 0)] - 0.5).abs() < 1e-15);
        assert!(post.summary.exact);

        let empty = g.conjugate_posterior(&prior, &Samples::new(1)).unwrap();
        assert_eq!(empty.updated, prior);

        let b = ExpFamilyModel::bernoulli(1).unwrap();
        let bprior = ConjugatePrior::new(2.0, DVector::from_element(1, 1.0));
        let bpost = b.conjugate_posterior(&bprior, &Samples::from_scalars(&[1.0, 1.0, 0.0])).unwrap();
        assert!((bpost.summary.mean[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn posterior_sample_moments() {
        let g = gauss1();
        let post = ConjugatePrior::new(2.0, DVector::from_element(1, 1.0));
        let mut r = rng::from_seed(3);
        let reps = 100_000;
        let draws: Vec<f64> = (0..reps).map(|_| g.posterior_sample(&post, &mut r).unwrap().0[0]).collect();
        let est = McEstimate::from_draws(&draws);
        assert!((est.value - 0.5).abs() < 3.0 * (0.5f64 / reps as f64).sqrt());

        // Beta(4, 2) in the (alpha, theta_pi) parametrization is alpha = 6, theta_pi = 4.
        let b = ExpFamilyModel::bernoulli(1).unwrap();
        let beta = ConjugatePrior::new(6.0, DVector::from_element(1, 4.0));
        let draws: Vec<f64> = (0..reps).map(|_| b.posterior_sample(&beta, &mut r).unwrap().0[0]).collect();
        let est = McEstimate::from_draws(&draws);
        let sd = (4.0 * 2.0 / (36.0 * 7.0) / reps as f64).sqrt();
        assert!((est.value - 2.0 / 3.0).abs() < 3.0 * sd);
    }

    #[test]
    fn exponential_posterior_mean_matches_summary() {
        let e = ExpFamilyModel::exponential_rate(1).unwrap();
        let post = ConjugatePrior::new(5.0, DVector::from_element(1, 10.0));
        let summary = e.conjugate_posterior(&post, &Samples::new(1)).unwrap().summary;
        let mut r = rng::from_seed(4);
        let draws: Vec<f64> = (0..100_000).map(|_| e.posterior_sample(&post, &mut r).unwrap().0[0]).collect();
        let est = McEstimate::from_draws(&draws);
        assert!(est.within(summary.mean[0], 3.0), "{est:?} vs {}", summary.mean[0]);
    }

    #[test]
    fn radius_examples() {
        let g = gauss1();
        let prior = ConjugatePrior::new(1.0, DVector::zeros(1));
        assert_eq!(g.radius_closed_form(&prior, 1).unwrap(), 0.5);
        let g5 = ExpFamilyModel::gaussian_isotropic(5, 1.0).unwrap();
        let prior5 = ConjugatePrior::new(1.0, DVector::zeros(5));
        assert_eq!(g5.radius_closed_form(&prior5, 9).unwrap(), 0.5);
        let mut last = f64::INFINITY;
        for j in [1, 10, 100, 1000] {
            let r = g5.radius_closed_form(&prior5, j).unwrap();
            assert!(r < last);
            last = r;
        }
        let b = ExpFamilyModel::bernoulli(1).unwrap();
        let bprior = ConjugatePrior::new(2.0, DVector::from_element(1, 1.0));
        assert!(matches!(b.radius_closed_form(&bprior, 1), Err(Error::UnsupportedFamily { .. })));
    }

    #[test]
    fn radius_mc_agrees_with_closed_form() {
        let model = ConjugateModel {
            model: gauss1(),
            prior: ConjugatePrior::new(1.0, DVector::zeros(1)),
        };
        let mut r = rng::from_seed(5);
        let est = radius_mc(&model, 1, 10_000, &mut r).unwrap();
        assert!(est.within(0.5, 3.0), "{est:?}");
    }

    #[test]
    fn fisher_examples() {
        let g = ExpFamilyModel::gaussian_isotropic(2, 1.0).unwrap();
        assert_eq!(g.fisher_info(&MeanParam::from_slice(&[0.3, 9.0])).unwrap(), DMatrix::identity(2, 2));
        let b = ExpFamilyModel::bernoulli(1).unwrap();
        assert_eq!(b.fisher_info(&MeanParam::scalar(0.5)).unwrap()[(0, 0)], 4.0);
        let e = ExpFamilyModel::exponential_rate(1).unwrap();
        assert_eq!(e.fisher_info(&MeanParam::scalar(2.0)).unwrap()[(0, 0)], 0.25);
        assert!(b.fisher_info(&MeanParam::scalar(1.0)).is_err());
    }

    #[test]
    fn seq_mle_is_a_martingale() {
        let g = gauss1();
        let theta = MeanParam::scalar(0.7);
        let mut r = rng::from_seed(6);
        let deltas: Vec<f64> = (0..100_000)
            .map(|_| {
                let z = g.sample(&theta, &mut r).unwrap();
                g.seq_mle_update(&theta, z.as_slice(), 5).unwrap().theta.0[0] - 0.7
            })
            .collect();
        let est = McEstimate::from_draws(&deltas);
        assert!(est.within(0.0, 3.0), "{est:?}");
    }

    #[test]
    fn gradient_rule_zero_step_is_identity() {
        let g = gauss1();
        let rule = GradientRule {
            model: &g,
            step: StepSize::Constant(0.0),
        };
        let theta = DVector::from_element(1, 1.25);
        let z = DVector::from_element(1, -3.0);
        assert_eq!(rule.apply(&theta, &z, 4).unwrap(), theta);
    }

    proptest! {
        #[test]
        fn running_mean_is_permutation_invariant(
            data in proptest::collection::vec(-100.0f64..100.0, 1..40),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let g = gauss1();
            let fold = |xs: &[f64]| {
                let mut theta = MeanParam::scalar(0.0);
                for (j, z) in xs.iter().enumerate() {
                    theta = g.seq_mle_update(&theta, &[*z], j + 1).unwrap().theta;
                }
                theta.0[0]
            };
            let mut shuffled = data.clone();
            shuffled.shuffle(&mut rng::from_seed(seed));
            prop_assert!((fold(&data) - fold(&shuffled)).abs() < 1e-12);
        }

        #[test]
        fn conjugacy_is_consistent(
            d1 in proptest::collection::vec(0u8..2, 0..20),
            d2 in proptest::collection::vec(0u8..2, 0..20),
            alpha in 0.5f64..10.0,
            frac in 0.0f64..1.0,
        ) {
            let b = ExpFamilyModel::bernoulli(1).unwrap();
            let prior = ConjugatePrior::new(alpha, DVector::from_element(1, frac * alpha));
            let s1 = Samples::from_scalars(&d1.iter().map(|&v| v as f64).collect::<Vec<_>>());
            let s2 = Samples::from_scalars(&d2.iter().map(|&v| v as f64).collect::<Vec<_>>());
            let mut joined = s1.clone();
            joined.extend_from(&s2);
            let once = b.conjugate_posterior(&prior, &joined).unwrap();
            let step = b.conjugate_posterior(&prior, &s1).unwrap();
            let twice = b.conjugate_posterior(&step.updated, &s2).unwrap();
            // Integer counts added to a float strength can round differently by one ulp.
            prop_assert!((once.updated.alpha - twice.updated.alpha).abs() < 1e-12);
            prop_assert!((once.updated.theta_pi[0] - twice.updated.theta_pi[0]).abs() < 1e-12);
        }
    }
}
