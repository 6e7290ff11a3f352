//! The spectral linear-Gaussian inverse problem in SVD coordinates.
//!
//! Observations are `z = A theta + xi` with `xi ~ N(0, I)` and `A` diagonal with
//! singular values `s_i = i^-beta`. The prior is `N(0, I)`. Distances use the
//! weighted norm `||theta|| = ||(A^T A)^(alpha/2) theta||`, i.e. coordinate `i`
//! carries weight `s_i^alpha`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::{Dataset, Samples};
use crate::engine::{Estimator, OnlineRule, ParamVector};
use crate::error::{Error, Result};
use crate::expfam::PosteriorGaussianSummary;
use crate::metrics::ReferenceModel;
use crate::rng::McRng;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProblem {
    beta: f64,
    alpha_norm: f64,
    singular_values: DVector<f64>,
    /// `s_i^(2 alpha)`, the squared norm weights.
    norm_weights: DVector<f64>,
}

/// Chain state: current parameter, effective sample count and the running mean
/// of the observations absorbed so far.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub theta: DVector<f64>,
    pub j: usize,
    pub zbar: DVector<f64>,
}

impl SpectralProblem {
    pub fn new(dim: usize, beta: f64, alpha_norm: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("dim", "must be positive"));
        }
        if !(beta > 0.5) {
            return Err(Error::input("beta", "smoothness exponent must exceed 1/2"));
        }
        let s = DVector::from_fn(dim, |i, _| ((i + 1) as f64).powf(-beta));
        Self::build(beta, alpha_norm, s)
    }

    fn build(beta: f64, alpha_norm: f64, singular_values: DVector<f64>) -> Result<Self> {
        if !alpha_norm.is_finite() {
            return Err(Error::input("alpha_norm", "must be finite"));
        }
        let norm_weights = singular_values.map(|s| s.powf(2.0 * alpha_norm));
        Ok(SpectralProblem {
            beta,
            alpha_norm,
            singular_values,
            norm_weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.singular_values.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha_norm(&self) -> f64 {
        self.alpha_norm
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    pub fn norm_weights(&self) -> &DVector<f64> {
        &self.norm_weights
    }

    fn check_len(&self, what: &'static str, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::input(what, format!("expected length {}, got {}", self.dim(), v.len())));
        }
        Ok(())
    }

    /// `z_i = s_i theta_i + N(0, 1)`.
    pub fn lg_sample(&self, theta: &DVector<f64>, rng: &mut McRng) -> Result<DVector<f64>> {
        self.check_len("theta", theta.as_slice())?;
        let mut z = DVector::zeros(self.dim());
        self.sample_into(theta.as_slice(), z.as_mut_slice(), rng);
        Ok(z)
    }

    fn sample_into(&self, theta: &[f64], out: &mut [f64], rng: &mut McRng) {
        for ((o, &t), &s) in out.iter_mut().zip(theta).zip(self.singular_values.iter()) {
            let xi: f64 = rng.sample(StandardNormal);
            *o = s * t + xi;
        }
    }

    /// Regularized natural-gradient step with `eta_j = 1/j` and `G_j = (A^T A + I/j)^-1`:
    /// `theta_i + (1/j) s_i (z_i - s_i theta_i) / (s_i^2 + 1/j)`.
    pub fn lg_update(&self, theta: &DVector<f64>, z: &[f64], j: usize) -> Result<DVector<f64>> {
        if j == 0 {
            return Err(Error::input("j", "must be at least 1"));
        }
        self.check_len("theta", theta.as_slice())?;
        self.check_len("z", z)?;
        let mut out = theta.clone();
        self.update_in_place(out.as_mut_slice(), z, j);
        Ok(out)
    }

    fn update_in_place(&self, theta: &mut [f64], z: &[f64], j: usize) {
        let inv_j = 1.0 / j as f64;
        for ((t, &zi), &s) in theta.iter_mut().zip(z).zip(self.singular_values.iter()) {
            *t += inv_j * s * (zi - s * *t) / (s * s + inv_j);
        }
    }

    /// Posterior mean `s_i zbar_i / (s_i^2 + 1/j)` and variance `1 / (j s_i^2 + 1)`.
    pub fn posterior_from_mean(&self, zbar: &DVector<f64>, j: usize) -> PosteriorGaussianSummary {
        let jf = j as f64;
        let mean = DVector::from_fn(self.dim(), |i, _| {
            let s = self.singular_values[i];
            if j == 0 {
                0.0
            } else {
                s * zbar[i] / (s * s + 1.0 / jf)
            }
        });
        let var = self.singular_values.map(|s| 1.0 / (jf * s * s + 1.0));
        PosteriorGaussianSummary {
            mean,
            cov: DMatrix::from_diagonal(&var),
            exact: true,
        }
    }

    pub fn lg_posterior(&self, data: &Samples) -> Result<PosteriorGaussianSummary> {
        if data.is_empty() {
            return Err(Error::input("data", "posterior needs at least one observation"));
        }
        Ok(self.posterior_from_mean(&self.observation_mean(data)?, data.len()))
    }

    fn observation_mean(&self, data: &Samples) -> Result<DVector<f64>> {
        if data.dim() != self.dim() {
            return Err(Error::input("data", "observation dimension does not match the problem"));
        }
        let mut zbar = DVector::zeros(self.dim());
        for z in data.rows() {
            for (a, &b) in zbar.iter_mut().zip(z) {
                *a += b;
            }
        }
        Ok(zbar / data.len().max(1) as f64)
    }

    /// Bayes error `sum_i s_i^(2 alpha) / (j s_i^2 + 1)`.
    pub fn lg_bayes_error(&self, j: usize) -> Result<f64> {
        if j == 0 {
            return Err(Error::input("j", "must be at least 1"));
        }
        let jf = j as f64;
        Ok(self
            .singular_values
            .iter()
            .zip(self.norm_weights.iter())
            .map(|(&s, &w)| w / (jf * s * s + 1.0))
            .sum())
    }

    /// Weighted squared norm `sum_i s_i^(2 alpha) v_i^2`.
    pub fn weighted_sq_norm(&self, v: &DVector<f64>) -> f64 {
        v.iter().zip(self.norm_weights.iter()).map(|(x, w)| w * x * x).sum()
    }

    /// `diag(s_i^alpha)`, the map under which the weighted norm becomes Euclidean.
    pub fn norm_scaling(&self) -> DVector<f64> {
        self.norm_weights.map(f64::sqrt)
    }

    /// Applies `lg_update` along `data` starting from `start` at index `j0`
    /// (row `r` is the `(j0 + r + 1)`-th observation). Returns `theta_{j0+1..}`.
    pub fn follow(&self, start: &DVector<f64>, j0: usize, data: &Samples) -> Result<Vec<DVector<f64>>> {
        self.check_len("start", start.as_slice())?;
        let mut theta = start.clone();
        let mut path = Vec::with_capacity(data.len());
        for (r, z) in data.rows().enumerate() {
            self.check_len("z", z)?;
            self.update_in_place(theta.as_mut_slice(), z, j0 + r + 1);
            path.push(theta.clone());
        }
        Ok(path)
    }

    /// Prior-mean draw `theta_0 ~ N(0, I)`.
    pub fn sample_prior_theta(&self, rng: &mut McRng) -> DVector<f64> {
        DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal))
    }
}

/// The regularized update as an MP estimator: the initial fit is the posterior
/// mean on the real data, refits apply the update once per new observation.
#[derive(Debug, Clone)]
pub struct LinearGaussianEstimator {
    pub problem: SpectralProblem,
}

impl Estimator for LinearGaussianEstimator {
    type Data = Samples;
    type State = SpectralState;

    fn init_fit(&self, data: &Samples, _rng: &mut McRng) -> Result<SpectralState> {
        let zbar = self.problem.observation_mean(data)?;
        let post = self.problem.lg_posterior(data)?;
        Ok(SpectralState {
            theta: post.mean,
            j: data.len(),
            zbar,
        })
    }

    fn synthesize(&self, state: &SpectralState, _history: &Samples, count: usize, out: &mut Samples, rng: &mut McRng) {
        out.clear();
        for _ in 0..count {
            let row = out.push_zeroed();
            self.problem.sample_into(state.theta.as_slice(), row, rng);
        }
    }

    fn refit(&self, data: &Samples, new: usize, mut state: SpectralState) -> Result<SpectralState> {
        let start = data.len() - new;
        for i in start..data.len() {
            let z = data.row(i);
            state.j += 1;
            self.problem.update_in_place(state.theta.as_mut_slice(), z, state.j);
            let w = 1.0 / state.j as f64;
            for (m, &zi) in state.zbar.iter_mut().zip(z) {
                *m += w * (zi - *m);
            }
        }
        Ok(state)
    }

    fn param(&self, state: &SpectralState) -> ParamVector {
        state.theta.clone()
    }

    fn streaming(&self) -> bool {
        true
    }
}

impl ReferenceModel for SpectralProblem {
    fn dim(&self) -> usize {
        SpectralProblem::dim(self)
    }

    fn sample_prior(&self, rng: &mut McRng) -> Result<DVector<f64>> {
        Ok(self.sample_prior_theta(rng))
    }

    fn sample_data(&self, theta: &DVector<f64>, j: usize, rng: &mut McRng) -> Result<Samples> {
        self.check_len("theta", theta.as_slice())?;
        let mut out = Samples::with_capacity(self.dim(), j);
        for _ in 0..j {
            let row = out.push_zeroed();
            self.sample_into(theta.as_slice(), row, rng);
        }
        Ok(out)
    }

    fn posterior_mean(&self, data: &Samples) -> Result<DVector<f64>> {
        if data.is_empty() {
            return Ok(DVector::zeros(self.dim()));
        }
        Ok(self.lg_posterior(data)?.mean)
    }

    fn sample_posterior(&self, data: &Samples, rng: &mut McRng) -> Result<DVector<f64>> {
        let post = if data.is_empty() {
            self.posterior_from_mean(&DVector::zeros(self.dim()), 0)
        } else {
            self.lg_posterior(data)?
        };
        Ok(DVector::from_fn(self.dim(), |i, _| {
            let xi: f64 = rng.sample(StandardNormal);
            post.mean[i] + post.cov[(i, i)].sqrt() * xi
        }))
    }

    fn sq_norm(&self, v: &DVector<f64>) -> f64 {
        self.weighted_sq_norm(v)
    }
}

/// The regularized update as a one-sample online rule.
pub struct LinearGaussianRule<'a>(pub &'a SpectralProblem);

impl OnlineRule for LinearGaussianRule<'_> {
    fn draw(&self, theta: &ParamVector, rng: &mut McRng) -> DVector<f64> {
        let mut z = DVector::zeros(self.0.dim());
        self.0.sample_into(theta.as_slice(), z.as_mut_slice(), rng);
        z
    }

    fn apply(&self, theta: &ParamVector, z: &DVector<f64>, j: usize) -> Result<ParamVector> {
        self.0.lg_update(theta, z.as_slice(), j)
    }
}
