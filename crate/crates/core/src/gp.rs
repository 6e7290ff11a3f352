//! Gaussian-process regression with random Fourier features.
//!
//! A Matérn-3/2 kernel with bandwidth `l` is approximated by
//! `phi(x) = sqrt(2/m) cos(omega . x / l + b)`, where the `omega` rows are
//! multivariate Student-t draws with 3 degrees of freedom and `b ~ U[0, 2pi)`.
//! Functions are `f_theta(x) = phi(x) . theta` with prior `theta ~ N(0, I)`, so
//! the induced function prior has covariance `phi(x) . phi(x')`.
//!
//! Besides the exact conjugate posterior this module provides the MP refit
//! (a quadratic that keeps the fit on all past inputs, matches the new
//! synthetic pairs and penalizes movement away from the previous weights) and
//! the anchored-MAP baseline (ridge regression pulled towards a prior draw).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::data::{Dataset, Samples};
use crate::engine::{Estimator, ParamVector};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::McRng;

pub type WeightVector = DVector<f64>;

const MATERN32_DOF: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RffKernel {
    bandwidth: f64,
    /// `m x input_dim` standard spectral draws (before division by the bandwidth).
    frequencies: DMatrix<f64>,
    phases: DVector<f64>,
}

impl RffKernel {
    pub fn matern32(input_dim: usize, num_features: usize, bandwidth: f64, rng: &mut McRng) -> Result<Self> {
        if input_dim == 0 || num_features == 0 {
            return Err(Error::input("rff", "input_dim and num_features must be positive"));
        }
        if !(bandwidth > 0.0) {
            return Err(Error::input("bandwidth", "must be positive"));
        }
        let chi = ChiSquared::new(MATERN32_DOF).expect("valid degrees of freedom");
        let mut frequencies = DMatrix::zeros(num_features, input_dim);
        for r in 0..num_features {
            let scale = (MATERN32_DOF / chi.sample(rng)).sqrt();
            for c in 0..input_dim {
                let g: f64 = rng.sample(StandardNormal);
                frequencies[(r, c)] = g * scale;
            }
        }
        let phases = DVector::from_fn(num_features, |_, _| rng.random::<f64>() * std::f64::consts::TAU);
        Ok(RffKernel {
            bandwidth,
            frequencies,
            phases,
        })
    }

    pub fn num_features(&self) -> usize {
        self.phases.len()
    }

    pub fn input_dim(&self) -> usize {
        self.frequencies.ncols()
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn feature_map(&self, x: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.num_features());
        self.features_into(x, out.as_mut_slice());
        out
    }

    fn features_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.input_dim(), "input has wrong dimension");
        let amp = (2.0 / self.num_features() as f64).sqrt();
        for (r, o) in out.iter_mut().enumerate() {
            let mut arg = self.phases[r];
            for (c, &xc) in x.iter().enumerate() {
                arg += self.frequencies[(r, c)] * xc / self.bandwidth;
            }
            *o = amp * arg.cos();
        }
    }

    /// Feature matrix with one row per input.
    pub fn features(&self, xs: &Samples) -> DMatrix<f64> {
        let mut phi = DMatrix::zeros(xs.len(), self.num_features());
        let mut row = vec![0.0; self.num_features()];
        for (i, x) in xs.rows().enumerate() {
            self.features_into(x, &mut row);
            for (j, v) in row.iter().enumerate() {
                phi[(i, j)] = *v;
            }
        }
        phi
    }

    /// Exact Matérn-3/2 kernel value at distance `r`.
    pub fn matern32_exact(&self, r: f64) -> f64 {
        let a = 3f64.sqrt() * r / self.bandwidth;
        (1.0 + a) * (-a).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpModel {
    pub kernel: RffKernel,
    noise_var: f64,
}

impl GpModel {
    pub fn new(kernel: RffKernel, noise_var: f64) -> Result<Self> {
        if !(noise_var > 0.0) {
            return Err(Error::input("noise_var", "must be positive"));
        }
        Ok(GpModel { kernel, noise_var })
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn predict(&self, theta: &WeightVector, x: &[f64]) -> f64 {
        self.kernel.feature_map(x).dot(theta)
    }
}

/// Inputs and responses of a regression problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    pub xs: Samples,
    pub ys: Vec<f64>,
}

impl RegressionData {
    pub fn new(xs: Samples, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::input("ys", format!("{} inputs but {} responses", xs.len(), ys.len())));
        }
        Ok(RegressionData { xs, ys })
    }

    pub fn empty(input_dim: usize) -> Self {
        RegressionData {
            xs: Samples::new(input_dim),
            ys: Vec::new(),
        }
    }
}

impl Dataset for RegressionData {
    fn len(&self) -> usize {
        self.ys.len()
    }

    fn empty_like(&self) -> Self {
        RegressionData::empty(self.xs.dim())
    }

    fn extend_from(&mut self, other: &Self) {
        self.xs.extend_from(&other.xs);
        self.ys.extend_from_slice(&other.ys);
    }

    fn clear(&mut self) {
        self.xs.clear();
        self.ys.clear();
    }

    fn select(&self, indices: &[usize]) -> Self {
        RegressionData {
            xs: self.xs.select(indices),
            ys: indices.iter().map(|&i| self.ys[i]).collect(),
        }
    }
}

/// Posterior mean and variance of `f(x)` at one query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointPredictive {
    pub mean: f64,
    pub var: f64,
}

/// Exact posterior of `f` at `queries`. The weight posterior is Gaussian with
/// precision `Phi^T Phi / noise_var + I` and mean `precision^-1 Phi^T y / noise_var`.
pub fn exact_posterior(model: &GpModel, data: &RegressionData, queries: &Samples) -> Result<Vec<PointPredictive>> {
    let m = model.kernel.num_features();
    let s2 = model.noise_var;
    let phi = model.kernel.features(&data.xs);
    let mut precision = phi.transpose() * &phi / s2;
    for i in 0..m {
        precision[(i, i)] += 1.0;
    }
    let chol = linalg::robust_cholesky(&precision, "exact_posterior")?;
    let rhs = phi.transpose() * DVector::from_column_slice(&data.ys) / s2;
    let mean_w = chol.solve(&rhs);
    Ok(queries
        .rows()
        .map(|x| {
            let f = model.kernel.feature_map(x);
            let v = chol.solve(&f);
            PointPredictive {
                mean: f.dot(&mean_w),
                var: f.dot(&v).max(0.0),
            }
        })
        .collect())
}

/// Value of the MP refit objective at `theta`:
/// `||Phi_all (anchor - theta)||^2 + ||Phi_new theta - y_new||^2 + weight ||theta - anchor||^2`.
pub fn mp_objective(
    theta: &WeightVector,
    anchor: &WeightVector,
    phi_all: &DMatrix<f64>,
    phi_new: &DMatrix<f64>,
    y_new: &[f64],
    weight: f64,
) -> f64 {
    let diff = anchor - theta;
    let fit_old = (phi_all * &diff).norm_squared();
    let fit_new = (phi_new * theta - DVector::from_column_slice(y_new)).norm_squared();
    fit_old + fit_new + weight * diff.norm_squared()
}

/// Exact minimizer of [`mp_objective`] in feature space. Solves
/// `(Phi_all^T Phi_all + Phi_new^T Phi_new + weight I) delta = Phi_new^T (y_new - Phi_new anchor)`.
pub fn mp_refit_features(
    anchor: &WeightVector,
    phi_all: &DMatrix<f64>,
    phi_new: &DMatrix<f64>,
    y_new: &[f64],
    weight: f64,
) -> Result<WeightVector> {
    let m = anchor.len();
    if phi_all.ncols() != m || phi_new.ncols() != m || phi_new.nrows() != y_new.len() {
        return Err(Error::input("mp_refit", "feature dimensions do not match"));
    }
    if !(weight > 0.0) {
        return Err(Error::input("weight", "regularization weight must be positive"));
    }
    let mut system = phi_all.transpose() * phi_all + phi_new.transpose() * phi_new;
    for i in 0..m {
        system[(i, i)] += weight;
    }
    let resid = DVector::from_column_slice(y_new) - phi_new * anchor;
    let chol = linalg::robust_cholesky(&system, "mp_refit")?;
    Ok(anchor + chol.solve(&(phi_new.transpose() * resid)))
}

/// MP refit for one synthetic batch `(x_new, y_new)`; `n` is the real sample size.
pub fn mp_refit(
    model: &GpModel,
    anchor: &WeightVector,
    x_all: &Samples,
    x_new: &Samples,
    y_new: &[f64],
    n: usize,
    reg: RegWeight,
) -> Result<WeightVector> {
    let weight = reg.weight(n, model.noise_var)?;
    let phi_all = model.kernel.features(x_all);
    let phi_new = model.kernel.features(x_new);
    mp_refit_features(anchor, &phi_all, &phi_new, y_new, weight)
}

/// How a quadratic penalty weight scales with the sample size `n` and noise variance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegWeight {
    /// `1 / n`.
    InverseN,
    /// `noise_var / n`.
    NoiseOverN,
    /// `noise_var`, the weight under which a MAP fit matches the exact posterior precision.
    Noise,
    Fixed(f64),
}

impl RegWeight {
    pub fn weight(&self, n: usize, noise_var: f64) -> Result<f64> {
        if n == 0 {
            return Err(Error::input("n", "must be at least 1"));
        }
        let w = match *self {
            RegWeight::InverseN => 1.0 / n as f64,
            RegWeight::NoiseOverN => noise_var / n as f64,
            RegWeight::Noise => noise_var,
            RegWeight::Fixed(w) => w,
        };
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::config("reg_weight", format!("weight must be positive and finite, got {w}")));
        }
        Ok(w)
    }
}

/// `y = f_theta(x) + N(0, noise_var)`.
pub fn synth_response(model: &GpModel, theta: &WeightVector, x: &[f64], rng: &mut McRng) -> f64 {
    let xi: f64 = rng.sample(StandardNormal);
    model.predict(theta, x) + model.noise_var.sqrt() * xi
}

/// Where synthetic inputs come from.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum XSampler {
    /// Independent uniform coordinates on the box `[lo, hi]`.
    Uniform { lo: Vec<f64>, hi: Vec<f64> },
    /// Uniform over the multiset of inputs seen so far (real and synthetic).
    Empirical,
}

impl XSampler {
    pub fn uniform_1d(lo: f64, hi: f64) -> Self {
        XSampler::Uniform {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    pub fn validate(&self, input_dim: usize) -> Result<()> {
        if let XSampler::Uniform { lo, hi } = self {
            if lo.len() != input_dim || hi.len() != input_dim {
                return Err(Error::config("x_sampler", "box bounds must match the input dimension"));
            }
            if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                return Err(Error::config("x_sampler", "box needs lo < hi in every coordinate"));
            }
        }
        Ok(())
    }

    pub fn sample(&self, history: &Samples, rng: &mut McRng) -> Result<Vec<f64>> {
        let mut out = vec![0.0; history.dim()];
        self.sample_into(history, &mut out, rng)?;
        Ok(out)
    }

    fn sample_into(&self, history: &Samples, out: &mut [f64], rng: &mut McRng) -> Result<()> {
        match self {
            XSampler::Uniform { lo, hi } => {
                for ((o, a), b) in out.iter_mut().zip(lo).zip(hi) {
                    *o = rng.random_range(*a..*b);
                }
            }
            XSampler::Empirical => {
                if history.is_empty() {
                    return Err(Error::config("x_sampler", "empirical sampling needs a non-empty history"));
                }
                let i = rng.random_range(0..history.len());
                out.copy_from_slice(history.row(i));
            }
        }
        Ok(())
    }
}

/// Ridge fit pulled towards `anchor`: minimizes `||Phi theta - y||^2 + weight ||theta - anchor||^2`.
pub fn anchored_map_features(phi: &DMatrix<f64>, ys: &[f64], anchor: &WeightVector, weight: f64) -> Result<WeightVector> {
    if phi.nrows() == 0 {
        return Err(Error::input("data", "anchored MAP needs at least one observation"));
    }
    if phi.nrows() != ys.len() || phi.ncols() != anchor.len() {
        return Err(Error::input("anchored_map", "feature dimensions do not match"));
    }
    if !(weight > 0.0) {
        return Err(Error::input("weight", "regularization weight must be positive"));
    }
    let mut system = phi.transpose() * phi;
    for i in 0..anchor.len() {
        system[(i, i)] += weight;
    }
    let resid = DVector::from_column_slice(ys) - phi * anchor;
    let chol = linalg::robust_cholesky(&system, "anchored_map")?;
    Ok(anchor + chol.solve(&(phi.transpose() * resid)))
}

/// Anchored MAP with `anchor ~ N(0, I)`; the usual choice is [`RegWeight::NoiseOverN`].
pub fn anchored_map(model: &GpModel, data: &RegressionData, reg: RegWeight, rng: &mut McRng) -> Result<WeightVector> {
    if data.is_empty() {
        return Err(Error::input("data", "anchored MAP needs at least one observation"));
    }
    let weight = reg.weight(data.len(), model.noise_var)?;
    let anchor = prior_weights(model.kernel.num_features(), rng);
    let phi = model.kernel.features(&data.xs);
    anchored_map_features(&phi, &data.ys, &anchor, weight)
}

/// A draw `theta ~ N(0, I)` from the weight prior.
pub fn prior_weights(m: usize, rng: &mut McRng) -> WeightVector {
    DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn synthesize_pairs(
    model: &GpModel,
    sampler: &XSampler,
    theta: &WeightVector,
    history: &Samples,
    count: usize,
    out: &mut RegressionData,
    rng: &mut McRng,
) {
    out.clear();
    for _ in 0..count {
        let x = out.xs.push_zeroed();
        // Validated at construction; the history is never empty inside a chain.
        sampler
            .sample_into(history, x, rng)
            .expect("input sampler misconfigured");
        let x = x.to_vec();
        out.ys.push(synth_response(model, theta, &x, rng));
    }
}

/// The MP estimator for GP regression.
///
/// The initial fit is an anchored MAP with `anchor ~ N(0, I)`, so that
/// initialization randomness survives in directions the data never reaches.
/// Refits minimize the MP objective. The refit system matrix only grows by the new feature rows,
/// so its inverse is carried in the chain state and updated with the Woodbury
/// identity; this is algebraically the same minimizer as [`mp_refit`].
#[derive(Debug, Clone)]
pub struct GpMpEstimator {
    model: GpModel,
    sampler: XSampler,
    reg_weight: f64,
    init_weight: f64,
    real: RegressionData,
    base_inverse: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct GpChainState {
    pub theta: WeightVector,
    system_inverse: DMatrix<f64>,
}

impl GpMpEstimator {
    pub fn new(model: GpModel, real: &RegressionData, sampler: XSampler, reg: RegWeight, init: RegWeight) -> Result<Self> {
        if real.is_empty() {
            return Err(Error::input("data", "MP needs real observations"));
        }
        sampler.validate(model.kernel.input_dim())?;
        let reg_weight = reg.weight(real.len(), model.noise_var)?;
        let init_weight = init.weight(real.len(), model.noise_var)?;
        let m = model.kernel.num_features();
        let phi = model.kernel.features(&real.xs);
        let mut system = phi.transpose() * &phi;
        for i in 0..m {
            system[(i, i)] += reg_weight;
        }
        let base_inverse = linalg::symmetrize(&linalg::robust_cholesky(&system, "gp mp init")?.inverse());
        Ok(GpMpEstimator {
            model,
            sampler,
            reg_weight,
            init_weight,
            real: real.clone(),
            base_inverse,
        })
    }

    pub fn model(&self) -> &GpModel {
        &self.model
    }

    pub fn reg_weight(&self) -> f64 {
        self.reg_weight
    }
}

impl Estimator for GpMpEstimator {
    type Data = RegressionData;
    type State = GpChainState;

    fn init_fit(&self, data: &RegressionData, rng: &mut McRng) -> Result<GpChainState> {
        if data != &self.real {
            return Err(Error::input("data", "estimator was prepared for a different dataset"));
        }
        let anchor = prior_weights(self.model.kernel.num_features(), rng);
        let phi = self.model.kernel.features(&data.xs);
        let theta = anchored_map_features(&phi, &data.ys, &anchor, self.init_weight)?;
        Ok(GpChainState {
            theta,
            system_inverse: self.base_inverse.clone(),
        })
    }

    fn synthesize(&self, state: &GpChainState, history: &RegressionData, count: usize, out: &mut RegressionData, rng: &mut McRng) {
        synthesize_pairs(&self.model, &self.sampler, &state.theta, &history.xs, count, out, rng);
    }

    fn refit(&self, data: &RegressionData, new: usize, mut state: GpChainState) -> Result<GpChainState> {
        let start = data.len() - new;
        let m = self.model.kernel.num_features();
        let mut b = DMatrix::zeros(m, new);
        for (c, i) in (start..data.len()).enumerate() {
            b.set_column(c, &self.model.kernel.feature_map(data.xs.row(i)));
        }
        let resid = DVector::from_column_slice(&data.ys[start..]) - b.transpose() * &state.theta;
        // M' = M + B B^T;  M'^-1 = M^-1 - U S^-1 U^T with U = M^-1 B, S = I + B^T U.
        let u = &state.system_inverse * &b;
        let mut s = b.transpose() * &u;
        for i in 0..new {
            s[(i, i)] += 1.0;
        }
        let s_chol = linalg::robust_cholesky(&linalg::symmetrize(&s), "gp mp refit")?;
        let s_inv_ut = s_chol.solve(&u.transpose());
        state.theta += &u * s_chol.solve(&resid);
        state.system_inverse -= &u * s_inv_ut;
        Ok(state)
    }

    fn param(&self, state: &GpChainState) -> ParamVector {
        state.theta.clone()
    }

    fn has_init_randomness(&self) -> bool {
        true
    }
}

/// Anchored MAP as an estimator: the initial fit draws an anchor `N(0, I)`;
/// refits solve from scratch anchored at the previous weights.
#[derive(Debug, Clone)]
pub struct AnchoredMapEstimator {
    pub model: GpModel,
    pub sampler: XSampler,
    pub reg: RegWeight,
}

impl Estimator for AnchoredMapEstimator {
    type Data = RegressionData;
    type State = WeightVector;

    fn init_fit(&self, data: &RegressionData, rng: &mut McRng) -> Result<WeightVector> {
        anchored_map(&self.model, data, self.reg, rng)
    }

    fn synthesize(&self, state: &WeightVector, history: &RegressionData, count: usize, out: &mut RegressionData, rng: &mut McRng) {
        synthesize_pairs(&self.model, &self.sampler, state, &history.xs, count, out, rng);
    }

    fn refit(&self, data: &RegressionData, _new: usize, state: WeightVector) -> Result<WeightVector> {
        let phi = self.model.kernel.features(&data.xs);
        let weight = self.reg.weight(data.len(), self.model.noise_var)?;
        anchored_map_features(&phi, &data.ys, &state, weight)
    }

    fn param(&self, state: &WeightVector) -> ParamVector {
        state.clone()
    }

    fn has_init_randomness(&self) -> bool {
        true
    }
}

/// A 1-D regression set on `[0, 6]` resembling the classic Snelson toy data,
/// with the inputs between the `gap.0` and `gap.1` quantiles removed.
/// `total` points are drawn before the gap is cut out.
pub fn gapped_toy_data(total: usize, gap: (f64, f64), noise_var: f64, rng: &mut McRng) -> Result<RegressionData> {
    if !(0.0 <= gap.0 && gap.0 < gap.1 && gap.1 <= 1.0) {
        return Err(Error::config("gap", "need 0 <= lo < hi <= 1"));
    }
    let mut xs: Vec<f64> = (0..total).map(|_| rng.random_range(0.0..6.0)).collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    let cut_lo = (gap.0 * total as f64).round() as usize;
    let cut_hi = (gap.1 * total as f64).round() as usize;
    let sd = noise_var.sqrt();
    let mut kept = Samples::new(1);
    let mut ys = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        let xi: f64 = rng.sample(StandardNormal);
        if i >= cut_lo && i < cut_hi {
            continue;
        }
        kept.push(&[x]);
        ys.push(toy_function(x) + sd * xi);
    }
    RegressionData::new(kept, ys)
}

/// Smooth regression function of the toy data.
pub fn toy_function(x: f64) -> f64 {
    (1.7 * x).sin() + 0.4 * (0.6 * x).cos() - 0.15 * x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::McEstimate;
    use crate::rng;

    fn ones(rows: usize) -> DMatrix<f64> {
        DMatrix::from_element(rows, 1, 1.0)
    }

    fn small_model(m: usize, noise_var: f64, seed: u64) -> GpModel {
        let kernel = RffKernel::matern32(1, m, 1.0, &mut rng::from_seed(seed)).unwrap();
        GpModel::new(kernel, noise_var).unwrap()
    }

    #[test]
    fn features_approximate_the_kernel() {
        let mut r = rng::from_seed(30);
        let k = RffKernel::matern32(1, 4000, 1.0, &mut r).unwrap();
        let mut diag = 0.0;
        for _ in 0..100 {
            let x = [r.random_range(-5.0..5.0)];
            let f = k.feature_map(&x);
            assert!(f.norm_squared() <= 2.0 + 1e-12);
            diag += f.norm_squared() / 100.0;
        }
        assert!((diag - 1.0).abs() < 0.05, "{diag}");
        // Off-diagonal values follow the Matérn-3/2 shape.
        for r_dist in [0.5, 1.0, 2.0] {
            let approx = k.feature_map(&[0.2]).dot(&k.feature_map(&[0.2 + r_dist]));
            assert!((approx - k.matern32_exact(r_dist)).abs() < 0.1, "{r_dist}: {approx}");
        }
        assert_eq!(k.feature_map(&[1.3]), k.feature_map(&[1.3]));
        let single = RffKernel::matern32(1, 1, 1.0, &mut r).unwrap();
        assert!(single.feature_map(&[0.7])[0].abs() <= 2f64.sqrt());
    }

    #[test]
    fn exact_posterior_without_data_is_the_prior() {
        let model = small_model(50, 0.64, 31);
        let q = Samples::from_scalars(&[0.0, 2.5]);
        let post = exact_posterior(&model, &RegressionData::empty(1), &q).unwrap();
        for (p, x) in post.iter().zip(q.rows()) {
            assert!(p.mean.abs() < 1e-15);
            assert!((p.var - model.kernel.feature_map(x).norm_squared()).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_posterior_interpolates_when_noise_vanishes() {
        let model = small_model(200, 1e-6, 32);
        let data = RegressionData::new(Samples::from_scalars(&[1.0]), vec![0.8]).unwrap();
        let post = exact_posterior(&model, &data, &Samples::from_scalars(&[1.0])).unwrap();
        assert!((post[0].mean - 0.8).abs() < 1e-3, "{:?}", post[0]);
    }

    #[test]
    fn duplicated_datum_equals_halved_noise() {
        let twice = small_model(30, 0.5, 33);
        let once = GpModel::new(twice.kernel.clone(), 0.25).unwrap();
        let q = Samples::from_scalars(&[0.0, 0.4, 3.0]);
        let d2 = RegressionData::new(Samples::from_scalars(&[0.5, 0.5]), vec![1.2, 1.2]).unwrap();
        let d1 = RegressionData::new(Samples::from_scalars(&[0.5]), vec![1.2]).unwrap();
        let a = exact_posterior(&twice, &d2, &q).unwrap();
        let b = exact_posterior(&once, &d1, &q).unwrap();
        for (p, r) in a.iter().zip(&b) {
            assert!((p.mean - r.mean).abs() < 1e-8 && (p.var - r.var).abs() < 1e-8);
        }
    }

    #[test]
    fn mp_refit_scalar_example() {
        let theta = mp_refit_features(&DVector::zeros(1), &ones(1), &ones(1), &[1.0], 1.0).unwrap();
        assert!((theta[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mp_refit_fixed_point() {
        let model = small_model(40, 0.64, 34);
        let mut r = rng::from_seed(35);
        let anchor = prior_weights(40, &mut r);
        let x_all = Samples::from_scalars(&[0.1, 1.5, 2.2, 4.0]);
        let x_new = Samples::from_scalars(&[3.3, 0.9]);
        let y_new: Vec<f64> = x_new.rows().map(|x| model.predict(&anchor, x)).collect();
        let theta = mp_refit(&model, &anchor, &x_all, &x_new, &y_new, 4, RegWeight::InverseN).unwrap();
        assert!((theta - anchor).amax() < 1e-10);
    }

    #[test]
    fn one_at_a_time_equals_joint_solve() {
        let model = small_model(20, 0.64, 36);
        let mut r = rng::from_seed(37);
        let anchor = prior_weights(20, &mut r);
        let x_all = Samples::from_scalars(&[0.3, 1.1, 2.9]);
        let x_new = Samples::from_scalars(&[0.7, 4.4]);
        let y_new = [0.5, -1.0];
        let joint = mp_refit(&model, &anchor, &x_all, &x_new, &y_new, 3, RegWeight::InverseN).unwrap();
        let first = mp_refit(&model, &anchor, &x_all, &x_new.select(&[0]), &y_new[..1], 3, RegWeight::InverseN).unwrap();
        let mut grown = x_all.clone();
        grown.push(x_new.row(0));
        let second = mp_refit(&model, &first, &grown, &x_new.select(&[1]), &y_new[1..], 3, RegWeight::InverseN).unwrap();
        assert!((joint - second).amax() < 1e-6);
    }

    #[test]
    fn mp_refit_gradient_vanishes() {
        let model = small_model(6, 0.64, 38);
        let mut r = rng::from_seed(39);
        let anchor = prior_weights(6, &mut r);
        let phi_all = model.kernel.features(&Samples::from_scalars(&[0.0, 1.0, 2.0, 3.0]));
        let phi_new = model.kernel.features(&Samples::from_scalars(&[1.7]));
        let y_new = [0.9];
        let w = 0.25;
        let theta = mp_refit_features(&anchor, &phi_all, &phi_new, &y_new, w).unwrap();
        let h = 1e-5;
        let mut grad = DVector::zeros(6);
        for i in 0..6 {
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[i] += h;
            down[i] -= h;
            grad[i] = (mp_objective(&up, &anchor, &phi_all, &phi_new, &y_new, w)
                - mp_objective(&down, &anchor, &phi_all, &phi_new, &y_new, w))
                / (2.0 * h);
        }
        assert!(grad.norm() < 1e-8, "{}", grad.norm());
        let at_anchor = mp_objective(&anchor, &anchor, &phi_all, &phi_new, &y_new, w);
        assert!(mp_objective(&theta, &anchor, &phi_all, &phi_new, &y_new, w) <= at_anchor);
    }

    #[test]
    fn bregman_decomposition() {
        let model = small_model(5, 0.64, 40);
        let mut r = rng::from_seed(41);
        let anchor = prior_weights(5, &mut r);
        let theta = prior_weights(5, &mut r);
        let x_all = Samples::from_scalars(&[0.2, 1.4, 2.6]);
        let phi_all = model.kernel.features(&x_all);
        let phi_new = model.kernel.features(&Samples::from_scalars(&[3.1]));
        let y_new = [0.3];
        let w = 0.5;
        // Square loss Bregman term on the accumulated inputs, data-fit and proximity terms.
        let bregman = |t: &WeightVector| -> f64 {
            x_all
                .rows()
                .map(|x| (model.predict(&anchor, x) - model.predict(t, x)).powi(2))
                .sum()
        };
        assert_eq!(bregman(&anchor), 0.0);
        let fit = (model.predict(&theta, &[3.1]) - 0.3).powi(2);
        let prox = w * (&theta - &anchor).norm_squared();
        let total = mp_objective(&theta, &anchor, &phi_all, &phi_new, &y_new, w);
        assert!((total - (bregman(&theta) + fit + prox)).abs() < 1e-10);
    }

    #[test]
    fn synth_response_moments() {
        let quiet = small_model(10, 1e-12, 42);
        let mut r = rng::from_seed(43);
        let theta = prior_weights(10, &mut r);
        let f = quiet.predict(&theta, &[0.4]);
        assert!((synth_response(&quiet, &theta, &[0.4], &mut r) - f).abs() < 1e-5);

        let noisy = GpModel::new(quiet.kernel.clone(), 0.64).unwrap();
        let reps = 100_000;
        let ys: Vec<f64> = (0..reps).map(|_| synth_response(&noisy, &theta, &[0.4], &mut r)).collect();
        assert!((McEstimate::from_draws(&ys).value - f).abs() < 3.0 * 0.8 / (reps as f64).sqrt());
        let sq: Vec<f64> = ys.iter().map(|y| (y - f).powi(2)).collect();
        // Var of (sigma xi)^2 is 2 sigma^4.
        let sd = (2.0 * 0.64f64.powi(2) / reps as f64).sqrt();
        assert!((McEstimate::from_draws(&sq).value - 0.64).abs() < 3.0 * sd);
    }

    #[test]
    fn x_sampler_modes() {
        let mut r = rng::from_seed(44);
        let empty = Samples::new(1);
        let uni = XSampler::uniform_1d(0.0, 6.0);
        let reps = 100_000;
        let xs: Vec<f64> = (0..reps).map(|_| uni.sample(&empty, &mut r).unwrap()[0]).collect();
        assert!((McEstimate::from_draws(&xs).value - 3.0).abs() < 3.0 * (3.0 / reps as f64).sqrt());

        let hist = Samples::from_scalars(&[1.0, 1.0, 2.0]);
        let hits = (0..reps)
            .filter(|_| XSampler::Empirical.sample(&hist, &mut r).unwrap()[0] == 1.0)
            .count();
        let sd = (2.0 / 9.0 / reps as f64).sqrt();
        assert!((hits as f64 / reps as f64 - 2.0 / 3.0).abs() < 3.0 * sd);

        let single = Samples::from_scalars(&[5.0]);
        assert!((0..100).all(|_| XSampler::Empirical.sample(&single, &mut r).unwrap()[0] == 5.0));
        let err = XSampler::Empirical.sample(&empty, &mut r).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn anchored_map_examples() {
        let y = [1.0];
        let zero = anchored_map_features(&ones(1), &y, &DVector::zeros(1), 1.0).unwrap();
        assert!((zero[0] - 0.5).abs() < 1e-15);
        let two = anchored_map_features(&ones(1), &y, &DVector::from_element(1, 2.0), 1.0).unwrap();
        assert!((two[0] - 1.5).abs() < 1e-15);
        let model = small_model(4, 1.0, 45);
        assert!(anchored_map(&model, &RegressionData::empty(1), RegWeight::NoiseOverN, &mut rng::from_seed(1)).is_err());
    }

    #[test]
    fn woodbury_refit_matches_direct_solve() {
        let model = small_model(30, 0.64, 46);
        let mut r = rng::from_seed(47);
        let data = gapped_toy_data(25, (0.4, 0.6), 0.64, &mut r).unwrap();
        let n = data.len();
        let est = GpMpEstimator::new(model.clone(), &data, XSampler::uniform_1d(0.0, 6.0), RegWeight::InverseN, RegWeight::Noise).unwrap();
        let mut state = est.init_fit(&data, &mut r).unwrap();
        let mut history = data.clone();
        let mut batch = RegressionData::empty(1);
        for _ in 0..5 {
            let anchor = state.theta.clone();
            est.synthesize(&state, &history, 3, &mut batch, &mut r);
            let direct = mp_refit(&model, &anchor, &history.xs, &batch.xs, &batch.ys, n, RegWeight::InverseN).unwrap();
            history.extend_from(&batch);
            state = est.refit(&history, 3, state).unwrap();
            assert!((&state.theta - &direct).amax() < 1e-8);
        }
    }

    #[test]
    fn gapped_data_has_a_hole() {
        let mut r = rng::from_seed(48);
        let data = gapped_toy_data(50, (0.4, 0.6), 0.64, &mut r).unwrap();
        assert_eq!(data.len(), 40);
        let xs = data.xs.as_slice();
        let max_gap = xs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        assert!(max_gap > 0.5, "{max_gap}");
    }
}
