//! The eight experiment bodies. Each turns a validated parameter set into
//! result rows; randomness comes only from streams derived from the run seed.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::baselines::{init_ensemble, nonparametric_bootstrap, parametric_bootstrap, RareCategoryEstimator};
use crate::data::{Dataset, Samples};
use crate::engine::{
    batched_variance_coefficient, inflation_factor, inflation_first_order, run_ensemble, Estimator, MpRunConfig,
};
use crate::error::{Error, Result};
use crate::expfam::{ConjugateModel, ConjugatePrior, ExpFamilyModel, SeqMleEstimator};
use crate::gp::{
    exact_posterior, gapped_toy_data, toy_function, AnchoredMapEstimator, GpMpEstimator, GpModel, RffKernel,
    XSampler,
};
use crate::harness::config::*;
use crate::harness::output::Results;
use crate::lingauss::{LinearGaussianEstimator, SpectralProblem};
use crate::linalg;
use crate::metrics::{
    enlarged_coverage, ensemble_interval, excess_mc, radius_mc, rmse, w2_gaussian, CredibleInterval, McEstimate,
    ReferenceModel,
};
use crate::rng::{derive_seed, stream};

/// What every experiment body needs besides its parameters.
#[derive(Debug, Clone, Copy)]
pub struct RunContext {
    pub seed: u64,
    pub mc_reps: usize,
    pub keep_members: bool,
}

pub fn run(params: &ExperimentParams, ctx: &RunContext) -> Result<Results> {
    let mut out = Results::new(ctx.keep_members);
    match params {
        ExperimentParams::ExpfamW2(p) => expfam_w2(p, ctx, &mut out)?,
        ExperimentParams::LingaussW2(p) => lingauss_w2(p, ctx, &mut out)?,
        ExperimentParams::GpToy(p) => gp_toy(p, ctx, &mut out)?,
        ExperimentParams::Nullspace(p) => nullspace(p, ctx, &mut out)?,
        ExperimentParams::RareCategory(p) => rare_category(p, ctx, &mut out)?,
        ExperimentParams::InflationCheck(p) => inflation_check(p, ctx, &mut out)?,
        ExperimentParams::ExcessBound(p) => excess_bound(p, ctx, &mut out)?,
        ExperimentParams::EnlargedSet(p) => enlarged_set(p, ctx, &mut out)?,
    }
    Ok(out)
}

fn zero_prior(alpha: f64, dim: usize) -> ConjugatePrior {
    ConjugatePrior::new(alpha, DVector::zeros(dim))
}

fn expfam_w2(p: &ExpfamW2Params, ctx: &RunContext, out: &mut Results) -> Result<()> {
    let model = ExpFamilyModel::gaussian_isotropic(p.dim, p.noise_var)?;
    let prior = zero_prior(p.alpha, p.dim);
    let est = SeqMleEstimator::new(model.clone());
    for (i, &n) in p.ns.iter().enumerate() {
        let mut cfg = MpRunConfig::new(n, p.delta_n, p.horizon_factor * n, p.k, 0);
        let radius_sq = model.radius_closed_form(&prior, n)?;
        let task_seed = derive_seed(ctx.seed, i as u64);
        let mut ratios = Vec::with_capacity(p.tasks);
        let mut w2s = Vec::with_capacity(p.tasks);
        let mut clamps = 0;
        for t in 0..p.tasks {
            let mut rng = stream(task_seed, 2 * t as u64);
            let theta0 = model.posterior_sample(&prior, &mut rng)?;
            let data = model.sample_n(&theta0, n, &mut rng)?;
            let post = model.conjugate_posterior(&prior, &data)?.summary;
            cfg.seed = derive_seed(task_seed, 2 * t as u64 + 1);
            let mp = run_ensemble(&est, &data, &cfg)?;
            let w2 = w2_gaussian(&mp.empirical_mean, &mp.empirical_cov, &post.mean, &post.cov)?;
            w2s.push(w2);
            ratios.push(w2 / radius_sq);
            clamps += mp.clamp_events;
            if t == 0 {
                out.dump(&cfg, "mp_task0", &mp);
            }
        }
        out.push(&cfg, "w2_sq_over_radius_sq", None, McEstimate::from_draws(&ratios));
        out.push(&cfg, "w2_sq", None, McEstimate::from_draws(&w2s));
        out.exact(&cfg, "radius_sq", radius_sq);
        out.exact(&cfg, "inv_sqrt_n", 1.0 / (n as f64).sqrt());
        out.exact(&cfg, "clamp_events", clamps as f64);
    }
    Ok(())
}

fn lingauss_w2(p: &LingaussW2Params, ctx: &RunContext, out: &mut Results) -> Result<()> {
    let problem = SpectralProblem::new(p.dim, p.beta, p.alpha_norm)?;
    let mut rng = stream(ctx.seed, 0);
    let theta0 = problem.sample_prior_theta(&mut rng);
    let stream_data = problem.sample_data(&theta0, p.n + p.follower_steps, &mut rng)?;
    let data = stream_data.select(&(0..p.n).collect::<Vec<_>>());
    let post = problem.lg_posterior(&data)?;

    let cfg = MpRunConfig::new(p.n, p.delta_n, p.cap_n, p.k, derive_seed(ctx.seed, 1));
    let est = LinearGaussianEstimator {
        problem: problem.clone(),
    };
    let mp = run_ensemble(&est, &data, &cfg)?;
    out.dump(&cfg, "mp", &mp);

    // The weighted norm becomes Euclidean after scaling coordinates.
    let s = DMatrix::from_diagonal(&problem.norm_scaling());
    let w2 = w2_gaussian(
        &(&s * &mp.empirical_mean),
        &(&s * &mp.empirical_cov * &s),
        &(&s * &post.mean),
        &(&s * &post.cov * &s),
    )?;
    let radius_sq = problem.lg_bayes_error(p.n)?;
    out.exact(&cfg, "w2_sq", w2);
    out.exact(&cfg, "radius_sq", radius_sq);
    out.exact(&cfg, "w2_sq_over_radius_sq", w2 / radius_sq);

    // Follower on the real stream vs the posterior mean after each observation.
    let rest = stream_data.select(&(p.n..stream_data.len()).collect::<Vec<_>>());
    let path = problem.follow(&post.mean, p.n, &rest)?;
    let mut sum = data.rows().fold(DVector::zeros(p.dim), |acc, z| acc + DVector::from_column_slice(z));
    let mut max_dev = 0.0f64;
    for (r, theta) in path.iter().enumerate() {
        sum += DVector::from_column_slice(rest.row(r));
        let j = p.n + r + 1;
        let bayes = problem.posterior_from_mean(&(&sum / j as f64), j).mean;
        max_dev = max_dev.max((theta - bayes).amax());
    }
    out.exact(&cfg, "follower_max_deviation", max_dev);
    out.exact(&cfg, "follower_steps", path.len() as f64);
    Ok(())
}

fn gp_toy(p: &GpToyParams, ctx: &RunContext, out: &mut Results) -> Result<()> {
    let kernel = RffKernel::matern32(1, p.features, p.bandwidth, &mut stream(ctx.seed, 1))?;
    let model = GpModel::new(kernel, p.noise_var)?;
    let data = gapped_toy_data(p.total_points, (p.gap[0], p.gap[1]), p.noise_var, &mut stream(ctx.seed, 0))?;
    let n = data.len();
    let cfg = p.run_config(derive_seed(ctx.seed, 2));
    debug_assert_eq!(n, cfg.n);

    let xs = data.xs.as_slice();
    let grid: Vec<f64> = (0..p.points)
        .map(|i| xs[((i as f64 + 0.5) * n as f64 / p.points as f64) as usize])
        .collect();
    let exact = exact_posterior(&model, &data, &Samples::from_scalars(&grid))?;
    let inflation = if p.inflate {
        inflation_factor(n, cfg.delta_n, cfg.cap_n)?
    } else {
        1.0
    };

    let mp_with = |sampler: XSampler, seed: u64| -> Result<_> {
        let est = GpMpEstimator::new(model.clone(), &data, sampler, p.reg, p.init_reg)?;
        run_ensemble(&est, &data, &MpRunConfig { seed, ..cfg })
    };
    let mp_uniform = mp_with(XSampler::uniform_1d(p.input_range[0], p.input_range[1]), cfg.seed)?;
    let mp_empirical = mp_with(XSampler::Empirical, derive_seed(ctx.seed, 3))?;
    let anchored_est = AnchoredMapEstimator {
        model: model.clone(),
        sampler: XSampler::Empirical,
        reg: p.anchored_reg,
    };
    let anchored = init_ensemble(&anchored_est, &data, p.k, derive_seed(ctx.seed, 4))?;
    out.dump(&cfg, "mp_uniform", &mp_uniform);
    out.dump(&cfg, "mp_empirical", &mp_empirical);
    out.dump(&cfg, "anchored", &anchored);

    let intervals = |members: &[DVector<f64>], infl: f64| -> Result<Vec<(CredibleInterval, f64)>> {
        grid.iter()
            .map(|&x| {
                let f: Vec<f64> = members.iter().map(|t| model.predict(t, &[x])).collect();
                let mean = f.iter().sum::<f64>() / f.len() as f64;
                Ok((ensemble_interval(&f, p.level, infl, p.interval_mode)?, mean))
            })
            .collect()
    };
    let exact_ci: Vec<CredibleInterval> = exact
        .iter()
        .map(|q| CredibleInterval::gaussian(q.mean, q.var, p.level))
        .collect::<Result<_>>()?;
    let uni = intervals(&mp_uniform.members, inflation)?;
    let emp = intervals(&mp_empirical.members, inflation)?;
    let anc = intervals(&anchored.members, 1.0)?;

    let mut max_rel = [0.0f64; 2];
    let mut max_sampler_diff = 0.0f64;
    for (i, &x) in grid.iter().enumerate() {
        out.indexed(&cfg, "x", i, x);
        for (name, ci) in [
            ("exact", &exact_ci[i]),
            ("mp", &uni[i].0),
            ("mp_empirical", &emp[i].0),
            ("anchored", &anc[i].0),
        ] {
            out.indexed(&cfg, &format!("{name}_lo"), i, ci.lo);
            out.indexed(&cfg, &format!("{name}_hi"), i, ci.hi);
        }
        let rel_u = uni[i].0.width() / exact_ci[i].width() - 1.0;
        let rel_e = emp[i].0.width() / exact_ci[i].width() - 1.0;
        out.indexed(&cfg, "mp_width_rel_err", i, rel_u);
        out.indexed(&cfg, "mp_empirical_width_rel_err", i, rel_e);
        max_rel[0] = max_rel[0].max(rel_u.abs());
        max_rel[1] = max_rel[1].max(rel_e.abs());
        max_sampler_diff = max_sampler_diff.max((uni[i].0.width() / emp[i].0.width() - 1.0).abs());
    }
    let mean_width = |cis: &mut dyn Iterator<Item = f64>| {
        let w: Vec<f64> = cis.collect();
        w.iter().sum::<f64>() / w.len() as f64
    };
    let exact_w = mean_width(&mut exact_ci.iter().map(|c| c.width()));
    let uni_w = mean_width(&mut uni.iter().map(|c| c.0.width()));
    let emp_w = mean_width(&mut emp.iter().map(|c| c.0.width()));
    let anc_w = mean_width(&mut anc.iter().map(|c| c.0.width()));
    out.exact(&cfg, "exact_mean_width", exact_w);
    out.exact(&cfg, "mp_mean_width", uni_w);
    out.exact(&cfg, "mp_empirical_mean_width", emp_w);
    out.exact(&cfg, "anchored_mean_width", anc_w);
    out.exact(&cfg, "mp_max_width_rel_err", max_rel[0]);
    out.exact(&cfg, "mp_empirical_max_width_rel_err", max_rel[1]);
    out.exact(&cfg, "sampler_mean_width_rel_diff", (uni_w / emp_w - 1.0).abs());
    out.exact(&cfg, "sampler_max_width_rel_diff", max_sampler_diff);
    out.exact(&cfg, "inflation_factor", inflation);

    let truth: Vec<f64> = grid.iter().map(|&x| toy_function(x)).collect();
    let exact_means: Vec<f64> = exact.iter().map(|q| q.mean).collect();
    let mp_means: Vec<f64> = uni.iter().map(|c| c.1).collect();
    out.exact(&cfg, "exact_rmse", rmse(&exact_means, &truth)?);
    out.exact(&cfg, "mp_rmse", rmse(&mp_means, &truth)?);
    Ok(())
}

fn nullspace(p: &NullspaceParams, ctx: &RunContext, out: &mut Results) -> Result<()> {
    let model = ExpFamilyModel::gaussian_isotropic(p.dim, 1.0)?;
    let est = SeqMleEstimator::new(model.clone());
    let mut rng = stream(ctx.seed, 0);
    let theta0 = model.posterior_sample(&zero_prior(1.0, p.dim), &mut rng)?;
    let data = model.sample_n(&theta0, p.n, &mut rng)?;
    let dirs = linalg::null_directions(&data, p.directions);
    if dirs.len() < p.directions {
        return Err(Error::config(
            "directions",
            format!("the data leave only {} null directions", dirs.len()),
        ));
    }
    let cfg = MpRunConfig::new(p.n, p.delta_n, p.cap_n, p.k, derive_seed(ctx.seed, 1));
    let mp = run_ensemble(&est, &data, &cfg)?;
    let bs = nonparametric_bootstrap(&est, &data, p.k, derive_seed(ctx.seed, 2))?;
    out.dump(&cfg, "mp", &mp);
    out.dump(&cfg, "bootstrap", &bs);

    let mut mp_vars = Vec::with_capacity(dirs.len());
    let mut bs_max = 0.0f64;
    for (i, v) in dirs.iter().enumerate() {
        let mv = mp.variance_along(v);
        let bv = bs.variance_along(v);
        out.indexed(&cfg, "mp_var", i, mv);
        out.indexed(&cfg, "bs_var", i, bv);
        mp_vars.push(mv);
        bs_max = bs_max.max(bv);
    }
    let min = mp_vars.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = mp_vars.iter().cloned().fold(0.0, f64::max);
    let mean = McEstimate::from_draws(&mp_vars);
    out.exact(&cfg, "mp_var_min", min);
    out.exact(&cfg, "mp_var_max", max);
    out.push(&cfg, "mp_var_mean", None, mean);
    out.exact(&cfg, "mp_var_times_n_mean", mean.value * p.n as f64);
    out.exact(&cfg, "mp_var_predicted", batched_variance_coefficient(p.n, p.delta_n, p.cap_n));
    out.exact(&cfg, "bs_var_max", bs_max);
    Ok(())
}

fn rare_category(p: &RareCategoryParams, ctx: &RunContext, out: &mut Results) -> Result<()> {
    let est = RareCategoryEstimator::new(p.eps, p.ridge)?;
    let data = est.model.sample_n(p.means, p.n, &mut stream(ctx.seed, 0));
    let real_count0 = data.rows().filter(|r| r[0] == 0.0).count();
    let cfg = MpRunConfig::new(p.n, p.delta_n, p.cap_n, p.k, derive_seed(ctx.seed, 2));

    let pb = parametric_bootstrap(&est, &data, p.k, derive_seed(ctx.seed, 1))?;
    let mp = run_ensemble(&est, &data, &cfg)?;
    out.dump(&cfg, "parametric_bootstrap", &pb);
    out.dump(&cfg, "mp", &mp);

    // A bootstrap replicate misses category 0 when it contains none; an MP chain
    // misses it when no synthetic batch added one.
    let pb_missing = pb.members.iter().filter(|m| m[2] == 0.0).count();
    let mp_missing = mp.members.iter().filter(|m| m[2] == real_count0 as f64).count();
    let synthetic = cfg.iterations() * cfg.delta_n;
    out.push(&cfg, "pb_missing_fraction", None, McEstimate::proportion(pb_missing, p.k));
    out.push(&cfg, "mp_missing_fraction", None, McEstimate::proportion(mp_missing, p.k));
    out.exact(&cfg, "pb_missing_expected", (1.0 - p.eps).powi(p.n as i32));
    out.exact(&cfg, "mp_missing_expected", (1.0 - p.eps).powi(synthetic as i32));
    out.exact(&cfg, "real_count0", real_count0 as f64);
    out.exact(&cfg, "pb_mean0_var", pb.empirical_cov[(0, 0)]);
    out.exact(&cfg, "mp_mean0_var", mp.empirical_cov[(0, 0)]);
    Ok(())
}

fn inflation_check(p: &InflationCheckParams, ctx: &RunContext, out: &mut Results) -> Result<()> {
    let model = ExpFamilyModel::gaussian_isotropic(1, 1.0)?;
    let est = SeqMleEstimator::new(model.clone());
    let data = model.sample_n(&crate::expfam::MeanParam::scalar(0.0), p.n, &mut stream(ctx.seed, 0))?;
    let fisher_inv = 1.0;
    let mut setting = 0u64;
    for &dn in &p.delta_ns {
        for &cap in &p.cap_ns {
            setting += 1;
            let cfg = MpRunConfig::new(p.n, dn, cap, p.k, derive_seed(ctx.seed, setting));
            let mp = run_ensemble(&est, &data, &cfg)?;
            let var = mp.empirical_cov[(0, 0)];
            // Standard error of a Gaussian sample variance.
            let se = var * (2.0 / (p.k - 1) as f64).sqrt();
            let predicted = (1.0 / (p.n + dn) as f64 - 1.0 / (cap + dn) as f64) * fisher_inv;
            out.push(&cfg, "across_chain_var", None, McEstimate { value: var, std_error: se, replications: p.k });
            out.exact(&cfg, "predicted_var", predicted);
            out.push(
                &cfg,
                "var_rel_err",
                None,
                McEstimate {
                    value: var / predicted - 1.0,
                    std_error: se / predicted,
                    replications: p.k,
                },
            );
            out.exact(&cfg, "batched_var", batched_variance_coefficient(p.n, dn, cap) * fisher_inv);
            out.exact(&cfg, "inflation_factor", inflation_factor(p.n, dn, cap)?);
            out.exact(&cfg, "inflation_first_order", inflation_first_order(p.n, dn, cap));
        }
    }
    Ok(())
}

fn excess_bound(p: &ExcessBoundParams, ctx: &RunContext, out: &mut Results) -> Result<()> {
    let model = ExpFamilyModel::gaussian_isotropic(p.dim, p.noise_var)?;
    let reference = ConjugateModel {
        model: model.clone(),
        prior: zero_prior(p.alpha, p.dim),
    };
    let est = SeqMleEstimator::new(model.clone());
    let follower = |data: &Samples| -> Result<DVector<f64>> {
        // Sequential MLE has no initialization randomness.
        let state = est.init_fit(data, &mut crate::rng::from_seed(0))?;
        Ok(est.param(&state))
    };
    for (i, &j) in p.js.iter().enumerate() {
        let cfg = MpRunConfig::new(j, 1, 0, 0, 0);
        let excess = excess_mc(&reference, follower, j, ctx.mc_reps, &mut stream(ctx.seed, 2 * i as u64))?;
        let radius = radius_mc(&reference, j, ctx.mc_reps, &mut stream(ctx.seed, 2 * i as u64 + 1))?;
        let radius_sq = model.radius_closed_form(&reference.prior, j)?;
        out.push(&cfg, "excess_sq", None, excess);
        out.push(&cfg, "radius_sq_mc", None, radius);
        out.exact(&cfg, "radius_sq", radius_sq);
        out.exact(&cfg, "bound", 2.0 * p.alpha / j as f64 * radius_sq);
    }
    Ok(())
}

fn enlarged_set(p: &EnlargedSetParams, ctx: &RunContext, out: &mut Results) -> Result<()> {
    let model = ExpFamilyModel::gaussian_isotropic(1, 1.0)?;
    let prior = zero_prior(p.alpha, 1);
    let est = SeqMleEstimator::new(model.clone());
    let mut rng = stream(ctx.seed, 0);
    let theta0 = model.posterior_sample(&prior, &mut rng)?;
    let data = model.sample_n(&theta0, p.n, &mut rng)?;
    let post = model.conjugate_posterior(&prior, &data)?.summary;
    let cfg = MpRunConfig::new(p.n, p.delta_n, p.cap_n, p.k, derive_seed(ctx.seed, 1));
    let mp = run_ensemble(&est, &data, &cfg)?;
    out.dump(&cfg, "mp", &mp);
    let draws = mp.coordinate(0);
    let w2 = w2_gaussian(&mp.empirical_mean, &mp.empirical_cov, &post.mean, &post.cov)?.sqrt();
    out.exact(&cfg, "w2", w2);
    let (m, sd) = (post.mean[0], post.cov[(0, 0)].sqrt());
    let mut index = 0;
    for &gamma in &p.gammas {
        for &mult in &p.delta_multipliers {
            let delta = mult * w2;
            let mut prng = stream(ctx.seed, 10 + index as u64);
            let mass = enlarged_coverage(
                &draws,
                || m + sd * prng.sample::<f64, _>(StandardNormal),
                gamma,
                delta,
                ctx.mc_reps,
            )?;
            let bound = if delta > 0.0 { 1.0 - gamma - (w2 / delta).powi(2) } else { 1.0 - gamma };
            out.indexed(&cfg, "gamma", index, gamma);
            out.indexed(&cfg, "delta", index, delta);
            out.push(&cfg, "enlarged_mass", Some(index), mass);
            out.indexed(&cfg, "bound", index, bound);
            index += 1;
        }
    }
    Ok(())
}
