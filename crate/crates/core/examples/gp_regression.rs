//! Random-Fourier-feature GP regression on a gapped 1-D data set: exact
//! posterior intervals against the MP ensemble and an anchored-MAP ensemble.

use mpost::baselines::init_ensemble;
use mpost::engine::inflation_factor;
use mpost::gp::{exact_posterior, gapped_toy_data, AnchoredMapEstimator, GpMpEstimator, GpModel, RegWeight, RffKernel, XSampler};
use mpost::metrics::{ensemble_interval, IntervalMode};
use mpost::{rng, run_ensemble, Dataset, MpRunConfig, Samples};

fn main() -> mpost::Result<()> {
    let noise = 0.64;
    let kernel = RffKernel::matern32(1, 300, 1.0, &mut rng::from_seed(1))?;
    let model = GpModel::new(kernel, noise)?;
    let data = gapped_toy_data(50, (0.4, 0.6), noise, &mut rng::from_seed(2))?;
    let n = data.len();

    let grid: Vec<f64> = (0..=12).map(|i| 0.5 * i as f64).collect();
    let exact = exact_posterior(&model, &data, &Samples::from_scalars(&grid))?;

    let cfg = MpRunConfig::new(n, 2, 6 * n, 100, 3);
    let est = GpMpEstimator::new(model.clone(), &data, XSampler::uniform_1d(0.0, 6.0), RegWeight::Noise, RegWeight::Noise)?;
    let mp = run_ensemble(&est, &data, &cfg)?;
    let infl = inflation_factor(n, cfg.delta_n, cfg.cap_n)?;
    let anchored_est = AnchoredMapEstimator {
        model: model.clone(),
        sampler: XSampler::Empirical,
        reg: RegWeight::NoiseOverN,
    };
    let anchored = init_ensemble(&anchored_est, &data, 100, 4)?;

    println!("    x   exact sd   MP width/exact   anchored width/exact");
    for (x, q) in grid.iter().zip(&exact) {
        let exact_w = 2.0 * 1.2816 * q.var.sqrt();
        let width = |members: &[nalgebra::DVector<f64>], infl: f64| -> mpost::Result<f64> {
            let f: Vec<f64> = members.iter().map(|t| model.predict(t, &[*x])).collect();
            Ok(ensemble_interval(&f, 0.8, infl, IntervalMode::Gaussian)?.width())
        };
        println!(
            "{x:5.1}   {:8.3}   {:14.2}   {:20.2}",
            q.var.sqrt(),
            width(&mp.members, infl)? / exact_w,
            width(&anchored.members, 1.0)? / exact_w
        );
    }
    Ok(())
}
