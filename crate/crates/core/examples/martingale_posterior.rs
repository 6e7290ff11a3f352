//! An MP ensemble for a Gaussian mean, next to the exact conjugate posterior.
//! Shows the effect of the batch size and horizon and the inflation factor
//! that compensates for them.

use mpost::engine::{batched_variance_coefficient, inflation_factor};
use mpost::expfam::{ConjugatePrior, ExpFamilyModel, MeanParam, SeqMleEstimator};
use mpost::metrics::{ensemble_interval, w2_gaussian, CredibleInterval, IntervalMode};
use mpost::{rng, run_ensemble, MpRunConfig};
use nalgebra::DVector;

fn main() -> mpost::Result<()> {
    let model = ExpFamilyModel::gaussian_isotropic(1, 1.0)?;
    let n = 50;
    let data = model.sample_n(&MeanParam::scalar(0.7), n, &mut rng::from_seed(1))?;
    let prior = ConjugatePrior::new(1.0, DVector::zeros(1));
    let post = model.conjugate_posterior(&prior, &data)?.summary;
    let exact = CredibleInterval::gaussian(post.mean[0], post.cov[(0, 0)], 0.9)?;
    println!("posterior 90% interval  [{:.4}, {:.4}]", exact.lo, exact.hi);

    let est = SeqMleEstimator::new(model);
    for (delta_n, cap_n) in [(1, 5000), (10, 5000), (1, 100)] {
        let cfg = MpRunConfig::new(n, delta_n, cap_n, 2000, 7);
        let mp = run_ensemble(&est, &data, &cfg)?;
        let infl = inflation_factor(n, delta_n, cap_n)?;
        let draws = mp.coordinate(0);
        let raw = ensemble_interval(&draws, 0.9, 1.0, IntervalMode::Gaussian)?;
        let fixed = ensemble_interval(&draws, 0.9, infl, IntervalMode::Gaussian)?;
        let w2 = w2_gaussian(&mp.empirical_mean, &mp.empirical_cov, &post.mean, &post.cov)?;
        println!(
            "dn = {delta_n:>2}, N = {cap_n:>4}: var {:.5} (predicted {:.5}), raw [{:.4}, {:.4}], inflated x{infl:.3} [{:.4}, {:.4}], W2^2 {w2:.2e}",
            mp.empirical_cov[(0, 0)],
            batched_variance_coefficient(n, delta_n, cap_n),
            raw.lo,
            raw.hi,
            fixed.lo,
            fixed.hi
        );
    }
    Ok(())
}
