//! Conjugate exponential families: closed-form posteriors, exact posterior
//! draws, the sequential MLE and the posterior radius.

use mpost::expfam::{ConjugateModel, ConjugatePrior, ExpFamilyModel, MeanParam};
use mpost::metrics::radius_mc;
use mpost::rng;
use nalgebra::DVector;

fn main() -> mpost::Result<()> {
    let mut rng = rng::from_seed(42);

    // Bernoulli with a Beta(2, 2) prior on each coordinate.
    let coins = ExpFamilyModel::bernoulli(3)?;
    let prior = ConjugatePrior::new(4.0, DVector::from_element(3, 2.0));
    let truth = MeanParam::from_slice(&[0.2, 0.5, 0.9]);
    let flips = coins.sample_n(&truth, 30, &mut rng)?;
    let post = coins.conjugate_posterior(&prior, &flips)?;
    println!("bernoulli posterior mean {:.3?}", post.summary.mean.as_slice());
    println!("bernoulli posterior sd   {:.3?}", post.summary.cov.diagonal().map(f64::sqrt).as_slice());
    let draw = coins.posterior_sample(&post.updated, &mut rng)?;
    println!("one posterior draw       {:.3?}", draw.as_vector().as_slice());

    // Sequential MLE is a running mean of the sufficient statistic.
    let mut theta = MeanParam::from_slice(&[0.0; 3]);
    for (j, z) in flips.rows().enumerate() {
        theta = coins.seq_mle_update(&theta, z, j + 1)?.theta;
    }
    println!("sequential MLE           {:.3?}", theta.as_vector().as_slice());

    // The radius of a Gaussian posterior is tr(cov) / (j + alpha).
    let gauss = ExpFamilyModel::gaussian_isotropic(4, 1.0)?;
    let reference = ConjugateModel {
        model: gauss.clone(),
        prior: ConjugatePrior::new(1.0, DVector::zeros(4)),
    };
    for j in [5, 20, 80] {
        let closed = gauss.radius_closed_form(&reference.prior, j)?;
        let mc = radius_mc(&reference, j, 4000, &mut rng)?;
        println!("j = {j:>2}: radius^2 {closed:.4}, Monte Carlo {:.4} +- {:.4}", mc.value, mc.std_error);
    }
    Ok(())
}
