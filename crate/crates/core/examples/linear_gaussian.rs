//! The spectral linear-Gaussian problem: the regularized update follows the
//! posterior mean exactly, and its MP ensemble sits close to the posterior.

use mpost::lingauss::{LinearGaussianEstimator, SpectralProblem};
use mpost::metrics::{w2_gaussian, ReferenceModel};
use mpost::{rng, run_ensemble, Dataset, MpRunConfig};
use nalgebra::DMatrix;

fn main() -> mpost::Result<()> {
    let problem = SpectralProblem::new(30, 1.0, 1.0)?;
    let mut rng = rng::from_seed(3);
    let theta0 = problem.sample_prior_theta(&mut rng);
    let all = problem.sample_data(&theta0, 110, &mut rng)?;
    let n = 10;
    let data = all.select(&(0..n).collect::<Vec<_>>());
    let rest = all.select(&(n..all.len()).collect::<Vec<_>>());

    let start = problem.lg_posterior(&data)?.mean;
    let path = problem.follow(&start, n, &rest)?;
    let last = problem.lg_posterior(&all)?.mean;
    println!("follower vs posterior mean after {} steps: {:.2e}", path.len(), (path.last().unwrap() - last).amax());

    let post = problem.lg_posterior(&data)?;
    let est = LinearGaussianEstimator {
        problem: problem.clone(),
    };
    let mp = run_ensemble(&est, &data, &MpRunConfig::new(n, 1, 2000, 1000, 11))?;
    let s = DMatrix::from_diagonal(&problem.norm_scaling());
    let w2 = w2_gaussian(
        &(&s * &mp.empirical_mean),
        &(&s * &mp.empirical_cov * &s),
        &(&s * &post.mean),
        &(&s * &post.cov * &s),
    )?;
    println!("Bayes error eps_n^2 = {:.4}", problem.lg_bayes_error(n)?);
    println!("W2^2(MP, posterior) = {w2:.2e}");
    Ok(())
}
