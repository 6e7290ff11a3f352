//! Predictive diagnostics on a toy forecast: Wasserstein distances, KS,
//! interval coverage, CRPS, NLPD and the enlarged-interval check.

use mpost::metrics::*;
use mpost::rng;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> mpost::Result<()> {
    let mut rng = rng::from_seed(8);
    let mut normal = |m: f64, s: f64| m + s * rng.sample::<f64, _>(StandardNormal);
    let a: Vec<f64> = (0..2000).map(|_| normal(0.0, 1.0)).collect();
    let b: Vec<f64> = (0..2000).map(|_| normal(0.3, 1.2)).collect();
    println!("empirical W2^2 {:.4}", w2_empirical_1d(&a, &b)?);
    let (m1, c1) = (nalgebra::DVector::from_element(1, 0.0), nalgebra::DMatrix::from_element(1, 1, 1.0));
    let (m2, c2) = (nalgebra::DVector::from_element(1, 0.3), nalgebra::DMatrix::from_element(1, 1, 1.44));
    println!("Gaussian W2^2  {:.4}", w2_gaussian(&m1, &c1, &m2, &c2)?);
    println!("KS statistic   {:.4}", ks_statistic(&a, &b)?);

    // Calibration of 80% intervals over repeated forecasts.
    let truths: Vec<f64> = (0..500).map(|_| normal(0.0, 1.0)).collect();
    let intervals: Vec<CredibleInterval> =
        (0..500).map(|_| CredibleInterval::gaussian(0.0, 1.0, 0.8)).collect::<mpost::Result<_>>()?;
    println!("coverage of 80% intervals {:.3}", coverage(&intervals, &truths)?);

    let ensemble: Vec<f64> = a.iter().take(200).copied().collect();
    println!("CRPS at y = 0.5: {:.4}", crps_ensemble(&ensemble, 0.5)?);
    println!("NLPD at y = 0.5: {:.4}", nlpd_gaussian_mixture(&[0.0, 0.2], &[1.0, 0.5], 0.5)?);
    println!("RMSE {:.4}", rmse(&[0.1, 0.2, 0.3], &[0.0, 0.2, 0.5])?);

    let w2 = w2_empirical_1d(&a, &b)?.sqrt();
    let mut prng = rng::from_seed(9);
    let mass = enlarged_coverage(&a, || 0.3 + 1.2 * prng.sample::<f64, _>(StandardNormal), 0.1, 2.0 * w2, 20_000)?;
    println!("mass of the 2*W2-enlarged 90% interval {:.4} (bound {:.4})", mass.value, 1.0 - 0.1 - 0.25);
    Ok(())
}
