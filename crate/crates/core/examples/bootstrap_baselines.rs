//! Where bootstraps and the MP disagree: directions the data never explored
//! and categories the data barely saw.

use mpost::baselines::{nonparametric_bootstrap, parametric_bootstrap, BaselineKind, RareCategoryEstimator};
use mpost::expfam::{ExpFamilyModel, MeanParam, SeqMleEstimator};
use mpost::{linalg, rng, run_ensemble, MpRunConfig};

fn main() -> mpost::Result<()> {
    // d = 30 with n = 8: the centered data span 7 directions.
    let model = ExpFamilyModel::gaussian_isotropic(30, 1.0)?;
    let data = model.sample_n(&MeanParam::from_slice(&[0.0; 30]), 8, &mut rng::from_seed(5))?;
    let est = SeqMleEstimator::new(model);
    let dirs = linalg::null_directions(&data, 3);
    let bs = nonparametric_bootstrap(&est, &data, 400, 1)?;
    let mp = run_ensemble(&est, &data, &MpRunConfig::new(8, 1, 800, 400, 2))?;
    for (i, v) in dirs.iter().enumerate() {
        println!("null direction {i}: bootstrap var {:.1e}, MP var {:.4}", bs.variance_along(v), mp.variance_along(v));
    }

    let rare = RareCategoryEstimator::new(0.01, 1e-6)?;
    let cats = rare.model.sample_n([-1.0, 1.0], 50, &mut rng::from_seed(6));
    let pb = parametric_bootstrap(&rare, &cats, 2000, 3)?;
    let missing = pb.members.iter().filter(|m| m[2] == 0.0).count();
    println!("parametric bootstrap replicates without the rare category: {:.3}", missing as f64 / 2000.0);

    for kind in [BaselineKind::ParametricBootstrap, BaselineKind::NonparametricBootstrap, BaselineKind::InitEnsemble] {
        let res = kind.run(&est, &data, 200, 9)?;
        println!("{kind:?}: trace of covariance {:.4}, degenerate {}", res.empirical_cov.trace(), res.degenerate);
    }
    Ok(())
}
