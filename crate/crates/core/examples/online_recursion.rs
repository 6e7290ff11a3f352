//! The one-sample online recursion: draw from the current fit, update, repeat.
//! Sequential MLE gives a martingale; a constant-step gradient rule does not
//! settle down.

use mpost::engine::online_mp_step;
use mpost::expfam::{ExpFamilyModel, GradientRule, SeqMleRule, StepSize};
use mpost::rng;
use nalgebra::DVector;

fn main() -> mpost::Result<()> {
    let model = ExpFamilyModel::gaussian_isotropic(1, 1.0)?;
    let rules: [(&str, Box<dyn mpost::engine::OnlineRule>); 2] = [
        ("sequential MLE", Box::new(SeqMleRule(&model))),
        (
            "gradient, step 0.05",
            Box::new(GradientRule {
                model: &model,
                step: StepSize::Constant(0.05),
            }),
        ),
    ];
    for (name, rule) in &rules {
        let finals: Vec<f64> = (0..500)
            .map(|chain| {
                let mut rng = rng::stream(1, chain);
                let mut theta = DVector::from_element(1, 0.4);
                for j in 21..=2020 {
                    theta = online_mp_step(rule.as_ref(), &theta, j, &mut rng).expect("step");
                }
                theta[0]
            })
            .collect();
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        let var = finals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (finals.len() - 1) as f64;
        println!("{name:>20}: mean {mean:+.4}, variance {var:.4}");
    }
    println!("sequential MLE prediction: mean 0.4, variance {:.4}", 1.0 / 20.0 - 1.0 / 2020.0);
    Ok(())
}
