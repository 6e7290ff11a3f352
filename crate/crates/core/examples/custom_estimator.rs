//! Plugging a new algorithm into the MP engine: a Poisson rate estimated by a
//! shrunk running mean. Only the `Estimator` trait is needed.

use mpost::engine::{Estimator, ParamVector};
use mpost::rng::McRng;
use mpost::{run_ensemble, MpRunConfig, Samples};
use nalgebra::DVector;
use rand_distr::{Distribution, Poisson};

struct ShrunkPoissonRate {
    prior_rate: f64,
    prior_weight: f64,
}

#[derive(Clone)]
struct RateState {
    sum: f64,
    count: f64,
}

impl ShrunkPoissonRate {
    fn rate(&self, s: &RateState) -> f64 {
        (s.sum + self.prior_weight * self.prior_rate) / (s.count + self.prior_weight)
    }
}

impl Estimator for ShrunkPoissonRate {
    type Data = Samples;
    type State = RateState;

    fn init_fit(&self, data: &Samples, _rng: &mut McRng) -> mpost::Result<RateState> {
        Ok(RateState {
            sum: data.as_slice().iter().sum(),
            count: data.as_slice().len() as f64,
        })
    }

    fn synthesize(&self, state: &RateState, _history: &Samples, count: usize, out: &mut Samples, rng: &mut McRng) {
        let pois = Poisson::new(self.rate(state).max(1e-12)).expect("positive rate");
        out.resize_rows(count);
        for v in out.as_mut_slice() {
            *v = pois.sample(rng);
        }
    }

    fn refit(&self, data: &Samples, new: usize, mut state: RateState) -> mpost::Result<RateState> {
        for &z in data.tail(data.as_slice().len() - new) {
            state.sum += z;
            state.count += 1.0;
        }
        Ok(state)
    }

    fn param(&self, state: &RateState) -> ParamVector {
        DVector::from_element(1, self.rate(state))
    }

    fn streaming(&self) -> bool {
        true
    }
}

fn main() -> mpost::Result<()> {
    let data = Samples::from_scalars(&[3.0, 1.0, 4.0, 1.0, 5.0, 2.0, 6.0, 5.0, 3.0, 5.0]);
    let est = ShrunkPoissonRate {
        prior_rate: 2.0,
        prior_weight: 1.0,
    };
    let mp = run_ensemble(&est, &data, &MpRunConfig::new(10, 1, 2000, 2000, 0))?;
    let rates = mp.coordinate(0);
    let (lo, hi) = mpost::metrics::central_quantiles(&rates, 0.1)?;
    println!("MP rate mean {:.3}, 90% interval [{lo:.3}, {hi:.3}]", mp.empirical_mean[0]);
    // Gamma(shape 1 * 2 + 35, rate 1 + 10) is the matching conjugate posterior.
    println!("conjugate posterior mean {:.3}, sd {:.3}", 37.0 / 11.0, 37f64.sqrt() / 11.0);
    Ok(())
}
