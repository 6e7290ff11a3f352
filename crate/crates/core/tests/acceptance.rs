//! End-to-end acceptance checks. Each criterion runs through the experiment
//! harness, prints one PASS/FAIL line with its measured values and wall time,
//! and the test fails if any criterion does.

use std::time::{Duration, Instant};

use mpost::engine::inflation_factor;
use mpost::harness::config::*;
use mpost::harness::{run_experiment, ResultRow, Results};

const SEED: u64 = 0;

fn run(params: ExperimentParams) -> Results {
    let cfg = ExperimentConfig::new(params.kind(), SEED).with_params(params);
    run_experiment(&cfg, false).expect("experiment runs").results
}

fn value(r: &Results, n: usize, metric: &str) -> (f64, f64) {
    let row = r
        .rows
        .iter()
        .find(|row| row.n == n && row.metric == metric && row.index.is_none())
        .unwrap_or_else(|| panic!("missing {metric} at n={n}"));
    (row.value, row.std_error)
}

fn indexed<'a>(r: &'a Results, metric: &'a str) -> impl Iterator<Item = (usize, f64, f64)> + 'a {
    r.rows
        .iter()
        .filter(move |row| row.metric == metric && row.index.is_some())
        .map(|row| (row.index.unwrap(), row.value, row.std_error))
}

fn same_setting(r: &Results, at: &ResultRow, metric: &str) -> f64 {
    r.rows
        .iter()
        .find(|row| row.metric == metric && (row.n, row.delta_n, row.cap_n) == (at.n, at.delta_n, at.cap_n))
        .unwrap_or_else(|| panic!("missing {metric}"))
        .value
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion_1() -> Outcome {
    let r = run(ExperimentParams::LingaussW2(LingaussW2Params {
        dim: 50,
        beta: 1.0,
        alpha_norm: 1.0,
        follower_steps: 200,
        ..Default::default()
    }));
    let (dev, _) = value(&r, 10, "follower_max_deviation");
    let (steps, _) = value(&r, 10, "follower_steps");
    Outcome {
        pass: dev < 1e-10 && steps == 200.0,
        detail: format!("sup-norm follower deviation {dev:.3e} over {steps} steps (< 1e-10)"),
    }
}

fn criterion_2() -> Outcome {
    let r = run(ExperimentParams::ExpfamW2(ExpfamW2Params::default()));
    let ratios: Vec<(f64, f64)> = [10, 20, 40].iter().map(|&n| value(&r, n, "w2_sq_over_radius_sq")).collect();
    let below = ratios[1].0 < 0.1;
    let decreasing = ratios.windows(2).all(|w| {
        let sigma = (w[0].1.powi(2) + w[1].1.powi(2)).sqrt();
        w[0].0 - w[1].0 > 3.0 * sigma
    });
    Outcome {
        pass: below && decreasing,
        detail: format!(
            "W2^2/eps^2 = {:.4} (+-{:.4}), {:.4} (+-{:.4}), {:.4} (+-{:.4}) at n = 10, 20, 40; n=20 below 0.1: {below}; decreasing by > 3 sigma: {decreasing}",
            ratios[0].0, ratios[0].1, ratios[1].0, ratios[1].1, ratios[2].0, ratios[2].1
        ),
    }
}

fn criterion_3() -> Outcome {
    let r = run(ExperimentParams::InflationCheck(InflationCheckParams::default()));
    let mut pass = true;
    let mut parts = Vec::new();
    for row in r.rows.iter().filter(|row| row.metric == "var_rel_err") {
        let ok = row.value.abs() <= 0.10;
        pass &= ok;
        // Also report the gap to the exact batched sum, which the simulation should match.
        let var = same_setting(&r, row, "across_chain_var");
        let exact = same_setting(&r, row, "batched_var");
        parts.push(format!(
            "dn={} N={}: {:+.1}%{} (vs exact batched sum {:+.1}%)",
            row.delta_n,
            row.cap_n,
            100.0 * row.value,
            if ok { "" } else { " (over 10%)" },
            100.0 * (var / exact - 1.0)
        ));
    }
    let f = inflation_factor(100, 25, 400).unwrap();
    let f_ok = (f - 1.7708).abs() <= 1e-3;
    pass &= f_ok;
    Outcome {
        pass,
        detail: format!("variance vs prediction: {}; inflation_factor(100, 25, 400) = {f:.5}", parts.join(", ")),
    }
}

fn criterion_4() -> Outcome {
    let r = run(ExperimentParams::GpToy(GpToyParams::default()));
    let n = GpToyParams::default().n();
    let (max_rel, _) = value(&r, n, "mp_max_width_rel_err");
    let (exact_w, _) = value(&r, n, "exact_mean_width");
    let (anchored_w, _) = value(&r, n, "anchored_mean_width");
    let (sampler_diff, _) = value(&r, n, "sampler_mean_width_rel_diff");
    let points = indexed(&r, "mp_width_rel_err").count();
    let within = max_rel <= 0.15 && points == 20;
    let narrower = anchored_w < exact_w;
    let agree = sampler_diff <= 0.10;
    Outcome {
        pass: within && narrower && agree,
        detail: format!(
            "max |MP/exact - 1| width at {points} points = {:.1}% (<= 15%: {within}); anchored mean width {anchored_w:.3} < exact {exact_w:.3}: {narrower}; sampler mean-width difference {:.1}% (<= 10%: {agree})",
            100.0 * max_rel,
            100.0 * sampler_diff
        ),
    }
}

fn criterion_5() -> Outcome {
    let r = run(ExperimentParams::Nullspace(NullspaceParams::default()));
    let mp: Vec<f64> = indexed(&r, "mp_var").map(|(_, v, _)| v).collect();
    let (bs_max, _) = value(&r, 10, "bs_var_max");
    let (scaled, _) = value(&r, 10, "mp_var_times_n_mean");
    let min = mp.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = mp.iter().cloned().fold(0.0, f64::max);
    let bs_ok = bs_max < 1e-8;
    let mp_ok = mp.len() == 40 && mp.iter().all(|v| (0.5..=1.5).contains(v));
    Outcome {
        pass: bs_ok && mp_ok,
        detail: format!(
            "bootstrap max null variance {bs_max:.2e} (< 1e-8: {bs_ok}); MP null variance in [{min:.4}, {max:.4}] over {} directions (all in [0.5, 1.5]: {mp_ok}); n * MP variance averages {scaled:.3}",
            mp.len()
        ),
    }
}

fn criterion_6() -> Outcome {
    let r = run(ExperimentParams::RareCategory(RareCategoryParams::default()));
    let (pb, pb_se) = value(&r, 50, "pb_missing_fraction");
    let (mp, _) = value(&r, 50, "mp_missing_fraction");
    let pb_ok = (pb - 0.605).abs() <= 0.05;
    let mp_ok = mp <= 0.001;
    Outcome {
        pass: pb_ok && mp_ok,
        detail: format!("parametric bootstrap missing fraction {pb:.4} (+-{pb_se:.4}, target 0.605 +- 0.05); MP missing fraction {mp:.5} (<= 0.001)"),
    }
}

fn criterion_7() -> Outcome {
    let r = run(ExperimentParams::ExcessBound(ExcessBoundParams::default()));
    let mut pass = true;
    let mut parts = Vec::new();
    for j in [5, 10, 50] {
        let (b2, se) = value(&r, j, "excess_sq");
        let (bound, _) = value(&r, j, "bound");
        let ok = b2 <= bound + 3.0 * se;
        pass &= ok;
        parts.push(format!("j={j}: {b2:.3e} (+-{se:.1e}) vs {bound:.3e}"));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn criterion_8() -> Outcome {
    let r = run(ExperimentParams::EnlargedSet(EnlargedSetParams::default()));
    let bounds: Vec<(usize, f64, f64)> = indexed(&r, "bound").collect();
    let mut pass = bounds.len() == 4;
    let mut parts = Vec::new();
    for (i, mass, se) in indexed(&r, "enlarged_mass") {
        let bound = bounds.iter().find(|b| b.0 == i).map(|b| b.1).unwrap();
        let gamma = indexed(&r, "gamma").find(|g| g.0 == i).unwrap().1;
        let ok = mass >= bound - 3.0 * se;
        pass &= ok;
        parts.push(format!("gamma={gamma}: mass {mass:.4} >= {bound:.4}"));
    }
    let (w2, _) = value(&r, 20, "w2");
    Outcome {
        pass,
        detail: format!("W2 = {w2:.4e}; {}", parts.join(", ")),
    }
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        ExperimentParams::ExpfamW2(ExpfamW2Params {
            tasks: 10,
            k: 200,
            horizon_factor: 20,
            ..Default::default()
        }),
        ExperimentParams::GpToy(GpToyParams {
            features: 100,
            k: 20,
            ..Default::default()
        }),
        ExperimentParams::RareCategory(RareCategoryParams::default()),
    ];
    let mut pass = true;
    let mut names = Vec::new();
    for params in configs {
        let cfg = ExperimentConfig::new(params.kind(), 7).with_params(params);
        let mut bytes = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("{}-{rep}", cfg.experiment));
            let (_, files) = mpost::harness::run_to_dir(&cfg, &out, false).unwrap();
            bytes.push(std::fs::read(files.results).unwrap());
        }
        let same = bytes[0] == bytes[1];
        pass &= same;
        names.push(format!("{} {}", cfg.experiment, if same { "identical" } else { "DIFFERENT" }));
    }
    Outcome {
        pass,
        detail: format!("results.csv reruns: {}", names.join(", ")),
    }
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, Duration, fn() -> Outcome); 9] = [
        ("linear-Gaussian follower exactness", Duration::from_secs(5), criterion_1),
        ("exp-family W2 well below the radius", Duration::from_secs(180), criterion_2),
        ("batched/truncated variance and inflation factor", Duration::from_secs(60), criterion_3),
        ("GP toy intervals", Duration::from_secs(120), criterion_4),
        ("null-space separation", Duration::from_secs(120), criterion_5),
        ("rare-category coverage", Duration::from_secs(60), criterion_6),
        ("excess-error bound", Duration::from_secs(60), criterion_7),
        ("enlarged-set mass", Duration::from_secs(60), criterion_8),
        ("determinism", Duration::from_secs(300), criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = outcome.pass && in_time;
        println!(
            "{} [{}] {name}: {} ({:.1} s, budget {} s{})",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
