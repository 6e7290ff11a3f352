//! Experiment configuration: a strict JSON schema per experiment, resolved
//! against defaults and validated before anything runs.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::MpRunConfig;
use crate::error::{Error, Result};
use crate::gp::RegWeight;
use crate::metrics::IntervalMode;

pub const DEFAULT_MC_REPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ExpfamW2,
    LingaussW2,
    GpToy,
    Nullspace,
    RareCategory,
    InflationCheck,
    ExcessBound,
    EnlargedSet,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::ExpfamW2,
        ExperimentKind::LingaussW2,
        ExperimentKind::GpToy,
        ExperimentKind::Nullspace,
        ExperimentKind::RareCategory,
        ExperimentKind::InflationCheck,
        ExperimentKind::ExcessBound,
        ExperimentKind::EnlargedSet,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::ExpfamW2 => "expfam_w2",
            ExperimentKind::LingaussW2 => "lingauss_w2",
            ExperimentKind::GpToy => "gp_toy",
            ExperimentKind::Nullspace => "nullspace",
            ExperimentKind::RareCategory => "rare_category",
            ExperimentKind::InflationCheck => "inflation_check",
            ExperimentKind::ExcessBound => "excess_bound",
            ExperimentKind::EnlargedSet => "enlarged_set",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            ExperimentKind::ExpfamW2 => "W2 between MP and conjugate posterior, relative to the radius, over n",
            ExperimentKind::LingaussW2 => "spectral linear-Gaussian: MP vs posterior and follower exactness",
            ExperimentKind::GpToy => "RFF GP on gapped 1-D data: MP, exact and anchored-MAP intervals",
            ExperimentKind::Nullspace => "null-space variance: MP vs nonparametric bootstrap",
            ExperimentKind::RareCategory => "rare category: missing-category rate, MP vs parametric bootstrap",
            ExperimentKind::InflationCheck => "across-chain variance vs the batched/truncated prediction",
            ExperimentKind::ExcessBound => "excess error of sequential MLE vs its bound",
            ExperimentKind::EnlargedSet => "posterior mass of enlarged MP credible intervals",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                Error::config("experiment", format!("unknown experiment `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

/// Exponential-family W2 sweep: Gaussian with covariance `noise_var * I`,
/// conjugate prior of strength `alpha` centred at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpfamW2Params {
    pub dim: usize,
    pub alpha: f64,
    pub noise_var: f64,
    pub ns: Vec<usize>,
    /// Horizon `N = horizon_factor * n`.
    pub horizon_factor: usize,
    pub delta_n: usize,
    pub k: usize,
    pub tasks: usize,
}

impl Default for ExpfamW2Params {
    fn default() -> Self {
        ExpfamW2Params {
            dim: 5,
            alpha: 1.0,
            noise_var: 1.0,
            ns: vec![10, 20, 40],
            horizon_factor: 200,
            delta_n: 1,
            k: 2000,
            tasks: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LingaussW2Params {
    pub dim: usize,
    pub beta: f64,
    pub alpha_norm: f64,
    pub n: usize,
    pub delta_n: usize,
    pub cap_n: usize,
    pub k: usize,
    /// Real observations streamed through the follower after the first `n`.
    pub follower_steps: usize,
}

impl Default for LingaussW2Params {
    fn default() -> Self {
        LingaussW2Params {
            dim: 20,
            beta: 1.0,
            alpha_norm: 1.0,
            n: 10,
            delta_n: 1,
            cap_n: 2000,
            k: 2000,
            follower_steps: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpToyParams {
    /// Points drawn before the gap is removed.
    pub total_points: usize,
    /// Quantile range of the inputs cut out of the data.
    pub gap: [f64; 2],
    pub features: usize,
    pub bandwidth: f64,
    pub noise_var: f64,
    /// `delta_n = round(delta_fraction * n)`.
    pub delta_fraction: f64,
    /// `cap_n = round(horizon_factor * n)`.
    pub horizon_factor: f64,
    pub k: usize,
    /// In-sample query points (spread evenly over the sorted inputs).
    pub points: usize,
    pub level: f64,
    pub reg: RegWeight,
    pub init_reg: RegWeight,
    pub anchored_reg: RegWeight,
    /// Scale MP variances by the inflation factor.
    pub inflate: bool,
    pub interval_mode: IntervalMode,
    /// Support of the uniform input sampler.
    pub input_range: [f64; 2],
}

impl Default for GpToyParams {
    fn default() -> Self {
        GpToyParams {
            total_points: 50,
            gap: [0.4, 0.6],
            features: 400,
            bandwidth: 1.0,
            noise_var: 0.64,
            delta_fraction: 0.05,
            horizon_factor: 6.0,
            k: 100,
            points: 20,
            level: 0.8,
            reg: RegWeight::Noise,
            init_reg: RegWeight::Noise,
            anchored_reg: RegWeight::NoiseOverN,
            inflate: true,
            interval_mode: IntervalMode::Gaussian,
            input_range: [0.0, 6.0],
        }
    }
}

impl GpToyParams {
    /// Training-set size after the gap is cut out.
    pub fn n(&self) -> usize {
        let lo = (self.gap[0] * self.total_points as f64).round() as usize;
        let hi = (self.gap[1] * self.total_points as f64).round() as usize;
        self.total_points - hi.saturating_sub(lo).min(self.total_points)
    }

    pub fn run_config(&self, seed: u64) -> MpRunConfig {
        let n = self.n();
        let delta_n = (self.delta_fraction * n as f64).round().max(1.0) as usize;
        let cap_n = (self.horizon_factor * n as f64).round() as usize;
        MpRunConfig::new(n, delta_n, cap_n, self.k, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NullspaceParams {
    pub dim: usize,
    pub n: usize,
    pub delta_n: usize,
    pub cap_n: usize,
    pub k: usize,
    pub directions: usize,
}

impl Default for NullspaceParams {
    fn default() -> Self {
        NullspaceParams {
            dim: 50,
            n: 10,
            delta_n: 1,
            cap_n: 1000,
            k: 500,
            directions: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RareCategoryParams {
    pub eps: f64,
    pub n: usize,
    pub delta_n: usize,
    pub cap_n: usize,
    pub k: usize,
    /// Category means used to generate the real data.
    pub means: [f64; 2],
    pub ridge: f64,
}

impl Default for RareCategoryParams {
    fn default() -> Self {
        RareCategoryParams {
            eps: 0.01,
            n: 50,
            delta_n: 1,
            cap_n: 1000,
            k: 4000,
            means: [-1.0, 1.0],
            ridge: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InflationCheckParams {
    pub n: usize,
    pub delta_ns: Vec<usize>,
    pub cap_ns: Vec<usize>,
    pub k: usize,
}

impl Default for InflationCheckParams {
    fn default() -> Self {
        InflationCheckParams {
            n: 100,
            delta_ns: vec![1, 25],
            cap_ns: vec![400, 10_000],
            k: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExcessBoundParams {
    pub dim: usize,
    pub alpha: f64,
    pub noise_var: f64,
    pub js: Vec<usize>,
}

impl Default for ExcessBoundParams {
    fn default() -> Self {
        ExcessBoundParams {
            dim: 1,
            alpha: 1.0,
            noise_var: 1.0,
            js: vec![5, 10, 50],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnlargedSetParams {
    pub alpha: f64,
    pub n: usize,
    pub delta_n: usize,
    pub cap_n: usize,
    pub k: usize,
    pub gammas: Vec<f64>,
    /// `delta = multiplier * W2`.
    pub delta_multipliers: Vec<f64>,
}

impl Default for EnlargedSetParams {
    fn default() -> Self {
        EnlargedSetParams {
            alpha: 1.0,
            n: 20,
            delta_n: 1,
            cap_n: 2000,
            k: 2000,
            gammas: vec![0.1, 0.2],
            delta_multipliers: vec![2.0, 5.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentParams {
    ExpfamW2(ExpfamW2Params),
    LingaussW2(LingaussW2Params),
    GpToy(GpToyParams),
    Nullspace(NullspaceParams),
    RareCategory(RareCategoryParams),
    InflationCheck(InflationCheckParams),
    ExcessBound(ExcessBoundParams),
    EnlargedSet(EnlargedSetParams),
}

impl ExperimentParams {
    pub fn defaults(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::ExpfamW2 => ExperimentParams::ExpfamW2(Default::default()),
            ExperimentKind::LingaussW2 => ExperimentParams::LingaussW2(Default::default()),
            ExperimentKind::GpToy => ExperimentParams::GpToy(Default::default()),
            ExperimentKind::Nullspace => ExperimentParams::Nullspace(Default::default()),
            ExperimentKind::RareCategory => ExperimentParams::RareCategory(Default::default()),
            ExperimentKind::InflationCheck => ExperimentParams::InflationCheck(Default::default()),
            ExperimentKind::ExcessBound => ExperimentParams::ExcessBound(Default::default()),
            ExperimentKind::EnlargedSet => ExperimentParams::EnlargedSet(Default::default()),
        }
    }

    /// Parses `value` with the schema of `kind`; unknown keys are rejected.
    pub fn parse(kind: ExperimentKind, value: serde_json::Value) -> Result<Self> {
        fn strict<T: DeserializeOwned>(value: serde_json::Value) -> Result<T> {
            serde_json::from_value(value).map_err(|e| Error::config(field_of(&e.to_string()), e.to_string()))
        }
        Ok(match kind {
            ExperimentKind::ExpfamW2 => ExperimentParams::ExpfamW2(strict(value)?),
            ExperimentKind::LingaussW2 => ExperimentParams::LingaussW2(strict(value)?),
            ExperimentKind::GpToy => ExperimentParams::GpToy(strict(value)?),
            ExperimentKind::Nullspace => ExperimentParams::Nullspace(strict(value)?),
            ExperimentKind::RareCategory => ExperimentParams::RareCategory(strict(value)?),
            ExperimentKind::InflationCheck => ExperimentParams::InflationCheck(strict(value)?),
            ExperimentKind::ExcessBound => ExperimentParams::ExcessBound(strict(value)?),
            ExperimentKind::EnlargedSet => ExperimentParams::EnlargedSet(strict(value)?),
        })
    }

    pub fn kind(&self) -> ExperimentKind {
        match self {
            ExperimentParams::ExpfamW2(_) => ExperimentKind::ExpfamW2,
            ExperimentParams::LingaussW2(_) => ExperimentKind::LingaussW2,
            ExperimentParams::GpToy(_) => ExperimentKind::GpToy,
            ExperimentParams::Nullspace(_) => ExperimentKind::Nullspace,
            ExperimentParams::RareCategory(_) => ExperimentKind::RareCategory,
            ExperimentParams::InflationCheck(_) => ExperimentKind::InflationCheck,
            ExperimentParams::ExcessBound(_) => ExperimentKind::ExcessBound,
            ExperimentParams::EnlargedSet(_) => ExperimentKind::EnlargedSet,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ExperimentParams::ExpfamW2(p) => {
                positive("dim", p.dim)?;
                positive_f("alpha", p.alpha)?;
                positive_f("noise_var", p.noise_var)?;
                positive("tasks", p.tasks)?;
                if p.ns.is_empty() {
                    return Err(Error::config("ns", "need at least one sample size"));
                }
                for &n in &p.ns {
                    MpRunConfig::new(n, p.delta_n, p.horizon_factor * n, p.k, 0).validate()?;
                }
            }
            ExperimentParams::LingaussW2(p) => {
                positive("dim", p.dim)?;
                if !(p.beta > 0.5) {
                    return Err(Error::config("beta", "must exceed 1/2"));
                }
                finite("alpha_norm", p.alpha_norm)?;
                MpRunConfig::new(p.n, p.delta_n, p.cap_n, p.k, 0).validate()?;
            }
            ExperimentParams::GpToy(p) => {
                positive("features", p.features)?;
                positive_f("bandwidth", p.bandwidth)?;
                positive_f("noise_var", p.noise_var)?;
                positive("points", p.points)?;
                unit_open("level", p.level)?;
                if !(0.0 <= p.gap[0] && p.gap[0] < p.gap[1] && p.gap[1] <= 1.0) {
                    return Err(Error::config("gap", "need 0 <= lo < hi <= 1"));
                }
                if !(p.input_range[0] < p.input_range[1]) {
                    return Err(Error::config("input_range", "need lo < hi"));
                }
                positive_f("delta_fraction", p.delta_fraction)?;
                if !(p.horizon_factor >= 0.0) {
                    return Err(Error::config("horizon_factor", "must be non-negative"));
                }
                if p.points > p.n() {
                    return Err(Error::config("points", format!("more query points than training points ({})", p.n())));
                }
                p.run_config(0).validate()?;
                for (name, r) in [("reg", p.reg), ("init_reg", p.init_reg), ("anchored_reg", p.anchored_reg)] {
                    r.weight(p.n().max(1), p.noise_var)
                        .map_err(|e| Error::config(name, e.to_string()))?;
                }
            }
            ExperimentParams::Nullspace(p) => {
                positive("dim", p.dim)?;
                positive("directions", p.directions)?;
                // Centered data span at most n - 1 directions.
                if p.directions > p.dim.saturating_sub(p.n.saturating_sub(1)) {
                    return Err(Error::config("directions", "exceeds the null-space dimension dim - n + 1"));
                }
                MpRunConfig::new(p.n, p.delta_n, p.cap_n, p.k, 0).validate()?;
            }
            ExperimentParams::RareCategory(p) => {
                if !(p.eps > 0.0 && p.eps < 1.0) {
                    return Err(Error::config("eps", "must lie in (0, 1)"));
                }
                positive_f("ridge", p.ridge)?;
                finite("means", p.means[0] + p.means[1])?;
                MpRunConfig::new(p.n, p.delta_n, p.cap_n, p.k, 0).validate()?;
            }
            ExperimentParams::InflationCheck(p) => {
                if p.delta_ns.is_empty() || p.cap_ns.is_empty() {
                    return Err(Error::config("delta_ns", "need at least one (delta_n, cap_n) pair"));
                }
                if p.k < 2 {
                    return Err(Error::config("k", "need at least two chains for a variance"));
                }
                for &dn in &p.delta_ns {
                    for &cap in &p.cap_ns {
                        MpRunConfig::new(p.n, dn, cap, p.k, 0).validate()?;
                        if cap == 0 {
                            return Err(Error::config("cap_ns", "horizon must be positive"));
                        }
                    }
                }
            }
            ExperimentParams::ExcessBound(p) => {
                positive("dim", p.dim)?;
                positive_f("alpha", p.alpha)?;
                positive_f("noise_var", p.noise_var)?;
                if p.js.is_empty() || p.js.contains(&0) {
                    return Err(Error::config("js", "need sample sizes of at least 1"));
                }
            }
            ExperimentParams::EnlargedSet(p) => {
                positive_f("alpha", p.alpha)?;
                MpRunConfig::new(p.n, p.delta_n, p.cap_n, p.k, 0).validate()?;
                if p.gammas.is_empty() || p.gammas.iter().any(|g| !(*g > 0.0 && *g < 1.0)) {
                    return Err(Error::config("gammas", "each gamma must lie in (0, 1)"));
                }
                if p.delta_multipliers.is_empty() || p.delta_multipliers.iter().any(|m| !(*m > 0.0)) {
                    return Err(Error::config("delta_multipliers", "must be positive"));
                }
            }
        }
        Ok(())
    }
}

fn positive(field: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::config(field, "must be at least 1"));
    }
    Ok(())
}

fn positive_f(field: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::config(field, format!("must be positive and finite, got {v}")));
    }
    Ok(())
}

fn finite(field: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::config(field, "must be finite"));
    }
    Ok(())
}

fn unit_open(field: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::config(field, format!("must lie in (0, 1), got {v}")));
    }
    Ok(())
}

/// Pulls the offending key out of a serde message such as "unknown field `foo`, expected ...".
fn field_of(message: &str) -> String {
    message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "params".to_string())
}

/// The config file as written: every key except `params` is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<ExperimentKind>,
    #[serde(default)]
    params: Option<serde_json::Value>,
    mc_reps: Option<usize>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
}

/// A fully resolved and validated experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub params: ExperimentParams,
    pub mc_reps: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults for `kind` with the given seed.
    pub fn new(kind: ExperimentKind, seed: u64) -> Self {
        ExperimentConfig {
            experiment: kind,
            params: ExperimentParams::defaults(kind),
            mc_reps: DEFAULT_MC_REPS,
            seed,
            output_dir: None,
        }
    }

    pub fn with_params(mut self, params: ExperimentParams) -> Self {
        self.experiment = params.kind();
        self.params = params;
        self
    }

    pub fn from_json_str(text: &str, overrides: &Overrides) -> Result<Self> {
        let raw: RawConfig =
            serde_json::from_str(text).map_err(|e| Error::config(field_of(&e.to_string()), e.to_string()))?;
        let experiment = match (overrides.experiment, raw.experiment) {
            (Some(cli), Some(file)) if cli != file => {
                return Err(Error::config(
                    "experiment",
                    format!("command line says `{cli}` but the config file says `{file}`"),
                ))
            }
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => return Err(Error::config("experiment", "not given in the config or on the command line")),
        };
        let params = ExperimentParams::parse(experiment, raw.params.unwrap_or_else(|| serde_json::json!({})))?;
        let config = ExperimentConfig {
            experiment,
            params,
            mc_reps: raw.mc_reps.unwrap_or(DEFAULT_MC_REPS),
            seed: overrides.seed.or(raw.seed).unwrap_or(0),
            output_dir: overrides.output_dir.clone().or(raw.output_dir),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.kind() != self.experiment {
            return Err(Error::config("params", "parameters belong to a different experiment"));
        }
        if self.mc_reps == 0 {
            return Err(Error::config("mc_reps", "must be at least 1"));
        }
        self.params.validate()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON of the resolved config, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let text = serde_json::to_string(&canonical.to_json()).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("nope".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn defaults_fill_missing_keys() {
        let c = ExperimentConfig::from_json_str(
            r#"{"experiment": "rare_category", "params": {"n": 60}}"#,
            &Overrides::default(),
        )
        .unwrap();
        match c.params {
            ExperimentParams::RareCategory(p) => {
                assert_eq!(p.n, 60);
                assert_eq!(p.k, 4000);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(c.mc_reps, DEFAULT_MC_REPS);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::from_json_str(
            r#"{"experiment": "nullspace", "params": {"dimension": 3}}"#,
            &Overrides::default(),
        )
        .unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "dimension"), "{err}");
        let err = ExperimentConfig::from_json_str(r#"{"experiment": "nullspace", "sed": 3}"#, &Overrides::default())
            .unwrap_err();
        assert!(err.to_string().contains("sed"));
    }

    #[test]
    fn delta_n_above_cap_n_names_delta_n() {
        let err = ExperimentConfig::from_json_str(
            r#"{"experiment": "rare_category", "params": {"delta_n": 50, "cap_n": 10}}"#,
            &Overrides::default(),
        )
        .unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "delta_n"), "{err}");
    }

    #[test]
    fn command_line_overrides_file() {
        let o = Overrides {
            experiment: Some(ExperimentKind::ExcessBound),
            seed: Some(9),
            output_dir: None,
        };
        let c = ExperimentConfig::from_json_str(r#"{"seed": 1}"#, &o).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.experiment, ExperimentKind::ExcessBound);
        let clash = ExperimentConfig::from_json_str(r#"{"experiment": "gp_toy"}"#, &o).unwrap_err();
        assert!(matches!(clash, Error::Config { field, .. } if field == "experiment"));
    }

    #[test]
    fn hash_ignores_output_dir() {
        let mut a = ExperimentConfig::new(ExperimentKind::GpToy, 3);
        let h = a.hash();
        a.output_dir = Some("/tmp/x".into());
        assert_eq!(a.hash(), h);
        assert_eq!(h.len(), 64);
        assert_ne!(ExperimentConfig::new(ExperimentKind::GpToy, 4).hash(), h);
    }

    #[test]
    fn gp_run_config_from_fractions() {
        let p = GpToyParams::default();
        assert_eq!(p.n(), 40);
        let c = p.run_config(0);
        assert_eq!((c.delta_n, c.cap_n), (2, 240));
    }
}
