//! Result rows and the files a run writes: `results.csv`, `manifest.json` and
//! the optional `samples.csv`.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::engine::{EnsembleResult, MpRunConfig};
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::metrics::McEstimate;

pub const RESULTS_HEADER: &str = "n,delta_n,cap_n,k,metric,index,value,std_error";
pub const SAMPLES_HEADER: &str = "n,delta_n,cap_n,k,ensemble,member,coordinate,value";

/// One metric value for one run setting. `index` distinguishes repeated
/// metrics within a setting (query point, direction, ...).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub n: usize,
    pub delta_n: usize,
    pub cap_n: usize,
    pub k: usize,
    pub metric: String,
    pub index: Option<usize>,
    pub value: f64,
    pub std_error: f64,
}

impl ResultRow {
    fn sort_key(&self) -> (usize, usize, usize, usize, &str, Option<usize>) {
        (self.n, self.delta_n, self.cap_n, self.k, &self.metric, self.index)
    }
}

/// Ensemble members kept for `samples.csv`.
#[derive(Debug, Clone)]
pub struct MemberDump {
    pub setting: MpRunConfig,
    pub ensemble: String,
    pub members: Vec<Vec<f64>>,
}

/// Collects rows for one setting at a time.
#[derive(Debug, Default)]
pub struct Results {
    pub rows: Vec<ResultRow>,
    pub dumps: Vec<MemberDump>,
    pub keep_members: bool,
}

impl Results {
    pub fn new(keep_members: bool) -> Self {
        Results {
            keep_members,
            ..Default::default()
        }
    }

    pub fn push(&mut self, at: &MpRunConfig, metric: &str, index: Option<usize>, est: McEstimate) {
        self.rows.push(ResultRow {
            n: at.n,
            delta_n: at.delta_n,
            cap_n: at.cap_n,
            k: at.k,
            metric: metric.to_string(),
            index,
            value: est.value,
            std_error: est.std_error,
        });
    }

    /// A closed-form or otherwise exact value (standard error 0).
    pub fn exact(&mut self, at: &MpRunConfig, metric: &str, value: f64) {
        self.push(at, metric, None, McEstimate::exact(value));
    }

    pub fn indexed(&mut self, at: &MpRunConfig, metric: &str, index: usize, value: f64) {
        self.push(at, metric, Some(index), McEstimate::exact(value));
    }

    pub fn dump(&mut self, at: &MpRunConfig, ensemble: &str, result: &EnsembleResult) {
        if self.keep_members {
            self.dumps.push(MemberDump {
                setting: *at,
                ensemble: ensemble.to_string(),
                members: result.members.iter().map(|m| m.as_slice().to_vec()).collect(),
            });
        }
    }

    /// Rows in their canonical order.
    pub fn sorted_rows(&self) -> Vec<ResultRow> {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| {
            a.sort_key()
                .cmp(&b.sort_key())
                .then_with(|| a.value.total_cmp(&b.value))
        });
        rows
    }

    /// First row with this metric (and index), for callers that want one number back.
    pub fn find(&self, metric: &str, index: Option<usize>) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.metric == metric && r.index == index)
    }

    pub fn find_at(&self, n: usize, metric: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.n == n && r.metric == metric && r.index.is_none())
    }
}

fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        let index = r.index.map(|i| i.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.delta_n,
            r.cap_n,
            r.k,
            r.metric,
            index,
            float(r.value),
            float(r.std_error)
        );
    }
    out
}

pub fn samples_csv(dumps: &[MemberDump]) -> String {
    let mut sorted: Vec<&MemberDump> = dumps.iter().collect();
    sorted.sort_by(|a, b| {
        let ka = (a.setting.n, a.setting.delta_n, a.setting.cap_n, a.setting.k, &a.ensemble);
        let kb = (b.setting.n, b.setting.delta_n, b.setting.cap_n, b.setting.k, &b.ensemble);
        ka.partial_cmp(&kb).unwrap_or(Ordering::Equal)
    });
    let mut out = String::new();
    out.push_str(SAMPLES_HEADER);
    out.push('\n');
    for d in sorted {
        let s = &d.setting;
        for (m, member) in d.members.iter().enumerate() {
            for (c, v) in member.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{m},{c},{}",
                    s.n,
                    s.delta_n,
                    s.cap_n,
                    s.k,
                    d.ensemble,
                    float(*v)
                );
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub library_version: String,
    pub wall_clock_seconds: f64,
    pub config: serde_json::Value,
    pub results: Vec<ResultRow>,
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig, results: &Results, wall_clock_seconds: f64) -> Self {
        RunManifest {
            experiment: config.experiment.name().to_string(),
            config_hash: config.hash(),
            seed: config.seed,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds,
            config: config.to_json(),
            results: results.sorted_rows(),
        }
    }
}

/// Paths of the files a run wrote.
#[derive(Debug, Clone)]
pub struct WrittenFiles {
    pub results: PathBuf,
    pub manifest: PathBuf,
    pub samples: Option<PathBuf>,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_outputs(dir: &Path, manifest: &RunManifest, results: &Results) -> Result<WrittenFiles> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let files = WrittenFiles {
        results: dir.join("results.csv"),
        manifest: dir.join("manifest.json"),
        samples: results.keep_members.then(|| dir.join("samples.csv")),
    };
    write(&files.results, &results_csv(&manifest.results))?;
    let mut json = serde_json::to_string_pretty(manifest)?;
    json.push('\n');
    write(&files.manifest, &json)?;
    if let Some(path) = &files.samples {
        write(path, &samples_csv(&results.dumps))?;
    }
    Ok(files)
}
