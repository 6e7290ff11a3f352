//! Running a registered experiment from code and writing its files, the same
//! path `mpost run` takes.

use mpost::harness::config::{ExperimentConfig, ExperimentKind, ExperimentParams, RareCategoryParams};
use mpost::harness::run_to_dir;

fn main() -> mpost::Result<()> {
    for kind in ExperimentKind::ALL {
        println!("{:<16} {}", kind.name(), kind.description());
    }
    let params = ExperimentParams::RareCategory(RareCategoryParams {
        k: 1000,
        ..Default::default()
    });
    let cfg = ExperimentConfig::new(ExperimentKind::RareCategory, 2024).with_params(params);
    let out = std::env::temp_dir().join("mpost-harness-example");
    let (run, files) = run_to_dir(&cfg, &out, false)?;
    for row in &run.manifest.results {
        println!("{:<22} {:.5} +- {:.5}", row.metric, row.value, row.std_error);
    }
    println!("wrote {} and {}", files.results.display(), files.manifest.display());
    Ok(())
}
