//! `mpost run | list | validate`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::harness::{self, ExperimentConfig, ExperimentKind, Overrides};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mpost", version, about = "Martingale-posterior experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write results.csv and manifest.json.
    Run {
        #[arg(long)]
        experiment: String,
        /// JSON config; defaults are used for anything it leaves out.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write raw ensemble members to samples.csv.
        #[arg(long)]
        dump_members: bool,
    },
    /// Print the experiment names.
    List,
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Experiment to validate against when the file does not name one.
        #[arg(long)]
        experiment: Option<String>,
    },
}

/// Exit code for an error: 2 for configuration problems, 3 for numerical failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        _ if e.is_config() => EXIT_CONFIG,
        Error::Io { .. } => EXIT_OTHER,
        _ => EXIT_NUMERICAL,
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    main_with_io(args, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn main_with_io<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> crate::Result<()> {
    let io = |e: std::io::Error| Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    match command {
        Command::List => {
            for kind in ExperimentKind::ALL {
                writeln!(stdout, "{:<16} {}", kind.name(), kind.description()).map_err(io)?;
            }
        }
        Command::Validate { config, experiment } => {
            let overrides = Overrides {
                experiment: experiment.as_deref().map(str::parse).transpose()?,
                ..Default::default()
            };
            let cfg = ExperimentConfig::from_file(&config, &overrides)?;
            writeln!(stdout, "ok: {} (config hash {})", cfg.experiment, cfg.hash()).map_err(io)?;
        }
        Command::Run {
            experiment,
            config,
            seed,
            out,
            dump_members,
        } => {
            harness::init_threads_from_env()?;
            let kind: ExperimentKind = experiment.parse()?;
            let overrides = Overrides {
                experiment: Some(kind),
                seed: Some(seed),
                output_dir: Some(out.clone()),
            };
            let cfg = match config {
                Some(path) => ExperimentConfig::from_file(&path, &overrides)?,
                None => ExperimentConfig::from_json_str("{}", &overrides)?,
            };
            let (run, files) = harness::run_to_dir(&cfg, &out, dump_members)?;
            writeln!(
                stdout,
                "{}: {} rows in {:.2} s -> {}",
                cfg.experiment,
                run.manifest.results.len(),
                run.manifest.wall_clock_seconds,
                files.results.display()
            )
            .map_err(io)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = main_with_io(std::iter::once("mpost").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn list_prints_all_names() {
        let (code, out, _) = run(&["list"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 8);
        assert!(out.lines().next().unwrap().starts_with("expfam_w2"));
    }

    #[test]
    fn unknown_subcommand_is_a_usage_error() {
        let (code, _, err) = run(&["frobnicate"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(!err.is_empty());
    }

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(exit_code(&Error::config("x", "bad")), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Numerical("nan".into())), EXIT_NUMERICAL);
        let chain = Error::Chain {
            chain: 1,
            iteration: 4,
            source: Box::new(Error::Numerical("singular".into())),
        };
        assert_eq!(exit_code(&chain), EXIT_NUMERICAL);
    }
}
