//! `curve-impact` command line: config parsing, experiment orchestration and artifact output.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod config;
pub mod curve_cmd;
pub mod eurodollar_cmd;
pub mod hjm_cmd;
pub mod optexec_cmd;
pub mod output;
pub mod selftest;

pub use config::{validate_config, RunConfig, Violation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Other(_) => EXIT_OTHER,
        }
    }
}

impl From<curve_impact::Error> for CliError {
    fn from(e: curve_impact::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.into())
    }
}

#[derive(Debug, Parser)]
#[command(name = "curve-impact", version, about = "Price impact on interest-rate term structures")]
pub struct Cli {
    /// Worker threads (overrides the THREADS environment variable; default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON configuration file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Bundled configuration: paper_sec5 or optexec_benchmark.
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Averaged impacted yield curves, crossing times and parameter sweeps.
    SimulateCurve {
        #[command(flatten)]
        io: ConfigArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of Monte-Carlo paths.
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Impacted Eurodollar futures price, closed form against Monte Carlo.
    PriceEurodollar(eurodollar_cmd::EurodollarArgs),
    /// Optimal execution in feedback form with the brute-force oracle.
    Optexec {
        #[command(flatten)]
        io: ConfigArgs,
    },
    /// Drift-condition residuals of a forward-rate lattice.
    HjmCheck {
        /// Lattice CSV: header `surface,t,T1,...`, rows for forward, sigma, alpha, jf.
        #[arg(long)]
        lattice: PathBuf,
        /// CSV of `t,gamma`.
        #[arg(long)]
        gamma: PathBuf,
        /// Also write the report to this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in example checks.
    Selftest,
}

/// `--threads` beats `THREADS`; `None` means all cores.
pub fn resolve_threads(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| std::env::var("THREADS").ok().and_then(|s| s.trim().parse().ok())).filter(|&n| n > 0)
}

pub(crate) fn preset_text(name: &str) -> Result<&'static str, CliError> {
    match name {
        "paper_sec5" | "paper_sec5.cfg" => Ok(config::PAPER_SEC5),
        "optexec_benchmark" | "optexec_benchmark.cfg" => Ok(config::OPTEXEC_BENCHMARK),
        other => Err(CliError::Validation(format!("unknown preset `{other}`"))),
    }
}

/// Load a config from `--config` or `--preset`; relative paths inside resolve against the file's directory.
pub(crate) fn load_config<T: serde::de::DeserializeOwned>(io: &ConfigArgs) -> Result<(T, PathBuf), CliError> {
    match (&io.config, &io.preset) {
        (Some(p), _) => {
            let base = p.parent().map(|d| d.to_path_buf()).unwrap_or_default();
            Ok((config::load(p)?, base))
        }
        (None, Some(name)) => Ok((config::parse(preset_text(name)?)?, PathBuf::from("."))),
        (None, None) => Err(CliError::Validation("give --config or --preset".into())),
    }
}

pub(crate) fn prepare_out(out: &std::path::Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Validation(format!("cannot create output directory {}: {e}", out.display())))
}

fn dispatch(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::SimulateCurve { io, seed, paths } => {
            let (mut cfg, base): (config::CurveConfig, _) = load_config(&io)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = paths {
                cfg.paths = n;
            }
            curve_cmd::run(&cfg, &base, &io.out)
        }
        Command::PriceEurodollar(args) => eurodollar_cmd::run(&args),
        Command::Optexec { io } => {
            let (cfg, _): (config::OptexecConfig, _) = load_config(&io)?;
            optexec_cmd::run(&cfg, &io.out)
        }
        Command::HjmCheck { lattice, gamma, out } => hjm_cmd::run(&lattice, &gamma, out.as_deref()),
        Command::Selftest => selftest::run(),
    }
}

/// Parse `argv`, execute, print a one-line summary, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
        }
    };
    let threads = resolve_threads(cli.threads);
    match curve_impact::mc::with_threads(threads, || dispatch(cli)) {
        Ok(summary) => {
            println!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let num: CliError = curve_impact::Error::Conditioning("x".into()).into();
        assert_eq!(num.exit_code(), EXIT_NUMERICAL);
        let bad: CliError = curve_impact::Error::Grid("x".into()).into();
        assert_eq!(bad.exit_code(), EXIT_VALIDATION);
        assert_eq!(run(["curve-impact", "no-such-command"]), EXIT_VALIDATION);
        assert_eq!(run(["curve-impact", "optexec", "--config", "/nonexistent.cfg", "--out", "/tmp/x"]), EXIT_VALIDATION);
    }

    #[test]
    fn thread_flag_wins() {
        assert_eq!(resolve_threads(Some(3)), Some(3));
        assert_eq!(resolve_threads(Some(0)), None);
    }
}
