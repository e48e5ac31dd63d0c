//! Command-line runner: single estimations, BER/MSE sweeps, self-tests and
//! the stability probe.

mod commands;
mod config;
mod manifest;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phaseless_ofdm::eval::EstimatorKind;
use phaseless_ofdm::phy::Modulation;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Estimator(String),
    Io(String),
    SelftestFailed(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::SelftestFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Estimator(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Estimator(m) => write!(f, "estimator failure: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::SelftestFailed(n) => write!(f, "self-test failed: {n} invariant(s) violated"),
        }
    }
}

impl From<phaseless_ofdm::Error> for CliError {
    fn from(e: phaseless_ofdm::Error) -> Self {
        use phaseless_ofdm::Error as E;
        match e {
            E::InvalidConfig(_) | E::NegativeParameter { .. } => CliError::Config(e.to_string()),
            E::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Estimator(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "phaseless-ofdm",
    version,
    about = "OFDM channel estimation from magnitude-only pilots"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by the artifact-producing commands. Flags override
/// environment variables, which override the config file.
#[derive(Args, Debug, Default, Clone)]
pub struct Common {
    /// TOML experiment config; built-in defaults if omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Repeat a previous run from its manifest.
    #[arg(long, conflicts_with = "config")]
    pub manifest: Option<PathBuf>,
    #[arg(long, env = "PHASELESS_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "PHASELESS_TRIALS")]
    pub trials: Option<usize>,
    #[arg(long, env = "PHASELESS_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub knobs: Knobs,
}

#[derive(Args, Debug, Default, Clone)]
pub struct Knobs {
    /// Tikhonov parameter of classical LS (defaults to the noise variance).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Tikhonov parameter of the auto-convolution LS stage.
    #[arg(long)]
    pub autoconv_tau: Option<f64>,
    /// Multiplier on the noise-derived BPDN radius.
    #[arg(long)]
    pub eps_scale: Option<f64>,
    /// Auto-convolution threshold.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub k_prune: Option<usize>,
    /// l1 weight of the semidefinite relaxation.
    #[arg(long)]
    pub lambda_l1: Option<f64>,
    /// Known-phase pilots used to resolve the global sign.
    #[arg(long)]
    pub sign_tones: Option<usize>,
    /// Support budget of the lifted least-squares search (0 disables).
    #[arg(long)]
    pub support_search: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One end-to-end trial with a single estimator.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        estimator: Option<EstimatorKind>,
        #[arg(long, env = "PHASELESS_SIGMA2")]
        sigma2: Option<f64>,
        #[arg(long)]
        modulation: Option<Modulation>,
        /// Write h, the estimate and the measurements as JSON.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// BER/MSE sweep over the noise grid; writes CSV, SVG and a manifest.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `0dB`, `-30,-20,-10` or `-30:5:0`.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Comma-separated estimator list.
        #[arg(long, value_delimiter = ',')]
        estimators: Option<Vec<EstimatorKind>>,
    },
    /// Invariant suites of every module; nonzero exit on any failure.
    Selftest {
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0x5e1f_7e57)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        stability_trials: usize,
        #[arg(long, hide = true)]
        corrupt_dft: bool,
    },
    /// Empirical stability ratio over random sparse channel pairs.
    ProbeStability {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 64)]
        pilots: usize,
        #[arg(long, default_value_t = 8)]
        taps: usize,
        #[arg(long, default_value_t = 2)]
        sparsity: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate {
            common,
            estimator,
            sigma2,
            modulation,
            dump,
        } => commands::estimate(&common, estimator, sigma2, modulation, dump.as_deref()),
        Command::Sweep {
            common,
            grid,
            estimators,
        } => commands::sweep(&common, grid.as_deref(), estimators),
        Command::Selftest {
            trials,
            seed,
            stability_trials,
            corrupt_dft,
        } => commands::selftest(trials, seed, stability_trials, corrupt_dft),
        Command::ProbeStability {
            common,
            pilots,
            taps,
            sparsity,
        } => commands::probe_stability(&common, pilots, taps, sparsity),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("phaseless-ofdm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
