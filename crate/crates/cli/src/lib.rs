//! `heston-fisher`: prices, Greek surfaces, daily volatility fits and their
//! Fisher-information bands, written as plot-ready CSV.

mod commands;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heston_fisher::config::RunConfig;

pub use crate::output::Failure;

#[derive(Parser, Debug)]
#[command(name = "heston-fisher", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand. Flags override the params file,
/// which overrides the built-in defaults.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    params_file: Option<PathBuf>,
    /// FRFT grid size (power of two).
    #[arg(long)]
    n: Option<usize>,
    /// Frequency spacing of the FRFT grid.
    #[arg(long)]
    eta: Option<f64>,
    /// Log-strike spacing of the FRFT grid.
    #[arg(long)]
    lambda: Option<f64>,
    /// Carr–Madan damping factor.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (directory for `synth`); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    pub fn config(&self) -> Result<RunConfig, Failure> {
        let mut c = RunConfig::default();
        if let Some(path) = &self.params_file {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
            c.apply_text(&text)?;
        }
        if let Some(n) = self.n {
            c.frft.n_points = n;
        }
        if let Some(eta) = self.eta {
            c.frft.eta = eta;
        }
        if let Some(lambda) = self.lambda {
            c.frft.lambda = lambda;
        }
        if let Some(alpha) = self.alpha {
            c.frft.alpha = alpha;
        }
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Frft,
    Direct,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Price one option, or the whole FRFT strike grid.
    Price(commands::PriceArgs),
    /// Greek surface over strike and maturity ladders, or Vega against variance.
    Surface(commands::SurfaceArgs),
    /// Fit the daily variance of every day in a panel.
    Fit(commands::FitArgs),
    /// Credibility bands of fitted volatilities (or variance-swap strikes).
    Fisher(commands::FisherArgs),
    /// Write a synthetic panel and its true variance path.
    Synth(commands::SynthArgs),
}

/// Parses `args` (program name first) and runs the subcommand. Help and
/// version requests print and succeed; parse errors are config errors.
pub fn run<I, T>(args: I) -> Result<(), Failure>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => return Err(Failure::config(e.render().to_string().trim_end().trim_start_matches("error: "))),
    };
    match &cli.command {
        Command::Price(a) => commands::price(a),
        Command::Surface(a) => commands::surface(a),
        Command::Fit(a) => commands::fit(a),
        Command::Fisher(a) => commands::fisher(a),
        Command::Synth(a) => commands::synth(a),
    }
}
