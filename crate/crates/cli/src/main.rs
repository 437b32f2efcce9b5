//! `entchain`: verification suites, spectra, entropy sweeps, path dumps and exports.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use entchain_core::ChainVariant;

#[derive(Parser, Debug)]
#[command(name = "entchain", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Determinism, well-formedness, path and potential suites; nonzero exit on failure.
    Verify(Opts),
    /// Lowest eigenvalues as JSON records, one per n.
    Spectrum(Opts),
    /// Entanglement entropy sweep as CSV.
    Entropy(Opts),
    /// Dump the path through a start state with its potentials.
    Path(Opts),
    /// Write a basis or an operator in text form.
    Export {
        #[arg(value_enum)]
        what: ExportKind,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExportKind {
    Basis,
    Operator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum VariantArg {
    Core,
    FrustrationFree,
    UniformBracket,
}

impl From<VariantArg> for ChainVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Core => ChainVariant::Core,
            VariantArg::FrustrationFree => ChainVariant::FrustrationFree,
            VariantArg::UniformBracket => ChainVariant::UniformBracket,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum FilterArg {
    WellFormed,
    Bracketed,
}

#[derive(Args, Debug, Clone)]
pub struct Opts {
    /// Comma-separated site counts (segment lengths with --cycle).
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Number of segments on the cycle.
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    cycle: bool,
    #[arg(long, value_enum, default_value = "core")]
    variant: VariantArg,
    /// phi_g, phi_x:<bits>, psi:<i>, Phi, or a start state in glyph notation for `path`.
    #[arg(long)]
    state: Option<String>,
    /// Rule set in the text rule format instead of the built-in chain rules.
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Directory for output files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fit log(normalized gap) against log(n) over the n list.
    #[arg(long)]
    gap_scan: bool,
    /// Chain weight on the cycle instead of the measured one.
    #[arg(long)]
    p_weight: Option<i64>,
    /// Single region length for `entropy`.
    #[arg(long)]
    region_len: Option<usize>,
    /// Basis filter for chain exports.
    #[arg(long, value_enum)]
    filter: Option<FilterArg>,
    /// Record wall-clock times (outputs are then no longer reproducible byte for byte).
    #[arg(long)]
    timing: bool,
    /// `key=value` file with defaults for any flag, plus `command=`.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Validated settings shared by all commands.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub command: &'static str,
    pub ns: Vec<usize>,
    pub t: Option<usize>,
    pub cycle: bool,
    pub variant: ChainVariant,
    pub state: Option<String>,
    pub rules: Option<PathBuf>,
    pub tol: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub gap_scan: bool,
    pub p_weight: Option<i64>,
    pub region_len: Option<usize>,
    pub filter: Option<FilterArg>,
    pub timing: bool,
}

impl ExperimentConfig {
    fn new(command: &'static str, o: Opts) -> Result<Self> {
        if !(o.tol > 0.0) {
            bail!("--tol must be positive, got {}", o.tol);
        }
        if o.n.is_empty() {
            bail!("--n is empty");
        }
        if o.t == Some(0) {
            bail!("--t must be positive");
        }
        if o.rules.is_some() && o.cycle {
            bail!("--rules applies to chains only");
        }
        let ground_state = match command {
            "entropy" => true,
            "path" => o.state.as_deref().is_none_or(|s| !s.contains(' ')),
            "spectrum" => o.cycle,
            _ => false,
        };
        if ground_state {
            if let Some(&n) = o.n.iter().find(|&&n| n < 5 || n % 2 == 0) {
                bail!("{command} needs odd n >= 5, got {n}");
            }
        }
        Ok(ExperimentConfig {
            command,
            ns: o.n,
            t: o.t,
            cycle: o.cycle,
            variant: o.variant.into(),
            state: o.state,
            rules: o.rules,
            tol: o.tol,
            seed: o.seed,
            out: o.out,
            gap_scan: o.gap_scan,
            p_weight: o.p_weight,
            region_len: o.region_len,
            filter: o.filter,
            timing: o.timing,
        })
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Verify(o) => commands::verify(&ExperimentConfig::new("verify", o)?),
        Command::Spectrum(o) => commands::spectrum(&ExperimentConfig::new("spectrum", o)?),
        Command::Entropy(o) => commands::entropy(&ExperimentConfig::new("entropy", o)?),
        Command::Path(o) => commands::path(&ExperimentConfig::new("path", o)?),
        Command::Export { what, opts } => commands::export(what, &ExperimentConfig::new("export", opts)?),
    }
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().collect();
    let args = match config::merge_args(raw[1..].to_vec()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(std::iter::once(raw[0].clone()).chain(args));
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
