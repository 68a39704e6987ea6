//! `structcredit` command-line front end: calibrate CDS strips, price CDS
//! off a calibration, and price counterparty risk in equity return swaps.

mod calibrate;
mod config;
mod output;
mod price_cds;
mod price_ers;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use structcredit::cds::PricingConvention;
use structcredit::curves::CurveSpec;
use structcredit::presets::Preset;

#[derive(Parser, Debug)]
#[command(name = "structcredit", version, about = "First-passage credit models calibrated to CDS quotes")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for reports (also settable through STRUCTCREDIT_OUT_DIR).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Calibrate intensity, AT1P and/or SBTV models to a CDS strip.
    Calibrate(calibrate::CalibrateArgs),
    /// Price a running CDS off a calibration report.
    PriceCds(price_cds::PriceCdsArgs),
    /// Fair spread of an equity return swap with a defaultable counterparty.
    PriceErs(price_ers::PriceErsArgs),
}

/// Market and model inputs shared by `calibrate` and `price-ers`.
#[derive(Args, Debug, Default)]
pub struct MarketArgs {
    /// Bundled input set, e.g. lehman-2007-07-10 or ers-2009-09-16.
    #[arg(long, value_parser = parse_preset)]
    preset: Option<Preset>,

    /// Quote CSV with header tenor_years,spread_bp[,bid_bp,ask_bp].
    #[arg(long)]
    quotes: Option<PathBuf>,

    /// Flat continuously compounded discount rate.
    #[arg(long, conflicts_with = "curve")]
    rate: Option<f64>,

    /// JSON curve file: {"flat_rate": r} or {"pillars": [[t, df], ...]}.
    #[arg(long)]
    curve: Option<PathBuf>,

    /// Barrier ratio H/V0 (AT1P, and the lower SBTV scenario).
    #[arg(long)]
    h1: Option<f64>,

    /// Barrier volatility exponent.
    #[arg(long)]
    b: Option<f64>,

    /// Recovery rate.
    #[arg(long)]
    recovery: Option<f64>,

    /// CDS pricing convention used for calibration: postponed or exact.
    #[arg(long)]
    convention: Option<PricingConvention>,
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    Preset::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
        format!("unknown preset '{s}' (known: {})", names.join(", "))
    })
}

impl MarketArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(p) = self.preset {
            cfg.preset = Some(p);
            cfg.quotes = None;
        }
        if let Some(q) = &self.quotes {
            cfg.quotes = Some(q.clone());
            cfg.preset = None;
        }
        if let Some(r) = self.rate {
            cfg.curve = CurveSpec::Flat { flat_rate: r };
        }
        if let Some(path) = &self.curve {
            let f = std::fs::File::open(path)
                .map_err(|e| anyhow::anyhow!("cannot open curve {}: {e}", path.display()))?;
            cfg.curve = serde_json::from_reader(f)?;
        }
        if let Some(h) = self.h1 {
            cfg.h1 = h;
        }
        if let Some(b) = self.b {
            cfg.b = b;
        }
        if let Some(r) = self.recovery {
            cfg.recovery = r;
        }
        if let Some(c) = self.convention {
            cfg.convention = c;
        }
        Ok(())
    }
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    Warnings,
}

fn run(cli: Cli) -> Result<Outcome> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(dir) = cli.out_dir {
        cfg.out_dir = dir;
    }
    match cli.command {
        Command::Calibrate(args) => calibrate::run(cfg, &args),
        Command::PriceCds(args) => price_cds::run(cfg, &args),
        Command::PriceErs(args) => price_ers::run(cfg, &args),
    }
}

fn main() -> ExitCode {
    // Usage errors exit with 1; 2 is reserved for runs that finished with warnings.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Warnings) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
