use std::fs::File;
use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use structcredit::calibration::CalibrationReport;
use structcredit::cds::{legs, CdsContract, IntegrationGrid, PricingConvention};
use structcredit::curves::{CurveSpec, DiscountCurve};
use structcredit::survival::{ModelKind, SurvivalCurve};

use crate::calibrate::CalibrateOutput;
use crate::config::RunConfig;
use crate::output::{write_json, CLI_SCHEMA_VERSION};
use crate::Outcome;

#[derive(Args, Debug)]
pub struct PriceCdsArgs {
    /// Calibration report written by `calibrate`.
    #[arg(long)]
    params: PathBuf,

    /// Running spread in bp.
    #[arg(long)]
    spread: f64,

    /// Maturity in years.
    #[arg(long)]
    tenor: f64,

    /// Restrict to one calibrated model.
    #[arg(long)]
    model: Option<ModelKind>,

    /// Recovery; defaults to the calibration's.
    #[arg(long)]
    recovery: Option<f64>,

    /// Report file [default: cds_price.json].
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Prices in bp of notional, protection-buyer view.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CdsPriceRow {
    pub model: ModelKind,
    pub survival: f64,
    pub price_postponed_bp: f64,
    pub price_exact_bp: f64,
    pub fair_spread_postponed_bp: f64,
    pub fair_spread_exact_bp: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CdsPriceOutput {
    pub schema_version: u32,
    pub params_file: PathBuf,
    pub curve: CurveSpec,
    pub tenor: f64,
    pub spread_bp: f64,
    pub recovery: f64,
    pub sign_convention: String,
    pub rows: Vec<CdsPriceRow>,
}

fn load_report(path: &PathBuf) -> Result<CalibrationReport> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    if let Ok(out) = serde_json::from_str::<CalibrateOutput>(&text) {
        return Ok(out.report);
    }
    serde_json::from_str(&text).with_context(|| format!("{} is not a calibration report", path.display()))
}

pub fn run(cfg: RunConfig, args: &PriceCdsArgs) -> Result<Outcome> {
    File::open(&args.params).with_context(|| format!("cannot open parameter file {}", args.params.display()))?;
    let report = load_report(&args.params)?;
    let curve = DiscountCurve::from_spec(&report.settings.curve)?;
    let recovery = args.recovery.unwrap_or(report.strip.recovery);
    let contract = CdsContract::standard(args.tenor, args.spread * 1e-4, recovery)?;
    let grid = IntegrationGrid::default();

    let mut rows = Vec::new();
    for m in &report.models {
        if args.model.is_some_and(|k| k != m.model) {
            continue;
        }
        let post = legs(&contract, &curve, &m.params, PricingConvention::Postponed, grid)?;
        let exact = legs(&contract, &curve, &m.params, PricingConvention::Exact, grid)?;
        rows.push(CdsPriceRow {
            model: m.model,
            survival: m.params.survival(args.tenor),
            price_postponed_bp: post.price(contract.spread()) * 1e4,
            price_exact_bp: exact.price(contract.spread()) * 1e4,
            fair_spread_postponed_bp: post.fair_spread()? * 1e4,
            fair_spread_exact_bp: exact.fair_spread()? * 1e4,
        });
    }
    if rows.is_empty() {
        return Err(anyhow!("model {:?} not present in {}", args.model, args.params.display()));
    }

    println!("CDS {}y at {} bp, recovery {}", args.tenor, args.spread, recovery);
    println!(
        "{:>10} {:>14} {:>14} {:>14} {:>14}",
        "model", "postponed bp", "exact bp", "fair post. bp", "fair exact bp"
    );
    for r in &rows {
        println!(
            "{:>10} {:>14.4} {:>14.4} {:>14.4} {:>14.4}",
            r.model.to_string(),
            r.price_postponed_bp,
            r.price_exact_bp,
            r.fair_spread_postponed_bp,
            r.fair_spread_exact_bp
        );
    }

    let out = CdsPriceOutput {
        schema_version: CLI_SCHEMA_VERSION,
        params_file: args.params.clone(),
        curve: report.settings.curve.clone(),
        tenor: args.tenor,
        spread_bp: args.spread,
        recovery,
        sign_convention: report.sign_convention.clone(),
        rows,
    };
    let path = cfg.output_path(args.out.as_deref(), "cds_price.json");
    write_json(&path, &out)?;
    println!("report: {}", path.display());
    Ok(Outcome::Clean)
}
