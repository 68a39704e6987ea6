use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};

use structcredit::calibration::{calibrate_report, CalibrationReport};
use structcredit::survival::SurvivalModel;

use crate::config::{parse_models, PresetRecord, RunConfig};
use crate::output::{pct, write_json, CLI_SCHEMA_VERSION};
use crate::{MarketArgs, Outcome};

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[command(flatten)]
    market: MarketArgs,

    /// intensity, at1p, sbtv, a comma list, or all.
    #[arg(long)]
    model: Option<String>,

    /// Report file (relative paths land in the output directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrateOutput {
    pub schema_version: u32,
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<PresetRecord>,
    pub report: CalibrationReport,
}

pub fn run(mut cfg: RunConfig, args: &CalibrateArgs) -> Result<Outcome> {
    args.market.apply(&mut cfg)?;
    if let Some(m) = &args.model {
        cfg.models = parse_models(m)?;
    }
    cfg.validate()?;
    let (strip, expansion) = cfg.strip()?;
    let report = calibrate_report(&strip, &cfg.models, &cfg.calibration_settings())?;
    print_report(&report);

    let path = cfg.output_path(args.out.as_deref(), "calibration.json");
    let out = CalibrateOutput {
        schema_version: CLI_SCHEMA_VERSION,
        preset: expansion.as_ref().map(PresetRecord::from),
        run: cfg,
        report,
    };
    write_json(&path, &out)?;
    println!("report: {}", path.display());

    let mut outcome = Outcome::Clean;
    for m in &out.report.models {
        for w in &m.warnings {
            eprintln!("warning [{}]: {w}", m.model);
            outcome = Outcome::Warnings;
        }
        if !m.exact {
            eprintln!("warning [{}]: max repricing error {:.4} bp", m.model, m.max_price_error_bp());
            outcome = Outcome::Warnings;
        }
    }
    Ok(outcome)
}

fn print_report(report: &CalibrationReport) {
    if let Some(d) = report.strip.quote_date {
        println!("quotes of {d}, recovery {}", pct(report.strip.recovery));
    }
    for m in &report.models {
        println!();
        println!("{} (max repricing error {:.2e} bp)", m.model, m.max_price_error_bp());
        match &m.params {
            SurvivalModel::Sbtv(p) => {
                let s: Vec<String> =
                    p.scenarios().iter().map(|s| format!("H={:.4} p={}", s.h_over_v0, pct(s.probability))).collect();
                println!("  scenarios: {}", s.join(", "));
            }
            SurvivalModel::At1p(p) => println!("  H/V0 = {}", p.h_over_v0()),
            SurvivalModel::Intensity(_) => {}
        }
        let label = if matches!(m.params, SurvivalModel::Intensity(_)) { "lambda" } else { "sigma" };
        println!("  {:>6} {:>10} {:>10} {:>9} {:>9}", "tenor", "quote bp", "model bp", label, "survival");
        for (f, b) in m.fits.iter().zip(&m.buckets) {
            println!(
                "  {:>6} {:>10.2} {:>10.4} {:>9} {:>9}",
                f.tenor,
                f.quoted_bp,
                f.model_bp,
                pct(b.value),
                pct(f.survival)
            );
        }
    }
    if let Some(cmp) = &report.survival_comparison {
        println!();
        print!("{:>10}", "survival");
        for t in &cmp.pillars {
            print!(" {:>8}", format!("{t}y"));
        }
        println!();
        for (kind, row) in &cmp.rows {
            print!("{:>10}", kind.to_string());
            for s in row {
                print!(" {:>8}", pct(*s));
            }
            println!();
        }
    }
}
