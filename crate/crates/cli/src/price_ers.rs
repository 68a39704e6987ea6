use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use structcredit::calibration::{calibrate_model, CdsQuoteStrip};
use structcredit::curves::DiscountCurve;
use structcredit::mc::{fair_spread_from_paths, simulate_joint_paths, ErsContract, ErsPricingResult, SimulationConfig};
use structcredit::presets::ErsTerms;
use structcredit::survival::{ModelKind, SurvivalModel};

use crate::config::{parse_models, parse_rhos, PresetRecord, RunConfig};
use crate::output::{write_json, CLI_SCHEMA_VERSION};
use crate::{MarketArgs, Outcome};

#[derive(Args, Debug)]
pub struct PriceErsArgs {
    #[command(flatten)]
    market: MarketArgs,

    /// Comma-separated correlations between firm value and equity.
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<String>,

    /// Comma list of at1p, sbtv, intensity (intensity runs once, at independence).
    #[arg(long)]
    models: Option<String>,

    /// Number of simulated paths.
    #[arg(long)]
    paths: Option<usize>,

    /// Master seed; every random draw derives from it.
    #[arg(long)]
    seed: Option<u64>,

    /// Time steps per year of the simulation grid.
    #[arg(long)]
    steps_per_year: Option<u32>,

    /// Disable the Brownian-bridge crossing correction.
    #[arg(long)]
    no_bridge: bool,

    /// Disable the default-indicator control variate.
    #[arg(long)]
    no_control_variate: bool,

    /// Pair every path with its mirror (needs an even path count).
    #[arg(long)]
    antithetic: bool,

    /// Skip the companion runs with the bridge correction switched off.
    #[arg(long)]
    skip_bridge_comparison: bool,

    /// Directory for per-path CSV dumps, one file per run.
    #[arg(long)]
    dump_paths: Option<PathBuf>,

    /// Maximum rows per path dump.
    #[arg(long, default_value_t = 10_000)]
    dump_cap: usize,

    /// Report file, relative to the output directory [default: ers.json].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelCalibration {
    pub model: ModelKind,
    pub params: SurvivalModel,
    pub max_price_error_bp: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErsRow {
    pub rho: f64,
    /// One entry per structural model, in the order of `structural_models`.
    pub results: Vec<ErsPricingResult>,
}

/// Same seed, bridge correction off.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BridgeCheck {
    pub model: ModelKind,
    pub rho: f64,
    pub with_bridge_bp: f64,
    pub without_bridge_bp: f64,
    pub joint_se_bp: f64,
    /// Difference beyond three joint standard errors.
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErsOutput {
    pub schema_version: u32,
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<PresetRecord>,
    pub strip: CdsQuoteStrip,
    pub ers_terms: ErsTerms,
    pub calibrations: Vec<ModelCalibration>,
    pub structural_models: Vec<ModelKind>,
    pub table: Vec<ErsRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity_anchor: Option<ErsPricingResult>,
    pub bridge_comparison: Vec<BridgeCheck>,
    pub warnings: Vec<String>,
}

fn apply(cfg: &mut RunConfig, args: &PriceErsArgs) -> Result<()> {
    args.market.apply(cfg)?;
    if let Some(r) = &args.rho {
        cfg.rho = parse_rhos(r)?;
    }
    if let Some(m) = &args.models {
        cfg.models = parse_models(m)?;
    }
    let sim = &mut cfg.simulation;
    if let Some(n) = args.paths {
        sim.n_paths = n;
    }
    if let Some(s) = args.seed {
        sim.seed = s;
    }
    if let Some(s) = args.steps_per_year {
        sim.steps_per_year = s;
    }
    if args.no_bridge {
        sim.bridge_correction = false;
    }
    if args.no_control_variate {
        sim.control_variate = false;
    }
    if args.antithetic {
        sim.antithetic = true;
    }
    Ok(())
}

struct Pricer<'a> {
    curve: &'a DiscountCurve,
    dump: Option<(&'a PathBuf, usize)>,
}

impl Pricer<'_> {
    fn price(&self, model: &SurvivalModel, contract: &ErsContract, sim: &SimulationConfig) -> Result<ErsPricingResult> {
        let paths = simulate_joint_paths(model, contract, self.curve, sim)?;
        if let Some((dir, cap)) = self.dump {
            std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            let tag = if sim.bridge_correction { "" } else { "_nobridge" };
            let file = dir.join(format!("paths_{}_rho{}{tag}.csv", model.model_kind(), contract.rho));
            let f = std::fs::File::create(&file).with_context(|| format!("cannot write {}", file.display()))?;
            paths.write_csv(std::io::BufWriter::new(f), cap)?;
        }
        Ok(fair_spread_from_paths(model, &paths, contract, self.curve, sim)?)
    }
}

pub fn run(mut cfg: RunConfig, args: &PriceErsArgs) -> Result<Outcome> {
    apply(&mut cfg, args)?;
    cfg.validate()?;
    cfg.simulation.validate()?;
    let (strip, expansion) = cfg.strip()?;
    let terms = expansion
        .as_ref()
        .and_then(|e| e.ers)
        .or(cfg.ers)
        .ok_or_else(|| anyhow!("no equity terms: use --preset ers-2009-09-16 or set `ers` in the config"))?;
    let terms = ErsTerms { recovery: strip.recovery, ..terms };
    let curve = DiscountCurve::from_spec(&cfg.curve)?;
    let settings = cfg.calibration_settings();

    let mut calibrations = Vec::new();
    for &kind in &cfg.models {
        let r = calibrate_model(kind, &strip, &curve, &settings)?;
        calibrations.push(ModelCalibration { model: kind, max_price_error_bp: r.max_price_error_bp(), params: r.params });
    }
    let structural: Vec<&ModelCalibration> = calibrations.iter().filter(|c| c.model != ModelKind::Intensity).collect();
    let pricer = Pricer { curve: &curve, dump: args.dump_paths.as_ref().map(|d| (d, args.dump_cap)) };
    let sim = cfg.simulation;

    let mut table = Vec::new();
    let mut bridge_comparison = Vec::new();
    for &rho in &cfg.rho {
        let contract = ErsContract::from_terms(&terms, rho)?;
        let mut results = Vec::new();
        for c in &structural {
            let res = pricer.price(&c.params, &contract, &sim)?;
            if sim.bridge_correction && !args.skip_bridge_comparison {
                let off = pricer.price(&c.params, &contract, &SimulationConfig { bridge_correction: false, ..sim })?;
                let joint = res.fair_spread_se_bp.hypot(off.fair_spread_se_bp);
                let diff = (res.fair_spread_bp - off.fair_spread_bp).abs();
                bridge_comparison.push(BridgeCheck {
                    model: c.model,
                    rho,
                    with_bridge_bp: res.fair_spread_bp,
                    without_bridge_bp: off.fair_spread_bp,
                    joint_se_bp: joint,
                    flagged: diff > 3.0 * joint,
                });
            }
            results.push(res);
        }
        table.push(ErsRow { rho, results });
    }
    let intensity_anchor = calibrations
        .iter()
        .find(|c| c.model == ModelKind::Intensity)
        .map(|c| pricer.price(&c.params, &ErsContract::from_terms(&terms, 0.0)?, &sim))
        .transpose()?;

    let mut warnings = Vec::new();
    let all_results = table.iter().flat_map(|r| &r.results).chain(intensity_anchor.as_ref());
    for r in all_results {
        for w in &r.warnings {
            warnings.push(format!("{} rho={}: {w}", r.model, r.rho));
        }
    }
    for b in bridge_comparison.iter().filter(|b| b.flagged) {
        warnings.push(format!(
            "{} rho={}: bridge correction moves X from {:.3} to {:.3} bp, beyond 3 joint standard errors",
            b.model, b.rho, b.without_bridge_bp, b.with_bridge_bp
        ));
    }

    let out = ErsOutput {
        schema_version: CLI_SCHEMA_VERSION,
        preset: expansion.as_ref().map(PresetRecord::from),
        strip,
        ers_terms: terms,
        structural_models: structural.iter().map(|c| c.model).collect(),
        calibrations: calibrations.clone(),
        table,
        intensity_anchor,
        bridge_comparison,
        warnings,
        run: cfg,
    };
    print_table(&out);
    let path = out.run.output_path(args.out.as_deref(), "ers.json");
    write_json(&path, &out)?;
    println!("report: {}", path.display());

    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    Ok(if out.warnings.is_empty() { Outcome::Clean } else { Outcome::Warnings })
}

fn print_table(out: &ErsOutput) {
    let sim = &out.run.simulation;
    println!(
        "fair spread X (bp), {} paths, {} steps/year, seed {}",
        sim.n_paths, sim.steps_per_year, sim.seed
    );
    print!("{:>6}", "rho");
    for m in &out.structural_models {
        print!(" {:>18}", m.to_string());
    }
    println!();
    for row in &out.table {
        print!("{:>6}", row.rho);
        for r in &row.results {
            print!(" {:>18}", format!("{:.2} ± {:.2}", r.fair_spread_bp, r.fair_spread_se_bp));
        }
        println!();
    }
    if let Some(a) = &out.intensity_anchor {
        println!("intensity (independent default): {:.2} ± {:.2}", a.fair_spread_bp, a.fair_spread_se_bp);
    }
}
