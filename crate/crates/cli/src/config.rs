use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use structcredit::calibration::{CalibrationSettings, CdsQuoteStrip, SBTV_SCENARIOS};
use structcredit::cds::PricingConvention;
use structcredit::curves::CurveSpec;
use structcredit::mc::SimulationConfig;
use structcredit::presets::{ErsTerms, Preset, PresetExpansion, DEFAULT_RECOVERY};
use structcredit::survival::ModelKind;

/// Overrides the output directory; nothing else is read from the environment.
pub const OUT_DIR_ENV: &str = "STRUCTCREDIT_OUT_DIR";

/// Effective settings of a run. Loaded from an optional JSON file, then
/// overridden by command-line flags, and echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub curve: CurveSpec,
    pub models: Vec<ModelKind>,
    pub h1: f64,
    pub b: f64,
    pub recovery: f64,
    pub convention: PricingConvention,
    pub sbtv_scenarios: usize,
    pub simulation: SimulationConfig,
    pub rho: Vec<f64>,
    pub preset: Option<Preset>,
    pub quotes: Option<PathBuf>,
    /// Equity terms for `price-ers` when no preset supplies them.
    pub ers: Option<ErsTerms>,
    /// Not echoed into reports, so output bytes do not depend on location.
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            curve: CurveSpec::default(),
            models: vec![ModelKind::Intensity, ModelKind::At1p, ModelKind::Sbtv],
            h1: 0.4,
            b: 0.0,
            recovery: DEFAULT_RECOVERY,
            convention: PricingConvention::Postponed,
            sbtv_scenarios: SBTV_SCENARIOS,
            simulation: SimulationConfig::default(),
            rho: vec![-1.0, -0.2, 0.0, 0.5, 1.0],
            preset: None,
            quotes: None,
            ers: None,
            out_dir: PathBuf::from("."),
        }
    }
}

/// Name, version and checksum of the preset a run expanded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetRecord {
    pub name: String,
    pub version: u32,
    pub sha256: String,
}

impl From<&PresetExpansion> for PresetRecord {
    fn from(e: &PresetExpansion) -> Self {
        Self { name: e.name.clone(), version: e.version, sha256: e.checksum() }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let f = File::open(p).with_context(|| format!("cannot open config {}", p.display()))?;
                serde_json::from_reader(f).with_context(|| format!("invalid config {}", p.display()))?
            }
            None => Self::default(),
        };
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
            cfg.out_dir = PathBuf::from(dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sbtv_scenarios != SBTV_SCENARIOS {
            bail!("sbtv_scenarios must be {SBTV_SCENARIOS}, got {}", self.sbtv_scenarios);
        }
        if !(self.h1 > 0.0 && self.h1 < 1.0) {
            bail!("h1 must lie in (0, 1), got {}", self.h1);
        }
        if !(0.0..1.0).contains(&self.recovery) {
            bail!("recovery must lie in [0, 1), got {}", self.recovery);
        }
        if self.models.is_empty() {
            bail!("no model selected");
        }
        if self.preset.is_some() && self.quotes.is_some() {
            bail!("give either a preset or a quote file, not both");
        }
        Ok(())
    }

    pub fn calibration_settings(&self) -> CalibrationSettings {
        CalibrationSettings { curve: self.curve.clone(), convention: self.convention, h1: self.h1, b: self.b }
    }

    /// Quote strip from the preset or the quote file. Preset strips keep
    /// their own recovery unless it was changed from the default.
    pub fn strip(&self) -> Result<(CdsQuoteStrip, Option<PresetExpansion>)> {
        match (&self.preset, &self.quotes) {
            (Some(p), _) => {
                let mut e = p.expansion();
                if self.recovery != DEFAULT_RECOVERY {
                    e.strip.recovery = self.recovery;
                    if let Some(t) = e.ers.as_mut() {
                        t.recovery = self.recovery;
                    }
                }
                Ok((e.strip.clone(), Some(e)))
            }
            (None, Some(path)) => {
                let f = File::open(path).with_context(|| format!("cannot open quotes {}", path.display()))?;
                let strip = CdsQuoteStrip::read_csv(f, None, self.recovery)
                    .with_context(|| format!("cannot read quotes {}", path.display()))?;
                Ok((strip, None))
            }
            (None, None) => bail!("no quotes: pass --preset or --quotes"),
        }
    }

    /// Resolves a report path against the output directory.
    pub fn output_path(&self, file: Option<&Path>, default_name: &str) -> PathBuf {
        match file {
            Some(f) if f.is_absolute() => f.to_path_buf(),
            Some(f) => self.out_dir.join(f),
            None => self.out_dir.join(default_name),
        }
    }
}

pub fn parse_models(list: &str) -> Result<Vec<ModelKind>> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(vec![ModelKind::Intensity, ModelKind::At1p, ModelKind::Sbtv]);
    }
    let mut out = Vec::new();
    for item in list.split(',') {
        let k: ModelKind = item.trim().parse().map_err(|e| anyhow::anyhow!("{e}"))?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    Ok(out)
}

pub fn parse_rhos(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("invalid correlation '{s}'")))
        .collect()
}
