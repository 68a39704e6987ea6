use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_intensity, calibrate_at1p, BootstrapSettings, BucketDiagnostic};
use super::quotes::CdsQuoteStrip;
use super::sbtv::{calibrate_sbtv, ScenarioFit};
use crate::cds::{legs, CdsContract, PricingConvention};
use crate::curves::{CurveSpec, DiscountCurve};
use crate::error::Result;
use crate::survival::{ModelKind, SurvivalCurve, SurvivalModel};

/// A report is "exact" when every pillar reprices within this many bp of notional.
pub const EXACT_TOL_BP: f64 = 0.01;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const SIGN_CONVENTION: &str =
    "protection buyer view: price = protection leg - spread * risky annuity; positive means the buyer receives value";

/// Inputs that shape a calibration besides the quotes themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSettings {
    pub curve: CurveSpec,
    pub convention: PricingConvention,
    /// Barrier ratio for AT1P and the lower SBTV scenario.
    pub h1: f64,
    pub b: f64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self { curve: CurveSpec::default(), convention: PricingConvention::Postponed, h1: 0.4, b: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteFit {
    pub tenor: f64,
    pub quoted_bp: f64,
    pub model_bp: f64,
    /// Model price at the quoted spread, bp of notional.
    pub price_error_bp: f64,
    pub survival: f64,
    /// Fair spread under the exact convention minus the postponed one, bp.
    pub convention_gap_bp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: ModelKind,
    pub params: SurvivalModel,
    pub fits: Vec<QuoteFit>,
    pub buckets: Vec<BucketDiagnostic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_fit: Option<ScenarioFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step2_vol_shift: Option<f64>,
    pub warnings: Vec<String>,
    pub exact: bool,
}

impl ModelReport {
    pub fn max_price_error_bp(&self) -> f64 {
        self.fits.iter().map(|f| f.price_error_bp.abs()).fold(0.0, f64::max)
    }

    pub fn pillar_survivals(&self) -> Vec<f64> {
        self.fits.iter().map(|f| f.survival).collect()
    }
}

/// Pillar survival probabilities of any calibrated model.
pub fn implied_survivals<S: SurvivalCurve + ?Sized>(model: &S, pillars: &[f64]) -> Vec<f64> {
    pillars.iter().map(|&t| model.survival(t)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalComparison {
    pub pillars: Vec<f64>,
    pub rows: Vec<(ModelKind, Vec<f64>)>,
}

impl SurvivalComparison {
    pub fn from_reports(pillars: &[f64], reports: &[ModelReport]) -> Self {
        let mut all = vec![0.0];
        all.extend_from_slice(pillars);
        let rows = reports.iter().map(|r| (r.model, implied_survivals(&r.params, &all))).collect();
        Self { pillars: all, rows }
    }
}

/// JSON report for one quote strip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub schema_version: u32,
    pub sign_convention: String,
    pub strip: CdsQuoteStrip,
    pub settings: CalibrationSettings,
    pub models: Vec<ModelReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survival_comparison: Option<SurvivalComparison>,
}

impl CalibrationReport {
    pub fn all_exact(&self) -> bool {
        self.models.iter().all(|m| m.exact)
    }

    pub fn has_warnings(&self) -> bool {
        self.models.iter().any(|m| !m.warnings.is_empty())
    }

    pub fn model(&self, kind: ModelKind) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.model == kind)
    }
}

fn fits_for(strip: &CdsQuoteStrip, curve: &DiscountCurve, model: &SurvivalModel, convention: PricingConvention) -> Result<Vec<QuoteFit>> {
    let bootstrap = BootstrapSettings::with_convention(convention);
    strip
        .quotes
        .iter()
        .map(|q| {
            let c = CdsContract::standard(q.tenor, q.spread(), strip.recovery)?;
            let l = legs(&c, curve, model, convention, bootstrap.grid)?;
            let exact = legs(&c, curve, model, PricingConvention::Exact, bootstrap.grid)?;
            let postponed = legs(&c, curve, model, PricingConvention::Postponed, bootstrap.grid)?;
            Ok(QuoteFit {
                tenor: q.tenor,
                quoted_bp: q.spread_bp,
                model_bp: l.fair_spread().map(|s| s * 1e4).unwrap_or(f64::NAN),
                price_error_bp: l.price(q.spread()) * 1e4,
                survival: model.survival(q.tenor),
                convention_gap_bp: (exact.fair_spread().unwrap_or(f64::NAN) - postponed.fair_spread().unwrap_or(f64::NAN))
                    * 1e4,
            })
        })
        .collect()
}

/// Calibrate one model family and collect its diagnostics.
pub fn calibrate_model(
    kind: ModelKind,
    strip: &CdsQuoteStrip,
    curve: &DiscountCurve,
    settings: &CalibrationSettings,
) -> Result<ModelReport> {
    let bootstrap = BootstrapSettings::with_convention(settings.convention);
    let (params, buckets, warnings, scenario_fit, step2_vol_shift) = match kind {
        ModelKind::Intensity => {
            let c = bootstrap_intensity(strip, curve, &bootstrap)?;
            (SurvivalModel::Intensity(c.params), c.buckets, c.warnings, None, None)
        }
        ModelKind::At1p => {
            let c = calibrate_at1p(strip, curve, settings.h1, settings.b, &bootstrap)?;
            (SurvivalModel::At1p(c.params), c.buckets, c.warnings, None, None)
        }
        ModelKind::Sbtv => {
            let s = calibrate_sbtv(strip, curve, settings.h1, settings.b, &bootstrap)?;
            let c = s.calibrated;
            (SurvivalModel::Sbtv(c.params), c.buckets, c.warnings, Some(s.step1), Some(s.step2_shift))
        }
    };
    let fits = fits_for(strip, curve, &params, settings.convention)?;
    let exact = fits.iter().all(|f| f.price_error_bp.abs() < EXACT_TOL_BP);
    for f in &fits {
        log::debug!("{kind} T={} exact-vs-postponed fair spread gap {:.4} bp", f.tenor, f.convention_gap_bp);
    }
    Ok(ModelReport { model: kind, params, fits, buckets, scenario_fit, step2_vol_shift, warnings, exact })
}

/// Calibrate each requested family and assemble the report. A comparison
/// table is attached when more than one model is calibrated.
pub fn calibrate_report(strip: &CdsQuoteStrip, kinds: &[ModelKind], settings: &CalibrationSettings) -> Result<CalibrationReport> {
    let curve = DiscountCurve::from_spec(&settings.curve)?;
    let curve = match strip.quote_date {
        Some(d) => curve.with_valuation_date(d),
        None => curve,
    };
    let models = kinds.iter().map(|&k| calibrate_model(k, strip, &curve, settings)).collect::<Result<Vec<_>>>()?;
    let survival_comparison = (models.len() > 1).then(|| SurvivalComparison::from_reports(&strip.tenors(), &models));
    Ok(CalibrationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        sign_convention: SIGN_CONVENTION.to_string(),
        strip: strip.clone(),
        settings: settings.clone(),
        models,
        survival_comparison,
    })
}
