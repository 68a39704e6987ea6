//! Two-step SBTV calibration with two barrier scenarios.
//!
//! Step 1 fits `(H², p¹, σ̄)` to the first three quotes with a single flat
//! volatility, minimising squared spread errors in bp. Step 2 freezes the
//! scenarios and bootstraps one volatility per bucket through the mixture
//! pricer, which reprices every quote exactly.

use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_vols, BootstrapSettings, Calibrated, SIGMA_BRACKET};
use super::quotes::CdsQuoteStrip;
use crate::cds::{legs, CdsContract};
use crate::curves::DiscountCurve;
use crate::error::{CreditError, Result};
use crate::math::nelder_mead;
use crate::survival::{SbtvParams, Scenario, VolatilityTermStructure};

/// Quotes used by the scenario fit.
pub const STEP1_QUOTES: usize = 3;
/// Number of barrier scenarios supported.
pub const SBTV_SCENARIOS: usize = 2;
/// Step-1 RMS spread error (bp) above which the fit is flagged.
pub const STEP1_RMS_WARN_BP: f64 = 5.0;
/// Allowed move of the first three bucket vols away from σ̄ in step 2.
pub const STEP2_SHIFT_WARN: f64 = 0.02;

const STEP1_F_TOL: f64 = 1e-10;
const STEP1_MAX_ITER: usize = 4000;
const SIGMA_BAR_BOUNDS: (f64, f64) = (0.01, 2.0);
/// Keeps H² strictly between H¹ and 1.
const BARRIER_GAP: f64 = 1e-4;

/// Outcome of the scenario fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFit {
    pub h2: f64,
    pub p1: f64,
    pub sigma_bar: f64,
    /// Sum of squared spread errors, bp².
    pub objective: f64,
    pub rms_error_bp: f64,
    pub iterations: usize,
    pub starts: usize,
    /// Model minus quote for the fitted quotes, bp.
    pub spread_errors_bp: Vec<f64>,
}

/// Full SBTV calibration result.
#[derive(Debug, Clone, PartialEq)]
pub struct SbtvCalibration {
    pub calibrated: Calibrated<SbtvParams>,
    pub step1: ScenarioFit,
    /// `max_j |σ_j - σ̄|` over the first three buckets after step 2.
    pub step2_shift: f64,
}

fn mixture(h1: f64, h2: f64, p1: f64, b: f64, vols: VolatilityTermStructure) -> Result<SbtvParams> {
    SbtvParams::two_scenario(h1, h2, p1, b, vols)
}

fn step1_spread_errors(
    x: &[f64],
    h1: f64,
    b: f64,
    strip: &CdsQuoteStrip,
    contracts: &[CdsContract],
    curve: &DiscountCurve,
    settings: &BootstrapSettings,
) -> Option<Vec<f64>> {
    let (h2, p1, sigma) = (x[0], x[1], x[2]);
    let horizon = contracts.last()?.maturity();
    let vols = VolatilityTermStructure::flat(sigma, horizon).ok()?;
    let model = mixture(h1, h2, p1, b, vols).ok()?;
    contracts
        .iter()
        .zip(&strip.quotes)
        .map(|(c, q)| {
            let l = legs(c, curve, &model, settings.convention, settings.grid).ok()?;
            Some(l.fair_spread().ok()? * 1e4 - q.spread_bp)
        })
        .collect()
}

/// Best fit of `(H², p¹, σ̄)` to the first three quotes. Deterministic:
/// fixed 3×3×3 start grid, lowest objective wins, ties go to the smaller H².
pub fn fit_scenarios(
    strip: &CdsQuoteStrip,
    curve: &DiscountCurve,
    h1: f64,
    b: f64,
    settings: &BootstrapSettings,
) -> Result<ScenarioFit> {
    if strip.len() < STEP1_QUOTES {
        return Err(CreditError::Precondition(format!("SBTV requires ≥ {STEP1_QUOTES} quotes, got {}", strip.len())));
    }
    if !(h1 > 0.0 && h1 < 1.0 - 2.0 * BARRIER_GAP) {
        return Err(CreditError::Domain(format!("lower scenario barrier H1 must lie in (0, 1), got {h1}")));
    }
    let head = CdsQuoteStrip { quote_date: strip.quote_date, quotes: strip.quotes[..STEP1_QUOTES].to_vec(), recovery: strip.recovery };
    let contracts: Vec<CdsContract> = head
        .quotes
        .iter()
        .map(|q| CdsContract::standard(q.tenor, 0.0, strip.recovery))
        .collect::<Result<_>>()?;

    let objective = |x: &[f64]| -> f64 {
        match step1_spread_errors(x, h1, b, &head, &contracts, curve, settings) {
            Some(errs) => errs.iter().map(|e| e * e).sum(),
            None => f64::INFINITY,
        }
    };

    let lower = [h1 + BARRIER_GAP, 0.0, SIGMA_BAR_BOUNDS.0];
    let upper = [1.0 - BARRIER_GAP, 1.0, SIGMA_BAR_BOUNDS.1];
    let h_span = upper[0] - lower[0];
    let h_starts = [lower[0] + 0.25 * h_span, lower[0] + 0.5 * h_span, lower[0] + 0.75 * h_span];
    let p_starts = [0.2, 0.5, 0.8];
    let s_starts = [0.1, 0.25, 0.5];
    let step = [0.1 * h_span, 0.1, 0.05];

    let mut best: Option<(Vec<f64>, f64, usize)> = None;
    let mut total_iter = 0;
    let mut starts = 0;
    for &h in &h_starts {
        for &p in &p_starts {
            for &s in &s_starts {
                starts += 1;
                let m = nelder_mead(objective, &[h, p, s], &step, &lower, &upper, STEP1_F_TOL, STEP1_MAX_ITER);
                // restart once from the optimum to escape a collapsed simplex
                let m = nelder_mead(objective, &m.x, &step, &lower, &upper, STEP1_F_TOL, STEP1_MAX_ITER);
                total_iter += m.iterations;
                let better = match &best {
                    None => true,
                    Some((bx, bv, _)) => m.value < *bv || (m.value == *bv && m.x[0] < bx[0]),
                };
                if better {
                    best = Some((m.x, m.value, m.iterations));
                }
            }
        }
    }
    let (x, value, _) = best.expect("grid is non-empty");
    if !value.is_finite() {
        return Err(CreditError::Calibration {
            bucket: 0,
            maturity: head.quotes[STEP1_QUOTES - 1].tenor,
            reason: "scenario fit objective is not finite at any start".into(),
        });
    }
    let errs = step1_spread_errors(&x, h1, b, &head, &contracts, curve, settings).unwrap_or_default();
    Ok(ScenarioFit {
        h2: x[0],
        p1: x[1],
        sigma_bar: x[2],
        objective: value,
        rms_error_bp: (value / STEP1_QUOTES as f64).sqrt(),
        iterations: total_iter,
        starts,
        spread_errors_bp: errs,
    })
}

/// Two-step SBTV calibration with fixed lower barrier `h1` and exponent `b`.
pub fn calibrate_sbtv(
    strip: &CdsQuoteStrip,
    curve: &DiscountCurve,
    h1: f64,
    b: f64,
    settings: &BootstrapSettings,
) -> Result<SbtvCalibration> {
    strip.validate()?;
    let step1 = fit_scenarios(strip, curve, h1, b, settings)?;
    let mut warnings = Vec::new();
    if step1.rms_error_bp > STEP1_RMS_WARN_BP {
        warnings.push(format!(
            "scenario structure cannot represent strip: step-1 RMS error {:.3} bp > {STEP1_RMS_WARN_BP} bp",
            step1.rms_error_bp
        ));
    }
    let scenarios = [
        Scenario { h_over_v0: h1, probability: step1.p1 },
        Scenario { h_over_v0: step1.h2, probability: 1.0 - step1.p1 },
    ];
    let (vols, buckets, bucket_warnings) = bootstrap_vols(strip, curve, &scenarios, b, settings)?;
    warnings.extend(bucket_warnings);
    let step2_shift = vols.sigmas()[..STEP1_QUOTES]
        .iter()
        .map(|s| (s - step1.sigma_bar).abs())
        .fold(0.0, f64::max);
    if step2_shift > STEP2_SHIFT_WARN {
        warnings.push(format!(
            "step 2 moved the first {STEP1_QUOTES} bucket volatilities by up to {:.2}% from σ̄ = {:.2}%",
            step2_shift * 100.0,
            step1.sigma_bar * 100.0
        ));
    }
    if buckets.iter().any(|d| d.value <= SIGMA_BRACKET.0) {
        warnings.push("step 2 hit the volatility floor in at least one bucket".into());
    }
    let params = mixture(h1, step1.h2, step1.p1, b, vols)?;
    Ok(SbtvCalibration { calibrated: Calibrated { params, buckets, warnings }, step1, step2_shift })
}
