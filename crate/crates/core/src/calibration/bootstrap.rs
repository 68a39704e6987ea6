//! Sequential bucket-by-bucket bootstraps.
//!
//! For pillar `i` the bucket `(T_{i-1}, T_i]` parameter (hazard rate or
//! volatility) is solved so that the `T_i` CDS at its quoted spread prices
//! to zero, with every earlier bucket frozen.

use serde::{Deserialize, Serialize};

use super::quotes::CdsQuoteStrip;
use crate::cds::{legs, CdsContract, IntegrationGrid, PricingConvention};
use crate::curves::DiscountCurve;
use crate::error::{CreditError, Result};
use crate::math::{brent, RootError};
use crate::survival::{At1pParams, HazardCurve, SbtvParams, Scenario, SurvivalCurve, VolatilityTermStructure};

/// Hazard-rate search interval (per year).
pub const HAZARD_BRACKET: (f64, f64) = (0.0, 10.0);
/// Volatility search interval (per sqrt-year).
pub const SIGMA_BRACKET: (f64, f64) = (1e-4, 5.0);
/// Root tolerance on CDS price per unit notional.
pub const PRICE_TOL: f64 = 1e-12;

const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSettings {
    pub convention: PricingConvention,
    pub grid: IntegrationGrid,
    pub price_tol: f64,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        Self { convention: PricingConvention::Postponed, grid: IntegrationGrid::default(), price_tol: PRICE_TOL }
    }
}

impl BootstrapSettings {
    pub fn with_convention(convention: PricingConvention) -> Self {
        Self { convention, ..Self::default() }
    }
}

/// Solver trace for one bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketDiagnostic {
    pub bucket: usize,
    pub maturity: f64,
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
    pub bracket: (f64, f64),
    pub at_bound: bool,
}

/// Calibrated parameters plus per-bucket diagnostics and warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibrated<P> {
    pub params: P,
    pub buckets: Vec<BucketDiagnostic>,
    pub warnings: Vec<String>,
}

fn pillar_contract(strip: &CdsQuoteStrip, i: usize) -> Result<CdsContract> {
    let q = &strip.quotes[i];
    CdsContract::standard(q.tenor, q.spread(), strip.recovery)
}

fn pillar_price<S: SurvivalCurve>(
    contract: &CdsContract,
    curve: &DiscountCurve,
    surv: &S,
    settings: &BootstrapSettings,
) -> f64 {
    match legs(contract, curve, surv, settings.convention, settings.grid) {
        Ok(l) => l.price(contract.spread()),
        Err(_) => f64::NAN,
    }
}

/// Solve one bucket. `price` must be non-decreasing in the bucket parameter
/// (more default risk means more protection value for the buyer).
/// `below_floor` decides what happens when even the lower bound already
/// overprices protection.
fn solve_bucket<F>(
    bucket: usize,
    maturity: f64,
    (lo, hi): (f64, f64),
    tol: f64,
    mut price: F,
    below_floor: BelowFloor,
    warnings: &mut Vec<String>,
) -> Result<BucketDiagnostic>
where
    F: FnMut(f64) -> f64,
{
    let fail = |reason: String| CreditError::Calibration { bucket, maturity, reason };
    let f_lo = price(lo);
    let f_hi = price(hi);
    if !(f_lo.is_finite() && f_hi.is_finite()) {
        return Err(fail(format!("non-finite price at bracket ends ({f_lo}, {f_hi})")));
    }
    if f_lo > f_hi {
        warnings.push(format!(
            "bucket {bucket} (T={maturity}): price not monotone across bracket ({f_lo:.3e} > {f_hi:.3e})"
        ));
    }
    if f_lo > tol {
        return match below_floor {
            BelowFloor::Clamp => {
                warnings.push(format!(
                    "bucket {bucket} (T={maturity}): quote implies a non-monotone survival curve (arbitrage); \
                     parameter held at {lo} with residual {f_lo:.3e}"
                ));
                Ok(BucketDiagnostic {
                    bucket,
                    maturity,
                    value: lo,
                    iterations: 0,
                    residual: f_lo,
                    bracket: (lo, hi),
                    at_bound: true,
                })
            }
            BelowFloor::Fail => Err(fail(format!(
                "required survival not attainable: price {f_lo:.3e} > 0 already at the lower bound {lo}"
            ))),
        };
    }
    let root = brent(&mut price, lo, hi, tol, 1e-15, MAX_ITER).map_err(|e| match e {
        RootError::NoSignChange { f_lo, f_hi } => {
            fail(format!("no sign change in [{lo}, {hi}]: price {f_lo:.3e} .. {f_hi:.3e}"))
        }
        RootError::NotFinite { x } => fail(format!("non-finite price at {x}")),
    })?;
    let at_bound = root.x <= lo || root.x >= hi;
    if at_bound {
        warnings.push(format!("bucket {bucket} (T={maturity}): solution {} sits on the bracket bound", root.x));
    }
    Ok(BucketDiagnostic {
        bucket,
        maturity,
        value: root.x,
        iterations: root.iterations,
        residual: root.fx,
        bracket: root.bracket,
        at_bound,
    })
}

#[derive(Clone, Copy)]
enum BelowFloor {
    Clamp,
    Fail,
}

/// Piecewise-constant hazard rates reproducing every quote.
pub fn bootstrap_intensity(
    strip: &CdsQuoteStrip,
    curve: &DiscountCurve,
    settings: &BootstrapSettings,
) -> Result<Calibrated<HazardCurve>> {
    strip.validate()?;
    let mut hazard: Option<HazardCurve> = None;
    let mut buckets = Vec::with_capacity(strip.len());
    let mut warnings = Vec::new();
    for (i, q) in strip.quotes.iter().enumerate() {
        let contract = pillar_contract(strip, i)?;
        let trial = |lambda: f64| -> Result<HazardCurve> {
            match &hazard {
                None => HazardCurve::new(vec![q.tenor], vec![lambda]),
                Some(h) => h.extended(q.tenor, lambda),
            }
        };
        let diag = solve_bucket(
            i,
            q.tenor,
            HAZARD_BRACKET,
            settings.price_tol,
            |lambda| match trial(lambda) {
                Ok(h) => pillar_price(&contract, curve, &h, settings),
                Err(_) => f64::NAN,
            },
            BelowFloor::Clamp,
            &mut warnings,
        )?;
        hazard = Some(trial(diag.value)?);
        buckets.push(diag);
    }
    Ok(Calibrated { params: hazard.expect("strip is non-empty"), buckets, warnings })
}

/// Bootstrap one volatility per bucket for a fixed set of barrier scenarios
/// (a single scenario is plain AT1P).
pub(crate) fn bootstrap_vols(
    strip: &CdsQuoteStrip,
    curve: &DiscountCurve,
    scenarios: &[Scenario],
    b: f64,
    settings: &BootstrapSettings,
) -> Result<(VolatilityTermStructure, Vec<BucketDiagnostic>, Vec<String>)> {
    strip.validate()?;
    let mut vols: Option<VolatilityTermStructure> = None;
    let mut buckets = Vec::with_capacity(strip.len());
    let mut warnings = Vec::new();
    for (i, q) in strip.quotes.iter().enumerate() {
        let contract = pillar_contract(strip, i)?;
        let trial = |sigma: f64| -> Result<VolatilityTermStructure> {
            match &vols {
                None => VolatilityTermStructure::new(vec![q.tenor], vec![sigma]),
                Some(v) => v.extended(q.tenor, sigma),
            }
        };
        let price = |sigma: f64| -> f64 {
            let Ok(v) = trial(sigma) else { return f64::NAN };
            match SbtvParams::new(scenarios.to_vec(), b, v) {
                Ok(model) => pillar_price(&contract, curve, &model, settings),
                Err(_) => f64::NAN,
            }
        };
        let diag = solve_bucket(i, q.tenor, SIGMA_BRACKET, settings.price_tol, price, BelowFloor::Fail, &mut warnings)?;
        if diag.at_bound && diag.value <= SIGMA_BRACKET.0 {
            warnings.push(format!(
                "bucket {i} (T={}): degenerate fit, volatility at the lower bound with survival ~ 1",
                q.tenor
            ));
        }
        vols = Some(trial(diag.value)?);
        buckets.push(diag);
    }
    Ok((vols.expect("strip is non-empty"), buckets, warnings))
}

/// AT1P volatility bootstrap with exogenous barrier ratio `h_over_v0` and
/// barrier exponent `b`.
pub fn calibrate_at1p(
    strip: &CdsQuoteStrip,
    curve: &DiscountCurve,
    h_over_v0: f64,
    b: f64,
    settings: &BootstrapSettings,
) -> Result<Calibrated<At1pParams>> {
    // validates H before any solving
    let scenario = [Scenario { h_over_v0, probability: 1.0 }];
    let probe = VolatilityTermStructure::flat(0.2, 1.0)?;
    At1pParams::new(h_over_v0, b, probe)?;
    let (vols, buckets, warnings) = bootstrap_vols(strip, curve, &scenario, b, settings)?;
    Ok(Calibrated { params: At1pParams::new(h_over_v0, b, vols)?, buckets, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::quotes::CdsQuote;
    use crate::cds::{cds_price_exact, fair_spread};

    fn strip(spreads: &[f64], tenors: &[f64]) -> CdsQuoteStrip {
        let quotes = tenors.iter().zip(spreads).map(|(&t, &s)| CdsQuote::mid(t, s)).collect();
        CdsQuoteStrip::new(None, quotes, 0.4).unwrap()
    }

    #[test]
    fn zero_strip_gives_zero_hazard() {
        let s = strip(&[0.0, 0.0, 0.0], &[1.0, 3.0, 5.0]);
        let curve = DiscountCurve::flat(0.03).unwrap();
        let cal = bootstrap_intensity(&s, &curve, &BootstrapSettings::default()).unwrap();
        assert!(cal.params.lambdas().iter().all(|&l| l == 0.0));
    }

    #[test]
    fn single_quote_credit_triangle() {
        let curve = DiscountCurve::flat(0.03).unwrap();
        let s = strip(&[120.0], &[5.0]);
        let cal = bootstrap_intensity(&s, &curve, &BootstrapSettings::default()).unwrap();
        let lambda = cal.params.lambdas()[0];
        let triangle = 0.012 / 0.6;
        assert!(((lambda - triangle) / triangle).abs() < 0.02);
        // and the exact pricer agrees the quote is (nearly) fair
        let c = CdsContract::standard(5.0, 0.012, 0.4).unwrap();
        assert!(cds_price_exact(&c, &curve, &cal.params).unwrap().abs() < 5e-4);
    }

    #[test]
    fn intensity_reprices_every_pillar() {
        let curve = DiscountCurve::flat(0.03).unwrap();
        let s = strip(&[397.0, 315.0, 277.0, 258.0, 240.0], &[1.0, 3.0, 5.0, 7.0, 10.0]);
        let cal = bootstrap_intensity(&s, &curve, &BootstrapSettings::default()).unwrap();
        for q in &s.quotes {
            let c = CdsContract::standard(q.tenor, 0.0, 0.4).unwrap();
            let fs = fair_spread(&c, &curve, &cal.params, PricingConvention::Postponed).unwrap();
            assert!((fs * 1e4 - q.spread_bp).abs() < 1e-6);
        }
    }

    #[test]
    fn inverted_strip_warns_but_proceeds() {
        // a 3y spread far below the 1y spread needs negative hazard
        let curve = DiscountCurve::flat(0.03).unwrap();
        let s = strip(&[500.0, 50.0], &[1.0, 3.0]);
        let cal = bootstrap_intensity(&s, &curve, &BootstrapSettings::default()).unwrap();
        assert_eq!(cal.params.lambdas()[1], 0.0);
        assert!(!cal.warnings.is_empty());
    }

    #[test]
    fn excessive_spread_fails_bracket() {
        let curve = DiscountCurve::flat(0.03).unwrap();
        let s = strip(&[900_000.0], &[1.0]);
        let err = bootstrap_intensity(&s, &curve, &BootstrapSettings::default()).unwrap_err();
        assert!(matches!(err, CreditError::Calibration { bucket: 0, .. }));
    }

    #[test]
    fn at1p_zero_strip_is_degenerate() {
        let curve = DiscountCurve::flat(0.03).unwrap();
        let s = strip(&[0.0, 0.0], &[1.0, 3.0]);
        let cal = calibrate_at1p(&s, &curve, 0.4, 0.0, &BootstrapSettings::default()).unwrap();
        assert!(cal.params.vols().sigmas().iter().all(|&v| v == SIGMA_BRACKET.0));
        assert!(cal.buckets.iter().all(|b| b.at_bound));
        assert!(cal.warnings.iter().any(|w| w.contains("degenerate")));
    }

    #[test]
    fn at1p_rejects_bad_barrier() {
        let curve = DiscountCurve::flat(0.03).unwrap();
        let s = strip(&[50.0], &[1.0]);
        assert!(calibrate_at1p(&s, &curve, 1.2, 0.0, &BootstrapSettings::default()).is_err());
    }

    #[test]
    fn at1p_unattainable_bucket_is_named() {
        // huge 1y spread then a tiny 3y spread: survival already too low at sigma floor
        let curve = DiscountCurve::flat(0.03).unwrap();
        let s = strip(&[3000.0, 10.0], &[1.0, 3.0]);
        match calibrate_at1p(&s, &curve, 0.4, 0.0, &BootstrapSettings::default()) {
            Err(CreditError::Calibration { bucket, .. }) => assert_eq!(bucket, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
