//! Oracles, generators and property checks shared by the integration tests.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use structcredit::calibration::{bootstrap_intensity, calibrate_at1p, calibrate_sbtv, BootstrapSettings, CdsQuote, CdsQuoteStrip};
use structcredit::cds::{cds_price, fair_spread, CdsContract, PricingConvention};
use structcredit::curves::DiscountCurve;
use structcredit::mc::{ers_npv_at_default, ErsContract};
use structcredit::presets::ErsTerms;
use structcredit::survival::{
    at1p_survival, sbtv_survival, At1pParams, HazardCurve, SbtvParams, SurvivalCurve, SurvivalModel,
    VolatilityTermStructure,
};

/// Discounted NPV rebuilt leg by leg: floating coupons from forward LIBOR
/// fixings, dividends integrated numerically, final equity exchange at its
/// forward.
pub fn npv_term_by_term(c: &ErsContract, curve: &DiscountCurve, tau: f64, s_tau: f64) -> f64 {
    let p = |t: f64| curve.df(t) / curve.df(tau);
    let k = c.stock_count;
    let s = &c.schedule;
    let t_end = s.end();
    let mut floating = 0.0;
    for i in 1..=s.len() {
        let (t0, t1, a) = (s.time(i - 1), s.time(i), s.accruals()[i - 1]);
        if t1 <= tau {
            continue;
        }
        let libor = (curve.df(t0) / curve.df(t1) - 1.0) / a;
        floating += p(t1) * a * (libor + c.spread);
    }
    let n = 4000;
    let h = (t_end - tau) / n as f64;
    let fwd_pv = |t: f64| s_tau * (-c.dividend_yield * (t - tau)).exp();
    let mut dividends = 0.0;
    for j in 0..=n {
        let w = if j == 0 || j == n { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
        dividends += w * c.dividend_yield * fwd_pv(tau + j as f64 * h);
    }
    dividends *= h / 3.0;
    let forward = s_tau * (curve.integrated_rate(tau, t_end) - c.dividend_yield * (t_end - tau)).exp();
    let npv = k * c.s0 * floating - k * dividends + k * (c.s0 - forward) * p(t_end);
    curve.df(tau) * npv
}

pub const ENDS: [f64; 5] = [1.0, 3.0, 5.0, 7.0, 10.0];

pub fn vols() -> impl Strategy<Value = VolatilityTermStructure> {
    prop::collection::vec(0.02f64..1.2, 5).prop_map(|s| VolatilityTermStructure::new(ENDS.to_vec(), s).unwrap())
}

pub fn hazards() -> impl Strategy<Value = HazardCurve> {
    prop::collection::vec(0.0f64..0.6, 5).prop_map(|l| HazardCurve::new(ENDS.to_vec(), l).unwrap())
}

pub fn sbtv() -> impl Strategy<Value = SbtvParams> {
    (0.05f64..0.6, 0.01f64..0.39, 0.0f64..=1.0, vols())
        .prop_map(|(h1, gap, p1, v)| SbtvParams::two_scenario(h1, h1 + gap, p1, 0.0, v).unwrap())
}

pub fn any_model() -> impl Strategy<Value = SurvivalModel> {
    prop_oneof![
        hazards().prop_map(SurvivalModel::Intensity),
        (0.05f64..0.95, -0.5f64..0.5, vols()).prop_map(|(h, b, v)| SurvivalModel::At1p(At1pParams::new(h, b, v).unwrap())),
        sbtv().prop_map(SurvivalModel::Sbtv),
    ]
}

pub fn times() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..15.0, 2..12).prop_map(|mut t| {
        t.sort_by(f64::total_cmp);
        t
    })
}

/// Positive spreads with a mild term structure, tenors 1, 3, 5, 7, 10.
pub fn strips() -> impl Strategy<Value = CdsQuoteStrip> {
    (10.0f64..1500.0, prop::collection::vec(0.8f64..1.15, 4)).prop_map(|(s1, ratios)| {
        let mut spreads = vec![s1];
        for r in ratios {
            spreads.push(spreads.last().unwrap() * r);
        }
        let quotes = ENDS.iter().zip(&spreads).map(|(&t, &s)| CdsQuote::mid(t, s)).collect();
        CdsQuoteStrip::new(None, quotes, 0.4).unwrap()
    })
}

pub fn survival_is_monotone_and_bounded(model: &SurvivalModel, times: &[f64]) -> Result<(), TestCaseError> {
    prop_assert_eq!(model.survival(0.0), 1.0);
    let mut prev = 1.0;
    for &t in times {
        let q = model.survival(t);
        prop_assert!((0.0..=1.0).contains(&q), "Q({}) = {}", t, q);
        prop_assert!(q <= prev, "Q not monotone at {}: {} > {}", t, q, prev);
        prev = q;
    }
    Ok(())
}

pub fn at1p_is_decreasing_in_barrier(h_lo: f64, gap: f64, vols: &VolatilityTermStructure, t: f64) -> Result<(), TestCaseError> {
    let lo = At1pParams::new(h_lo, 0.0, vols.clone()).unwrap();
    let hi = At1pParams::new(h_lo + gap, 0.0, vols.clone()).unwrap();
    let (q_lo, q_hi) = (at1p_survival(&lo, t).unwrap(), at1p_survival(&hi, t).unwrap());
    // Both saturate at 1 when the barrier is out of reach within double precision.
    prop_assert!(q_hi < q_lo || q_lo == 1.0 || q_hi == 0.0, "Q(H={}) = {} vs Q(H={}) = {}", h_lo + gap, q_hi, h_lo, q_lo);
    Ok(())
}

pub fn barrier_is_homogeneous(v0: f64, h_frac: f64, b: f64, vols: &VolatilityTermStructure, times: &[f64]) -> Result<(), TestCaseError> {
    let base = At1pParams::from_levels(v0, v0 * h_frac, b, vols.clone()).unwrap();
    let doubled = At1pParams::from_levels(2.0 * v0, 2.0 * v0 * h_frac, b, vols.clone()).unwrap();
    for &t in times {
        prop_assert_eq!(base.survival(t).to_bits(), doubled.survival(t).to_bits());
    }
    Ok(())
}

pub fn sbtv_is_bounded_by_scenarios(p: &SbtvParams, times: &[f64]) -> Result<(), TestCaseError> {
    for &t in times {
        let mix = sbtv_survival(p, t).unwrap();
        let qs: Vec<f64> = (0..p.scenarios().len()).map(|i| p.scenario_model(i).survival(t)).collect();
        let lo = qs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = qs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo - 1e-15 <= mix && mix <= hi + 1e-15, "{} outside [{}, {}] at {}", mix, lo, hi, t);
    }
    Ok(())
}

/// Price is affine in the running spread: two evaluations recover the fair
/// spread and predict a third price.
pub fn cds_price_is_affine_in_spread(
    model: &SurvivalModel,
    tenor: f64,
    rate: f64,
    spread: f64,
    convention: PricingConvention,
) -> Result<(), TestCaseError> {
    let curve = DiscountCurve::flat(rate).unwrap();
    let c0 = CdsContract::standard(tenor, 0.0, 0.4).unwrap();
    let c1 = c0.with_spread(0.01).unwrap();
    let p0 = cds_price(&c0, &curve, model, convention).unwrap();
    let p1 = cds_price(&c1, &curve, model, convention).unwrap();
    let slope = (p1 - p0) / 0.01;
    let c2 = c0.with_spread(spread).unwrap();
    let p2 = cds_price(&c2, &curve, model, convention).unwrap();
    prop_assert!((p2 - (p0 + slope * spread)).abs() < 1e-12, "affinity broken: {} vs {}", p2, p0 + slope * spread);
    if p0 > 1e-9 {
        let two_point = -p0 / slope;
        let closed = fair_spread(&c0, &curve, model, convention).unwrap();
        prop_assert!((two_point - closed).abs() < 1e-12, "fair spread {} vs {}", two_point, closed);
    }
    Ok(())
}

fn bumped(strip: &CdsQuoteStrip, i: usize, factor: f64) -> CdsQuoteStrip {
    let mut s = strip.clone();
    s.quotes[i].spread_bp *= factor;
    s
}

fn same_prefix(a: &[f64], b: &[f64], i: usize) -> Result<(), TestCaseError> {
    for j in 0..i {
        prop_assert_eq!(a[j].to_bits(), b[j].to_bits(), "bucket {} moved after bumping quote {}", j, i);
    }
    Ok(())
}

/// Bumping quote `i` leaves buckets before `i` bit-identical. Strips the
/// base calibration rejects are skipped.
pub fn bootstrap_is_local(strip: &CdsQuoteStrip, i: usize, factor: f64, rate: f64) -> Result<(), TestCaseError> {
    let curve = DiscountCurve::flat(rate).unwrap();
    let settings = BootstrapSettings::default();
    let bumped = bumped(strip, i, factor);
    if let (Ok(a), Ok(b)) =
        (bootstrap_intensity(strip, &curve, &settings), bootstrap_intensity(&bumped, &curve, &settings))
    {
        same_prefix(a.params.lambdas(), b.params.lambdas(), i)?;
    }
    if let (Ok(a), Ok(b)) =
        (calibrate_at1p(strip, &curve, 0.4, 0.0, &settings), calibrate_at1p(&bumped, &curve, 0.4, 0.0, &settings))
    {
        same_prefix(a.params.vols().sigmas(), b.params.vols().sigmas(), i)?;
    }
    Ok(())
}

/// SBTV locality holds past the three quotes that fix the scenarios.
pub fn sbtv_bootstrap_is_local(strip: &CdsQuoteStrip, i: usize, factor: f64) -> Result<(), TestCaseError> {
    let curve = DiscountCurve::flat(0.03).unwrap();
    let settings = BootstrapSettings::default();
    let a = calibrate_sbtv(strip, &curve, 0.4, 0.0, &settings);
    let b = calibrate_sbtv(&bumped(strip, i, factor), &curve, 0.4, 0.0, &settings);
    if let (Ok(a), Ok(b)) = (a, b) {
        prop_assert_eq!(a.calibrated.params.scenarios(), b.calibrated.params.scenarios());
        same_prefix(a.calibrated.params.vols().sigmas(), b.calibrated.params.vols().sigmas(), i)?;
    }
    Ok(())
}

pub fn csv_round_trips(strip: &CdsQuoteStrip) -> Result<(), TestCaseError> {
    let mut buf = Vec::new();
    strip.write_csv(&mut buf).unwrap();
    let back = CdsQuoteStrip::read_csv(buf.as_slice(), strip.quote_date, strip.recovery).unwrap();
    prop_assert_eq!(&back, strip);
    let mut again = Vec::new();
    back.write_csv(&mut again).unwrap();
    prop_assert_eq!(buf, again);
    Ok(())
}

pub fn npv_simplification_holds(
    tau: f64,
    s_tau: f64,
    spread: f64,
    rate: f64,
    q: f64,
    k: f64,
) -> Result<(), TestCaseError> {
    let curve = DiscountCurve::flat(rate).unwrap();
    let terms = ErsTerms { dividend_yield: q, stock_count: k, ..ErsTerms::default() };
    let c = ErsContract::from_terms(&terms, 0.3).unwrap().with_spread(spread);
    let fast = ers_npv_at_default(&c, &curve, tau, s_tau).unwrap();
    let slow = npv_term_by_term(&c, &curve, tau, s_tau);
    prop_assert!((fast - slow).abs() < 1e-10, "{} vs {}", fast, slow);
    Ok(())
}
