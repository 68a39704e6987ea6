//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use structcredit::calibration::{calibrate_report, CalibrationReport, CalibrationSettings, ModelReport, EXACT_TOL_BP};
use structcredit::curves::DiscountCurve;
use structcredit::mc::{ers_fair_spread, intensity_ers_check, simulate_joint_paths, ErsContract, ErsPricingResult, SimulationConfig};
use structcredit::presets::{ErsTerms, Preset};
use structcredit::survival::{At1pParams, ModelKind, SurvivalCurve, SurvivalModel, VolatilityTermStructure};

use common::*;

const ALL_MODELS: [ModelKind; 3] = [ModelKind::Intensity, ModelKind::At1p, ModelKind::Sbtv];
const RHOS: [f64; 5] = [-1.0, -0.2, 0.0, 0.5, 1.0];
const AT1P_X: [f64; 5] = [0.0, 3.0, 5.5, 14.7, 24.9];
const SBTV_X: [f64; 5] = [0.0, 3.6, 5.5, 11.4, 17.9];

struct Outcome {
    pass: bool,
    detail: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, detail: Vec::new() }
    }

    fn check(&mut self, ok: bool, msg: String) {
        if !ok {
            self.pass = false;
            self.detail.push(format!("  fail: {msg}"));
        } else {
            self.detail.push(format!("  ok:   {msg}"));
        }
    }

    fn note(&mut self, msg: String) {
        self.detail.push(format!("  note: {msg}"));
    }

    fn budget(&mut self, start: Instant, limit: Duration) {
        let took = start.elapsed();
        self.check(took < limit, format!("runtime {took:.2?} < {limit:?}"));
    }
}

fn stdev(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn sigmas(m: &ModelReport) -> Vec<f64> {
    m.buckets.iter().map(|b| b.value).collect()
}

fn lehman_reports() -> Vec<(Preset, CalibrationReport)> {
    let settings = CalibrationSettings::default();
    Preset::LEHMAN.iter().map(|&p| (p, calibrate_report(&p.strip(), &ALL_MODELS, &settings).unwrap())).collect()
}

fn exact_fit(reports: &[(Preset, CalibrationReport)], start: Instant) -> Outcome {
    let mut o = Outcome::new();
    for (p, r) in reports {
        for m in &r.models {
            let err = m.max_price_error_bp();
            o.check(err < EXACT_TOL_BP, format!("{} {}: max |price| {err:.2e} bp", p.name(), m.model));
        }
    }
    o.budget(start, Duration::from_secs(5));
    o
}

/// Published survival columns (intensity, AT1P, SBTV) per Lehman date.
fn published_survivals(p: Preset) -> [[f64; 5]; 3] {
    match p {
        Preset::Lehman20070710 => [
            [0.997, 0.985, 0.962, 0.941, 0.902],
            [0.997, 0.985, 0.961, 0.941, 0.902],
            [0.997, 0.985, 0.961, 0.941, 0.902],
        ],
        Preset::Lehman20080612 => [
            [0.936, 0.857, 0.800, 0.751, 0.688],
            [0.935, 0.856, 0.799, 0.750, 0.687],
            [0.936, 0.857, 0.801, 0.751, 0.688],
        ],
        Preset::Lehman20080912 => [
            [0.792, 0.659, 0.593, 0.527, 0.434],
            [0.784, 0.655, 0.591, 0.525, 0.434],
            [0.793, 0.662, 0.596, 0.529, 0.436],
        ],
        Preset::Ers20090916 => unreachable!(),
    }
}

fn survival_reproduction(reports: &[(Preset, CalibrationReport)]) -> Outcome {
    let mut o = Outcome::new();
    for (p, r) in reports {
        let published = published_survivals(*p);
        for (kind, want) in ALL_MODELS.iter().zip(published) {
            let got = r.model(*kind).unwrap().pillar_survivals();
            let worst = got.iter().zip(want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
            o.check(worst <= 0.01, format!("{} {kind}: worst gap {:.3}%", p.name(), 100.0 * worst));
        }
        let a = r.model(ModelKind::Intensity).unwrap().pillar_survivals();
        let b = r.model(ModelKind::At1p).unwrap().pillar_survivals();
        let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let published_gap = published[0].iter().zip(published[1]).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        // The ±0.2% agreement is asserted where the published columns themselves agree to that level.
        if published_gap <= 0.002 {
            o.check(gap <= 0.002, format!("{} intensity vs AT1P: {:.3}%", p.name(), 100.0 * gap));
        } else {
            o.note(format!(
                "{} intensity vs AT1P: {:.3}% (published columns differ by {:.1}%)",
                p.name(),
                100.0 * gap,
                100.0 * published_gap
            ));
        }
    }
    o
}

fn volatility_shape(reports: &[(Preset, CalibrationReport)]) -> Outcome {
    let mut o = Outcome::new();
    let s = sigmas(reports[0].1.model(ModelKind::At1p).unwrap());
    o.check(s[0] - s[1] > 0.10, format!("2007 AT1P σ1 {:.1}% vs σ2 {:.1}%", 100.0 * s[0], 100.0 * s[1]));
    for (p, r) in reports {
        let at1p = stdev(&sigmas(r.model(ModelKind::At1p).unwrap()));
        let sbtv = stdev(&sigmas(r.model(ModelKind::Sbtv).unwrap()));
        o.check(sbtv < at1p, format!("{}: σ stdev SBTV {:.2}% < AT1P {:.2}%", p.name(), 100.0 * sbtv, 100.0 * at1p));
    }
    o
}

fn scenario_trajectory(reports: &[(Preset, CalibrationReport)]) -> Outcome {
    let mut o = Outcome::new();
    let want_p2 = [0.038, 0.254, 0.500];
    let want_h2 = [0.7313, 0.7971, 0.8427];
    let mut prev = (0.0, 0.0);
    for (i, (p, r)) in reports.iter().enumerate() {
        let fit = r.model(ModelKind::Sbtv).unwrap().scenario_fit.clone().unwrap();
        let p2 = 1.0 - fit.p1;
        o.check((p2 - want_p2[i]).abs() <= 0.03, format!("{} p2 {:.1}% vs {:.1}%", p.name(), 100.0 * p2, 100.0 * want_p2[i]));
        o.check((fit.h2 - want_h2[i]).abs() <= 0.03, format!("{} H2 {:.4} vs {:.4}", p.name(), fit.h2, want_h2[i]));
        o.check(fit.h2 >= prev.0 && p2 >= prev.1, format!("{} (H2, p2) non-decreasing", p.name()));
        prev = (fit.h2, p2);
    }
    o
}

fn mc_default_probability(reports: &[(Preset, CalibrationReport)]) -> Outcome {
    let start = Instant::now();
    let mut o = Outcome::new();
    let curve = DiscountCurve::flat(0.03).unwrap();
    let contract = ErsContract::from_terms(&ErsTerms::default(), 0.0).unwrap();
    let config = SimulationConfig::default();
    let flat = At1pParams::new(0.4, 0.0, VolatilityTermStructure::flat(0.2, 10.0).unwrap()).unwrap();
    let mut cases = vec![("AT1P H=0.4 σ=20%".to_string(), SurvivalModel::At1p(flat))];
    for (p, r) in reports {
        cases.push((format!("SBTV {}", p.name()), r.model(ModelKind::Sbtv).unwrap().params.clone()));
    }
    for (name, model) in cases {
        let paths = simulate_joint_paths(&model, &contract, &curve, &config).unwrap();
        let n = paths.records.len() as f64;
        let pd = paths.defaulted() as f64 / n;
        let se = (pd * (1.0 - pd) / n).sqrt();
        let closed = 1.0 - model.survival(contract.maturity());
        o.check(
            (pd - closed).abs() < 3.0 * se,
            format!("{name}: simulated {pd:.5} vs closed form {closed:.5} (SE {se:.5})"),
        );
    }
    o.budget(start, Duration::from_secs(60));
    o
}

struct ErsRuns {
    at1p: Vec<ErsPricingResult>,
    sbtv: Vec<ErsPricingResult>,
    intensity: ErsPricingResult,
    elapsed: Duration,
}

fn ers_runs() -> ErsRuns {
    let start = Instant::now();
    let preset = Preset::Ers20090916;
    let report = calibrate_report(&preset.strip(), &ALL_MODELS, &CalibrationSettings::default()).unwrap();
    let curve = DiscountCurve::flat(0.03).unwrap();
    let terms = preset.ers_terms().unwrap();
    let config = SimulationConfig::default();
    let run = |kind: ModelKind| -> Vec<ErsPricingResult> {
        let model = &report.model(kind).unwrap().params;
        RHOS.iter()
            .map(|&rho| ers_fair_spread(model, &ErsContract::from_terms(&terms, rho).unwrap(), &curve, &config).unwrap())
            .collect()
    };
    let (at1p, sbtv) = (run(ModelKind::At1p), run(ModelKind::Sbtv));
    let SurvivalModel::Intensity(hazard) = &report.model(ModelKind::Intensity).unwrap().params else { unreachable!() };
    let intensity =
        intensity_ers_check(hazard, &ErsContract::from_terms(&terms, 0.0).unwrap(), &curve, &config).unwrap();
    ErsRuns { at1p, sbtv, intensity, elapsed: start.elapsed() }
}

fn table_reproduction(runs: &ErsRuns) -> Outcome {
    let mut o = Outcome::new();
    for (name, results, published) in [("AT1P", &runs.at1p, AT1P_X), ("SBTV", &runs.sbtv, SBTV_X)] {
        for (r, want) in results.iter().zip(published) {
            let tol = (3.0 * r.fair_spread_se_bp).max(1.5);
            o.check(
                (r.fair_spread_bp - want).abs() <= tol,
                format!(
                    "{name} ρ={:>4}: X {:.2} ± {:.2} bp vs {want:.1} (tol {tol:.2})",
                    r.rho, r.fair_spread_bp, r.fair_spread_se_bp
                ),
            );
        }
        let monotone = results.windows(2).all(|w| w[1].fair_spread_bp >= w[0].fair_spread_bp);
        o.check(monotone, format!("{name} X non-decreasing in ρ"));
    }
    let x = &runs.intensity;
    o.check(
        (x.fair_spread_bp - 5.5).abs() <= 1.0,
        format!("intensity X {:.2} ± {:.2} bp vs 5.5 ± 1.0", x.fair_spread_bp, x.fair_spread_se_bp),
    );
    for (name, at_zero) in [("AT1P", &runs.at1p[2]), ("SBTV", &runs.sbtv[2])] {
        let joint = x.fair_spread_se_bp.hypot(at_zero.fair_spread_se_bp);
        let diff = (x.fair_spread_bp - at_zero.fair_spread_bp).abs();
        o.check(diff <= 3.0 * joint, format!("intensity vs {name} ρ=0: |Δ| {diff:.2} ≤ 3·{joint:.2} bp"));
    }
    o.budget(Instant::now() - runs.elapsed, Duration::from_secs(300));
    o
}

fn variance_reduction(runs: &ErsRuns) -> Outcome {
    let mut o = Outcome::new();
    for (name, results) in [("AT1P", &runs.at1p), ("SBTV", &runs.sbtv)] {
        for r in results.iter() {
            let (cv, plain) = (r.cva.cva, r.cva.plain);
            if cv.std_error == 0.0 && plain.std_error == 0.0 {
                // Zero CVA on every path: both estimators are exact.
                o.check(cv.mean == plain.mean, format!("{name} ρ={:>4}: both estimators exact ({:.3e})", r.rho, cv.mean));
                continue;
            }
            o.check(
                cv.std_error < plain.std_error,
                format!("{name} ρ={:>4}: CV SE {:.3e} < plain SE {:.3e}", r.rho, cv.std_error, plain.std_error),
            );
            let joint = cv.std_error.hypot(plain.std_error);
            o.check(
                (cv.mean - plain.mean).abs() <= 3.0 * joint,
                format!("{name} ρ={:>4}: CV {:.4e} vs plain {:.4e}", r.rho, cv.mean, plain.mean),
            );
        }
    }
    o
}

fn property<S: Strategy>(
    o: &mut Outcome,
    name: &str,
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    match runner.run(&strategy, test) {
        Ok(()) => o.check(true, format!("{name} ({cases} cases)")),
        Err(e) => o.check(false, format!("{name}: {e}")),
    }
}

fn property_suites() -> Outcome {
    let mut o = Outcome::new();
    property(&mut o, "survival monotone and in [0, 1]", 512, (any_model(), times()), |(m, t)| {
        survival_is_monotone_and_bounded(&m, &t)
    });
    property(&mut o, "survival decreasing in H", 512, (0.05f64..0.9, 0.001f64..0.09, vols(), 0.01f64..12.0), |(h, g, v, t)| {
        at1p_is_decreasing_in_barrier(h, g, &v, t)
    });
    property(&mut o, "homogeneity in (H, V0)", 512, (1e-3f64..1e6, 0.01f64..0.99, -0.5f64..0.5, vols(), times()), |(v0, h, b, v, t)| {
        barrier_is_homogeneous(v0, h, b, &v, &t)
    });
    property(&mut o, "SBTV within scenario bounds", 512, (sbtv(), times()), |(p, t)| sbtv_is_bounded_by_scenarios(&p, &t));
    let conventions = prop_oneof![
        Just(structcredit::cds::PricingConvention::Postponed),
        Just(structcredit::cds::PricingConvention::Exact)
    ];
    property(
        &mut o,
        "CDS price affine in spread to 1e-12",
        256,
        (any_model(), 0.5f64..10.0, -0.01f64..0.08, 0.0f64..0.2, conventions),
        |(m, tenor, r, s, c)| cds_price_is_affine_in_spread(&m, tenor, r, s, c),
    );
    property(&mut o, "bootstrap locality (intensity, AT1P)", 48, (strips(), 0usize..5, 0.7f64..1.4, 0.0f64..0.06), |(s, i, f, r)| {
        bootstrap_is_local(&s, i, f, r)
    });
    property(&mut o, "bootstrap locality (SBTV, quotes 4 and 5)", 4, (strips(), 3usize..5, 0.8f64..1.25), |(s, i, f)| {
        sbtv_bootstrap_is_local(&s, i, f)
    });
    property(&mut o, "quote CSV round trip", 256, strips(), |s| csv_round_trips(&s));
    property(
        &mut o,
        "NPV at default vs term-by-term oracle to 1e-10",
        512,
        (1e-4f64..5.0, 0.5f64..80.0, 0.0f64..0.02, -0.01f64..0.08, 0.0f64..0.05, 0.5f64..3.0),
        |(tau, s, x, r, q, k)| npv_simplification_holds(tau, s, x, r, q, k),
    );

    let settings = CalibrationSettings::default();
    let strip = Preset::Lehman20080912.strip();
    let a = serde_json::to_string(&calibrate_report(&strip, &ALL_MODELS, &settings).unwrap()).unwrap();
    let b = serde_json::to_string(&calibrate_report(&strip, &ALL_MODELS, &settings).unwrap()).unwrap();
    o.check(a == b, "calibration report bit-identical across runs".into());

    let curve = DiscountCurve::flat(0.03).unwrap();
    let report: CalibrationReport = serde_json::from_str(&a).unwrap();
    let model = &report.model(ModelKind::Sbtv).unwrap().params;
    let contract = ErsContract::from_terms(&ErsTerms::default(), 0.5).unwrap();
    let config = SimulationConfig { n_paths: 20_000, ..Default::default() };
    let run = || serde_json::to_string(&ers_fair_spread(model, &contract, &curve, &config).unwrap()).unwrap();
    o.check(run() == run(), "ERS pricing result bit-identical for a seed".into());
    o
}

fn main() {
    let total = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();

    let start = Instant::now();
    let reports = lehman_reports();
    results.push((1, "exact-fit round trip", exact_fit(&reports, start)));
    results.push((2, "survival reproduction", survival_reproduction(&reports)));
    results.push((3, "volatility shape", volatility_shape(&reports)));
    results.push((4, "SBTV scenario trajectory", scenario_trajectory(&reports)));
    results.push((5, "MC vs closed-form default probability", mc_default_probability(&reports)));
    let runs = ers_runs();
    results.push((6, "ERS fair spread table", table_reproduction(&runs)));
    results.push((7, "control-variate variance reduction", variance_reduction(&runs)));
    results.push((8, "property suites", property_suites()));

    let verbose = std::env::args().any(|a| a == "--verbose" || a == "-v");
    let mut failed = 0;
    for (n, name, o) in &results {
        println!("criterion {n}: {} {name}", if o.pass { "PASS" } else { "FAIL" });
        if verbose || !o.pass {
            for line in &o.detail {
                println!("{line}");
            }
        }
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of {} criteria passed in {:.1?}", results.len() - failed, results.len(), total.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
