//! Calibration of intensity, AT1P and SBTV models to CDS quote strips.

mod bootstrap;
mod quotes;
mod report;
mod sbtv;

pub use bootstrap::{
    bootstrap_intensity, calibrate_at1p, BootstrapSettings, BucketDiagnostic, Calibrated, HAZARD_BRACKET, PRICE_TOL,
    SIGMA_BRACKET,
};
pub use quotes::{CdsQuote, CdsQuoteStrip};
pub use report::{
    calibrate_model, calibrate_report, implied_survivals, CalibrationReport, CalibrationSettings, ModelReport, QuoteFit,
    SurvivalComparison, EXACT_TOL_BP, REPORT_SCHEMA_VERSION, SIGN_CONVENTION,
};
pub use sbtv::{
    calibrate_sbtv, fit_scenarios, SbtvCalibration, ScenarioFit, SBTV_SCENARIOS, STEP1_QUOTES, STEP1_RMS_WARN_BP,
    STEP2_SHIFT_WARN,
};
