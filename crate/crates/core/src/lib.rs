//! First-passage structural credit models with exact CDS calibration.
//!
//! * [`survival`]: closed-form AT1P, SBTV and intensity survival curves.
//! * [`cds`]: running CDS legs, prices and fair spreads off any survival curve.
//! * [`calibration`]: bootstraps that reprice a CDS quote strip exactly.
//! * [`mc`]: joint firm-value / equity simulation and counterparty risk in
//!   equity return swaps.

pub mod calibration;
pub mod cds;
pub mod curves;
pub mod error;
pub mod math;
pub mod mc;
pub mod presets;
pub mod survival;

pub use error::{CreditError, Result};
