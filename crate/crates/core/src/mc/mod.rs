//! Joint simulation of counterparty default and equity, and counterparty
//! valuation adjustment of equity return swaps.

mod contract;
mod ers;
mod paths;

pub use contract::{ErsContract, SimulationConfig};
pub use ers::{
    ers_cva_term, ers_fair_spread, ers_npv_at_default, fair_spread_from_paths, intensity_ers_check, CvaEstimate,
    ErsPricingResult, Estimate, MAX_SPREAD_ITERATIONS, MIN_DEFAULTED_PATHS, SPREAD_TOL_BP,
};
pub use paths::{simulate_joint_paths, DefaultEvent, PathRecord, SimulatedPaths, TimeGrid, BLOCK_PATHS};
