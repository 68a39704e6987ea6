use serde::{Deserialize, Serialize};

use crate::curves::DiscountCurve;
use crate::error::{CreditError, Result};
use crate::math::pairwise_sum;
use crate::survival::{HazardCurve, ModelKind, SurvivalCurve, SurvivalModel};

use super::contract::{ErsContract, SimulationConfig};
use super::paths::{simulate_joint_paths, SimulatedPaths};

/// Fixed-point iteration stops once the spread moves by less than this (bp).
pub const SPREAD_TOL_BP: f64 = 0.05;
pub const MAX_SPREAD_ITERATIONS: usize = 50;
/// Below this many defaulted paths the estimate is flagged as unreliable.
pub const MIN_DEFAULTED_PATHS: usize = 50;

const BP: f64 = 1e-4;

/// Investor's mark-to-market of the swap at default `τ`, discounted to 0:
///
/// `P(0,τ)·NPV(τ) = K S0 X Σ_{i ≥ β(τ)} α_i P(0,T_i) + K S0 P(0,T_{β(τ)−1}) − K P(0,τ) S_τ`.
///
/// The floating leg telescopes onto the last reset before `τ`, and the
/// dividends paid after `τ` cancel against the forward of the final equity
/// payment.
pub fn ers_npv_at_default(contract: &ErsContract, curve: &DiscountCurve, tau: f64, s_tau: f64) -> Result<f64> {
    if !(tau >= 0.0 && tau <= contract.maturity()) {
        return Err(CreditError::Precondition(format!(
            "default time {tau} lies outside the contract life [0, {}]",
            contract.maturity()
        )));
    }
    if !(s_tau > 0.0 && s_tau.is_finite()) {
        return Err(CreditError::Domain(format!("equity price at default must be positive, got {s_tau}")));
    }
    let (annuity, reset_df) = remaining_legs(contract, curve, tau);
    Ok(contract.notional() * (contract.spread * annuity + reset_df) - contract.stock_count * curve.df(tau) * s_tau)
}

/// `(Σ_{i ≥ β(τ)} α_i P(0,T_i), P(0,T_{β(τ)−1}))`.
fn remaining_legs(contract: &ErsContract, curve: &DiscountCurve, tau: f64) -> (f64, f64) {
    let s = &contract.schedule;
    let beta = s.beta(tau);
    let annuity = s.dates()[beta - 1..].iter().zip(&s.accruals()[beta - 1..]).map(|(&t, &a)| a * curve.df(t)).sum();
    (annuity, curve.df(s.time(beta - 1)))
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = pairwise_sum(xs) / n;
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = if xs.len() > 1 { pairwise_sum(&dev) / (n - 1.0) } else { 0.0 };
        Self { mean, std_error: (var / n).sqrt() }
    }
}

/// CVA at a fixed spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvaEstimate {
    /// Reported estimate: control-variate adjusted when enabled.
    pub cva: Estimate,
    pub plain: Estimate,
    /// Regression coefficient on the default indicator (0 when disabled).
    pub beta: f64,
    pub defaulted_paths: usize,
}

impl CvaEstimate {
    /// Ratio of plain to reported estimator variance; `None` when the
    /// reported estimator has no variance.
    pub fn variance_reduction_factor(&self) -> Option<f64> {
        (self.cva.std_error > 0.0).then(|| (self.plain.std_error / self.cva.std_error).powi(2))
    }
}

/// Per-path quantities that make the discounted exposure affine in `X`:
/// `P(0,τ)NPV(τ) = X·a + c` on defaulted paths.
struct Exposure {
    a: Vec<f64>,
    c: Vec<f64>,
    /// 1 if the path defaulted before maturity.
    indicator: Vec<f64>,
    defaulted: usize,
    antithetic: bool,
}

impl Exposure {
    fn new(paths: &SimulatedPaths, contract: &ErsContract, curve: &DiscountCurve) -> Self {
        let n = paths.records.len();
        let (mut a, mut c, mut indicator) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for r in &paths.records {
            match r.default {
                Some(d) if d.time <= paths.horizon => {
                    let (annuity, reset_df) = remaining_legs(contract, curve, d.time);
                    a.push(contract.notional() * annuity);
                    c.push(contract.notional() * reset_df - contract.stock_count * curve.df(d.time) * d.equity);
                    indicator.push(1.0);
                }
                _ => {
                    a.push(0.0);
                    c.push(0.0);
                    indicator.push(0.0);
                }
            }
        }
        let defaulted = indicator.iter().filter(|&&i| i > 0.0).count();
        Self { a, c, indicator, defaulted, antithetic: paths.antithetic }
    }

    /// Antithetic pairs are averaged into one sample.
    fn samples(&self, xs: Vec<f64>) -> Vec<f64> {
        if self.antithetic {
            xs.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
        } else {
            xs
        }
    }

    fn cva(&self, spread: f64, lgd: f64, pd: f64, control_variate: bool) -> CvaEstimate {
        if self.defaulted == 0 {
            let zero = Estimate { mean: 0.0, std_error: 0.0 };
            return CvaEstimate { cva: zero, plain: zero, beta: 0.0, defaulted_paths: 0 };
        }
        let y: Vec<f64> = self.a.iter().zip(&self.c).map(|(a, c)| lgd * (spread * a + c).max(0.0)).collect();
        let y = self.samples(y);
        let plain = Estimate::from_samples(&y);
        if !control_variate {
            return CvaEstimate { cva: plain, plain, beta: 0.0, defaulted_paths: self.defaulted };
        }
        let ind = self.samples(self.indicator.clone());
        let n = y.len() as f64;
        let mi = pairwise_sum(&ind) / n;
        let cov: Vec<f64> = y.iter().zip(&ind).map(|(y, i)| (y - plain.mean) * (i - mi)).collect();
        let var: Vec<f64> = ind.iter().map(|i| (i - mi) * (i - mi)).collect();
        let var_i = pairwise_sum(&var);
        let beta = if var_i > 0.0 { pairwise_sum(&cov) / var_i } else { 0.0 };
        let adjusted: Vec<f64> = y.iter().zip(&ind).map(|(y, i)| y - beta * (i - pd)).collect();
        CvaEstimate { cva: Estimate::from_samples(&adjusted), plain, beta, defaulted_paths: self.defaulted }
    }

    fn default_probability(&self) -> Estimate {
        Estimate::from_samples(&self.samples(self.indicator.clone()))
    }
}

/// Fair spread and supporting statistics for one model and correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErsPricingResult {
    pub model: ModelKind,
    pub rho: f64,
    pub fair_spread_bp: f64,
    pub fair_spread_se_bp: f64,
    /// CVA at the fair spread, per unit of `K·S0`.
    pub cva: CvaEstimate,
    pub default_probability: Estimate,
    pub default_probability_closed_form: f64,
    /// Plain over reported CVA variance at the fair spread.
    pub variance_reduction_factor: Option<f64>,
    pub paths: usize,
    pub defaulted_paths: usize,
    pub low_statistics: bool,
    /// Successive spread iterates in bp, starting from 0.
    pub iterations_bp: Vec<f64>,
    pub grid_steps: usize,
    pub config: SimulationConfig,
    pub warnings: Vec<String>,
}

/// `LGD·E[1{τ ≤ T_b} (P(0,τ)NPV(τ))⁺]` at spread `spread`, optionally
/// regressed on the default indicator whose mean is known in closed form.
pub fn ers_cva_term(
    model: &SurvivalModel,
    contract: &ErsContract,
    curve: &DiscountCurve,
    config: &SimulationConfig,
    spread: f64,
) -> Result<CvaEstimate> {
    let contract = contract.with_spread(spread);
    let paths = simulate_joint_paths(model, &contract, curve, config)?;
    let pd = 1.0 - model.survival(contract.maturity());
    let est = Exposure::new(&paths, &contract, curve).cva(spread, contract.lgd(), pd, config.control_variate);
    if est.defaulted_paths == 0 {
        log::warn!("no simulated path defaulted; CVA reported as 0 with no error estimate");
    }
    Ok(est)
}

/// Spread `X` that makes the defaultable swap fair to the investor:
/// `X = CVA(X) / (K S0 Σ α_i P(0,T_i))`.
///
/// One set of paths is simulated and reused for every iterate, so the map
/// is a deterministic contraction starting from `X = 0`.
pub fn ers_fair_spread(
    model: &SurvivalModel,
    contract: &ErsContract,
    curve: &DiscountCurve,
    config: &SimulationConfig,
) -> Result<ErsPricingResult> {
    let paths = simulate_joint_paths(model, contract, curve, config)?;
    fair_spread_from_paths(model, &paths, contract, curve, config)
}

pub fn fair_spread_from_paths(
    model: &SurvivalModel,
    paths: &SimulatedPaths,
    contract: &ErsContract,
    curve: &DiscountCurve,
    config: &SimulationConfig,
) -> Result<ErsPricingResult> {
    let exposure = Exposure::new(paths, contract, curve);
    let pd_closed = 1.0 - model.survival(contract.maturity());
    let scale = contract.notional() * contract.annuity(curve);
    let lgd = contract.lgd();

    let mut x = 0.0;
    let mut trace = vec![0.0];
    let mut steps: Vec<f64> = Vec::new();
    let mut est;
    loop {
        est = exposure.cva(x, lgd, pd_closed, config.control_variate);
        let next = est.cva.mean / scale;
        steps.push((next - x).abs() / BP);
        trace.push(next / BP);
        x = next;
        if steps.last().is_some_and(|&s| s < SPREAD_TOL_BP) {
            break;
        }
        if steps.len() >= MAX_SPREAD_ITERATIONS {
            return Err(CreditError::NonConvergence { iterations: steps.len(), trace });
        }
    }
    est = exposure.cva(x, lgd, pd_closed, config.control_variate);

    let mut warnings = Vec::new();
    if steps.windows(2).skip(1).any(|w| w[1] > w[0]) {
        warnings.push(format!("spread iteration is not contracting: |ΔX| trace (bp) {steps:?}"));
    }
    let defaulted = paths.defaulted();
    let low_statistics = defaulted < MIN_DEFAULTED_PATHS;
    if low_statistics {
        warnings.push(format!(
            "only {defaulted} of {} paths defaulted (< {MIN_DEFAULTED_PATHS}); the fair spread is statistically unreliable",
            paths.records.len()
        ));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(ErsPricingResult {
        model: paths.model,
        rho: contract.rho,
        fair_spread_bp: x / BP,
        fair_spread_se_bp: est.cva.std_error / scale / BP,
        cva: est,
        default_probability: exposure.default_probability(),
        default_probability_closed_form: pd_closed,
        variance_reduction_factor: est.variance_reduction_factor(),
        paths: paths.records.len(),
        defaulted_paths: defaulted,
        low_statistics,
        iterations_bp: trace,
        grid_steps: paths.grid.steps(),
        config: *config,
        warnings,
    })
}

/// Fair spread under the intensity model, where default is independent of
/// the equity and the correlation plays no role.
pub fn intensity_ers_check(
    hazard: &HazardCurve,
    contract: &ErsContract,
    curve: &DiscountCurve,
    config: &SimulationConfig,
) -> Result<ErsPricingResult> {
    let contract = contract.with_rho(0.0)?;
    ers_fair_spread(&SurvivalModel::Intensity(hazard.clone()), &contract, curve, config)
}
