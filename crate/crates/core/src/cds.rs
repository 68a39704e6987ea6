//! Running CDS pricing off an arbitrary survival curve.
//!
//! All values are per unit notional and seen from the protection buyer:
//! positive means the buyer receives value. With premium spread `R`
//!
//! ```text
//! price(R) = protection_leg - R * (premium_annuity + accrual_on_default)
//! ```
//!
//! so the fair spread is `protection_leg / (premium_annuity + accrual_on_default)`.
//! The postponed convention pays protection at the first payment date after
//! default and drops the accrual-on-default term.

use serde::{Deserialize, Serialize};

use crate::curves::{make_schedule, DayCount, DiscountCurve, PaymentSchedule};
use crate::error::{domain, CreditError, Result};
use crate::survival::SurvivalCurve;

/// Standard CDS premium frequency (quarterly).
pub const CDS_FREQUENCY: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PricingConvention {
    /// Stieltjes integrals on a fine grid, including accrual on default.
    Exact,
    /// Protection paid at the next payment date, no accrual term.
    #[default]
    Postponed,
}

impl std::str::FromStr for PricingConvention {
    type Err = CreditError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(PricingConvention::Exact),
            "postponed" => Ok(PricingConvention::Postponed),
            other => Err(CreditError::Config(format!("unknown convention '{other}' (expected exact or postponed)"))),
        }
    }
}

/// Integration grid for the exact convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationGrid {
    pub steps_per_year: u32,
}

impl Default for IntegrationGrid {
    fn default() -> Self {
        Self { steps_per_year: 365 }
    }
}

/// Spot-starting running CDS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdsContract {
    schedule: PaymentSchedule,
    spread: f64,
    recovery: f64,
}

impl CdsContract {
    pub fn new(schedule: PaymentSchedule, spread: f64, recovery: f64) -> Result<Self> {
        if schedule.start() != 0.0 {
            return domain(format!(
                "forward-starting CDS (T_a = {}) is not supported; only spot-starting contracts",
                schedule.start()
            ));
        }
        if !(spread.is_finite() && spread >= 0.0) {
            return domain(format!("CDS spread must be non-negative, got {spread}"));
        }
        if !(0.0..1.0).contains(&recovery) {
            return domain(format!("recovery must lie in [0, 1), got {recovery}"));
        }
        Ok(Self { schedule, spread, recovery })
    }

    /// Quarterly CDS from 0 to `tenor`.
    pub fn standard(tenor: f64, spread: f64, recovery: f64) -> Result<Self> {
        Self::new(make_schedule(0.0, tenor, CDS_FREQUENCY, DayCount::EqualSteps)?, spread, recovery)
    }

    pub fn schedule(&self) -> &PaymentSchedule {
        &self.schedule
    }

    pub fn spread(&self) -> f64 {
        self.spread
    }

    pub fn recovery(&self) -> f64 {
        self.recovery
    }

    pub fn lgd(&self) -> f64 {
        1.0 - self.recovery
    }

    pub fn maturity(&self) -> f64 {
        self.schedule.end()
    }

    pub fn with_spread(&self, spread: f64) -> Result<Self> {
        Self::new(self.schedule.clone(), spread, self.recovery)
    }
}

/// Leg values that make the CDS price affine in the spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdsLegs {
    /// `LGD ∫ P(0,t) d Q(τ <= t)` (or its postponed sum).
    pub protection: f64,
    /// `Σ P(0,T_i) α_i Q(τ >= T_i)`.
    pub premium_annuity: f64,
    /// `∫ P(0,t) (t - T_{β(t)-1}) d Q(τ <= t)`; zero for the postponed convention.
    pub accrual_on_default: f64,
}

impl CdsLegs {
    pub fn risky_annuity(&self) -> f64 {
        self.premium_annuity + self.accrual_on_default
    }

    pub fn price(&self, spread: f64) -> f64 {
        self.protection - spread * self.risky_annuity()
    }

    pub fn fair_spread(&self) -> Result<f64> {
        let annuity = self.risky_annuity();
        if !(annuity > 0.0) {
            return Err(CreditError::Degenerate(
                "zero premium annuity (immediate sure default); fair spread undefined".into(),
            ));
        }
        Ok(self.protection / annuity)
    }
}

fn premium_annuity<S: SurvivalCurve + ?Sized>(schedule: &PaymentSchedule, curve: &DiscountCurve, surv: &S) -> f64 {
    schedule
        .dates()
        .iter()
        .zip(schedule.accruals())
        .map(|(&t, &a)| curve.df(t) * a * surv.survival(t))
        .sum()
}

/// Leg values under the postponed-payoff convention.
pub fn postponed_legs<S: SurvivalCurve + ?Sized>(contract: &CdsContract, curve: &DiscountCurve, surv: &S) -> CdsLegs {
    let schedule = &contract.schedule;
    let mut protection = 0.0;
    let mut annuity = 0.0;
    let mut q_prev = surv.survival(schedule.start());
    for (&t, &a) in schedule.dates().iter().zip(schedule.accruals()) {
        let q = surv.survival(t);
        let df = curve.df(t);
        protection += df * (q_prev - q);
        annuity += df * a * q;
        q_prev = q;
    }
    CdsLegs { protection: contract.lgd() * protection, premium_annuity: annuity, accrual_on_default: 0.0 }
}

/// Leg values with the default-time integrals discretized on `grid`:
/// exact survival increments per sub-step, discounted (and accrued) at the
/// sub-step midpoint. Sub-steps never straddle a payment date.
pub fn exact_legs<S: SurvivalCurve + ?Sized>(
    contract: &CdsContract,
    curve: &DiscountCurve,
    surv: &S,
    grid: IntegrationGrid,
) -> Result<CdsLegs> {
    let schedule = &contract.schedule;
    if grid.steps_per_year < schedule.frequency() {
        return Err(CreditError::Config(format!(
            "integration grid ({} steps/year) is coarser than the payment schedule ({} payments/year)",
            grid.steps_per_year,
            schedule.frequency()
        )));
    }
    let steps = f64::from(grid.steps_per_year);
    let mut protection = 0.0;
    let mut accrual = 0.0;
    let mut period_start = schedule.start();
    let mut q_prev = surv.survival(period_start);
    for &period_end in schedule.dates() {
        let n = (((period_end - period_start) * steps) - 1e-9).ceil().max(1.0) as usize;
        let h = (period_end - period_start) / n as f64;
        for j in 0..n {
            let t1 = if j + 1 == n { period_end } else { period_start + (j + 1) as f64 * h };
            let mid = period_start + (j as f64 + 0.5) * h;
            let q = surv.survival(t1);
            let dq = q_prev - q;
            let df = curve.df(mid);
            protection += df * dq;
            accrual += df * (mid - period_start) * dq;
            q_prev = q;
        }
        period_start = period_end;
    }
    Ok(CdsLegs {
        protection: contract.lgd() * protection,
        premium_annuity: premium_annuity(schedule, curve, surv),
        accrual_on_default: accrual,
    })
}

pub fn legs<S: SurvivalCurve + ?Sized>(
    contract: &CdsContract,
    curve: &DiscountCurve,
    surv: &S,
    convention: PricingConvention,
    grid: IntegrationGrid,
) -> Result<CdsLegs> {
    match convention {
        PricingConvention::Exact => exact_legs(contract, curve, surv, grid),
        PricingConvention::Postponed => Ok(postponed_legs(contract, curve, surv)),
    }
}

/// Buyer-side CDS value with the accrual-on-default term and the default
/// integral evaluated on the default 365-steps-per-year grid.
pub fn cds_price_exact<S: SurvivalCurve + ?Sized>(contract: &CdsContract, curve: &DiscountCurve, surv: &S) -> Result<f64> {
    cds_price_exact_on(contract, curve, surv, IntegrationGrid::default())
}

pub fn cds_price_exact_on<S: SurvivalCurve + ?Sized>(
    contract: &CdsContract,
    curve: &DiscountCurve,
    surv: &S,
    grid: IntegrationGrid,
) -> Result<f64> {
    Ok(exact_legs(contract, curve, surv, grid)?.price(contract.spread))
}

/// Buyer-side CDS value under the postponed-payoff approximation.
pub fn cds_price_postponed<S: SurvivalCurve + ?Sized>(contract: &CdsContract, curve: &DiscountCurve, surv: &S) -> f64 {
    postponed_legs(contract, curve, surv).price(contract.spread)
}

pub fn cds_price<S: SurvivalCurve + ?Sized>(
    contract: &CdsContract,
    curve: &DiscountCurve,
    surv: &S,
    convention: PricingConvention,
) -> Result<f64> {
    Ok(legs(contract, curve, surv, convention, IntegrationGrid::default())?.price(contract.spread))
}

/// Spread that makes the contract worth zero. The contract's own spread is
/// ignored; only its schedule and recovery matter.
pub fn fair_spread<S: SurvivalCurve + ?Sized>(
    contract: &CdsContract,
    curve: &DiscountCurve,
    surv: &S,
    convention: PricingConvention,
) -> Result<f64> {
    legs(contract, curve, surv, convention, IntegrationGrid::default())?.fair_spread()
}
