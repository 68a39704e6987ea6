use serde::{Deserialize, Serialize};

use crate::curves::{make_schedule, DayCount, DiscountCurve, PaymentSchedule};
use crate::error::{domain, Result};
use crate::presets::ErsTerms;

/// Equity return swap between a default-free investor and a defaultable
/// counterparty, on `stock_count` shares of a non-defaultable stock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErsContract {
    pub stock_count: f64,
    pub s0: f64,
    pub equity_vol: f64,
    /// Continuous dividend yield.
    pub dividend_yield: f64,
    pub schedule: PaymentSchedule,
    /// Spread over the floating rate, per year.
    pub spread: f64,
    /// Counterparty recovery.
    pub recovery: f64,
    /// Correlation of the counterparty firm-value and equity drivers.
    pub rho: f64,
}

impl ErsContract {
    pub fn new(
        stock_count: f64,
        s0: f64,
        equity_vol: f64,
        dividend_yield: f64,
        schedule: PaymentSchedule,
        spread: f64,
        recovery: f64,
        rho: f64,
    ) -> Result<Self> {
        let c = Self { stock_count, s0, equity_vol, dividend_yield, schedule, spread, recovery, rho };
        c.validate()?;
        Ok(c)
    }

    pub fn from_terms(terms: &ErsTerms, rho: f64) -> Result<Self> {
        let schedule = make_schedule(0.0, terms.maturity, terms.payments_per_year, DayCount::EqualSteps)?;
        Self::new(terms.stock_count, terms.s0, terms.equity_vol, terms.dividend_yield, schedule, 0.0, terms.recovery, rho)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return domain(format!("S0 must be positive, got {}", self.s0));
        }
        if !(self.stock_count > 0.0 && self.stock_count.is_finite()) {
            return domain(format!("stock count must be positive, got {}", self.stock_count));
        }
        if !(self.equity_vol > 0.0 && self.equity_vol.is_finite()) {
            return domain(format!("equity volatility must be positive, got {}", self.equity_vol));
        }
        if !self.dividend_yield.is_finite() {
            return domain("dividend yield must be finite");
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return domain(format!("correlation must lie in [-1, 1], got {}", self.rho));
        }
        if !(0.0..1.0).contains(&self.recovery) {
            return domain(format!("recovery must lie in [0, 1), got {}", self.recovery));
        }
        if self.schedule.start() != 0.0 {
            return domain("equity return swap must start at 0");
        }
        Ok(())
    }

    pub fn maturity(&self) -> f64 {
        self.schedule.end()
    }

    pub fn notional(&self) -> f64 {
        self.stock_count * self.s0
    }

    pub fn lgd(&self) -> f64 {
        1.0 - self.recovery
    }

    pub fn with_spread(&self, spread: f64) -> Self {
        Self { spread, ..self.clone() }
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        let c = Self { rho, ..self.clone() };
        c.validate()?;
        Ok(c)
    }

    /// `Σ α_i P(0, T_i)`.
    pub fn annuity(&self, curve: &DiscountCurve) -> f64 {
        self.schedule.dates().iter().zip(self.schedule.accruals()).map(|(&t, &a)| a * curve.df(t)).sum()
    }
}

/// Monte Carlo settings. All randomness derives from `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_paths: usize,
    pub steps_per_year: u32,
    pub seed: u64,
    pub bridge_correction: bool,
    pub control_variate: bool,
    pub antithetic: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            steps_per_year: 52,
            seed: 20_090_916,
            bridge_correction: true,
            control_variate: true,
            antithetic: false,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return domain(format!("need at least 2 paths, got {}", self.n_paths));
        }
        if self.antithetic && self.n_paths % 2 != 0 {
            return domain("antithetic sampling needs an even path count");
        }
        if self.steps_per_year < 12 {
            return domain(format!("need at least 12 steps per year, got {}", self.steps_per_year));
        }
        Ok(())
    }
}
