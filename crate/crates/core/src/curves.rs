//! Deterministic discount curves and payment schedules.
//!
//! Time is measured in year fractions from the valuation date throughout.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{domain, CreditError, Result};

/// Curve shape as it appears in configuration files: either
/// `{"flat_rate": 0.03}` or `{"pillars": [[t, df], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CurveSpec {
    Flat { flat_rate: f64 },
    Pillars { pillars: Vec<(f64, f64)> },
}

impl Default for CurveSpec {
    fn default() -> Self {
        CurveSpec::Flat { flat_rate: 0.03 }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Flat(f64),
    /// Pillar times (first one is 0) and log discount factors.
    LogLinear { times: Vec<f64>, log_dfs: Vec<f64> },
}

/// Zero-coupon discount curve `t -> P(0, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscountCurve {
    valuation_date: Option<NaiveDate>,
    shape: Shape,
    spec: CurveSpec,
}

impl DiscountCurve {
    /// Flat continuously-compounded curve, `P(0,t) = exp(-r t)`.
    pub fn flat(rate: f64) -> Result<Self> {
        if !rate.is_finite() {
            return domain(format!("flat rate must be finite, got {rate}"));
        }
        Ok(Self {
            valuation_date: None,
            shape: Shape::Flat(rate),
            spec: CurveSpec::Flat { flat_rate: rate },
        })
    }

    /// Log-linear interpolation through `(t, df)` pillars. A pillar at `t = 0`
    /// is optional and must carry `df = 1`; beyond the last pillar the last
    /// segment's forward rate is held flat.
    pub fn from_pillars(pillars: &[(f64, f64)]) -> Result<Self> {
        if pillars.is_empty() {
            return domain("pillar curve needs at least one pillar");
        }
        let mut times = vec![0.0];
        let mut log_dfs = vec![0.0];
        for (i, &(t, df)) in pillars.iter().enumerate() {
            if !(t.is_finite() && df.is_finite() && df > 0.0) {
                return domain(format!("pillar {i}: invalid (t, df) = ({t}, {df})"));
            }
            if t == 0.0 {
                if i != 0 || df != 1.0 {
                    return domain("a pillar at t = 0 must come first and have df = 1");
                }
                continue;
            }
            if t <= *times.last().unwrap() {
                return domain(format!("pillar times must be strictly increasing and positive (pillar {i})"));
            }
            times.push(t);
            log_dfs.push(df.ln());
        }
        if times.len() < 2 {
            return domain("pillar curve needs at least one pillar with t > 0");
        }
        Ok(Self {
            valuation_date: None,
            shape: Shape::LogLinear { times, log_dfs },
            spec: CurveSpec::Pillars { pillars: pillars.to_vec() },
        })
    }

    pub fn from_spec(spec: &CurveSpec) -> Result<Self> {
        match spec {
            CurveSpec::Flat { flat_rate } => Self::flat(*flat_rate),
            CurveSpec::Pillars { pillars } => Self::from_pillars(pillars),
        }
    }

    pub fn with_valuation_date(mut self, date: NaiveDate) -> Self {
        self.valuation_date = Some(date);
        self
    }

    pub fn valuation_date(&self) -> Option<NaiveDate> {
        self.valuation_date
    }

    pub fn spec(&self) -> &CurveSpec {
        &self.spec
    }

    /// `P(0, t)`; negative times are rejected.
    pub fn discount(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return domain(format!("discount time must be >= 0, got {t}"));
        }
        Ok(self.df(t))
    }

    /// Unchecked `P(0, t)` for callers that already validated `t >= 0`.
    #[inline]
    pub fn df(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        if t == 0.0 {
            return 1.0;
        }
        self.log_df(t).exp()
    }

    /// `ln P(0, t) = -∫_0^t r_u du`.
    pub fn log_df(&self, t: f64) -> f64 {
        match &self.shape {
            Shape::Flat(r) => -r * t,
            Shape::LogLinear { times, log_dfs } => {
                let n = times.len();
                // index of the segment [times[k], times[k+1]] containing t
                let k = match times.binary_search_by(|p| p.total_cmp(&t)) {
                    Ok(i) => return log_dfs[i],
                    Err(i) => (i.max(1) - 1).min(n - 2),
                };
                let (t0, t1) = (times[k], times[k + 1]);
                let w = (t - t0) / (t1 - t0);
                log_dfs[k] + w * (log_dfs[k + 1] - log_dfs[k])
            }
        }
    }

    /// Integrated short rate `∫_s^t r_u du`.
    #[inline]
    pub fn integrated_rate(&self, s: f64, t: f64) -> f64 {
        self.log_df(s) - self.log_df(t)
    }
}

/// Year-fraction convention. Only equal steps of `1/frequency` are
/// supported: every full period accrues exactly `1/frequency` years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DayCount {
    #[default]
    EqualSteps,
}

/// Payment dates `T_1 < ... < T_n` after a start `T_0`, with accruals
/// `alpha_i = T_i - T_{i-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaymentSchedule {
    start: f64,
    dates: Vec<f64>,
    accruals: Vec<f64>,
    frequency: u32,
}

impl PaymentSchedule {
    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn dates(&self) -> &[f64] {
        &self.dates
    }

    pub fn accruals(&self) -> &[f64] {
        &self.accruals
    }

    pub fn frequency(&self) -> u32 {
        self.frequency
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn end(&self) -> f64 {
        *self.dates.last().expect("schedule is never empty")
    }

    /// `T_i` with `T_0` the schedule start (1-based payment dates).
    pub fn time(&self, i: usize) -> f64 {
        if i == 0 {
            self.start
        } else {
            self.dates[i - 1]
        }
    }

    /// Index of the first payment date strictly after `t` (1-based, so
    /// `T_{beta-1} <= t < T_beta`). Returns `len() + 1` at or after the end.
    pub fn beta(&self, t: f64) -> usize {
        self.dates.partition_point(|&d| d <= t) + 1
    }
}

/// Evenly spaced schedule from `start` to `end` with `frequency` payments
/// per year. When the tenor is not a whole number of periods the last period
/// is a short stub so that the final date is exactly `end`.
pub fn make_schedule(start: f64, end: f64, frequency: u32, _day_count: DayCount) -> Result<PaymentSchedule> {
    if !matches!(frequency, 1 | 2 | 4 | 12) {
        return domain(format!("frequency must be one of 1, 2, 4, 12; got {frequency}"));
    }
    if !(start.is_finite() && end.is_finite()) || end <= start {
        return domain(format!("non-positive tenor: start {start}, end {end}"));
    }
    let f = f64::from(frequency);
    let periods = ((end - start) * f - 1e-9).ceil().max(1.0) as usize;
    let mut dates: Vec<f64> = (1..periods).map(|i| start + i as f64 / f).collect();
    dates.push(end);
    let mut accruals = Vec::with_capacity(periods);
    let mut prev = start;
    for &d in &dates {
        accruals.push(d - prev);
        prev = d;
    }
    if accruals.iter().any(|&a| a <= 0.0) {
        return Err(CreditError::Domain("schedule produced a non-positive accrual".into()));
    }
    Ok(PaymentSchedule { start, dates, accruals, frequency })
}
