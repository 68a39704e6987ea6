//! Closed-form survival curves: AT1P first-passage, its SBTV scenario
//! mixture, and piecewise-constant intensity.
//!
//! Firm value follows a GBM with deterministic time-varying volatility and
//! defaults when it first touches the exponential barrier
//! `H(t) = H exp(∫_0^t (r_u - k_u - B σ_u²) du)`. The initial firm value is
//! normalised to one, so the barrier is carried as the ratio `H / V_0`.

use serde::{Deserialize, Serialize};

use crate::curves::DiscountCurve;
use crate::error::{domain, CreditError, Result};
use crate::math::norm_cdf;

/// Which family a survival curve comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Intensity,
    At1p,
    Sbtv,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Intensity => "intensity",
            ModelKind::At1p => "at1p",
            ModelKind::Sbtv => "sbtv",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = CreditError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "intensity" => Ok(ModelKind::Intensity),
            "at1p" => Ok(ModelKind::At1p),
            "sbtv" => Ok(ModelKind::Sbtv),
            other => Err(CreditError::Config(format!("unknown model '{other}' (expected intensity, at1p or sbtv)"))),
        }
    }
}

/// An evaluable survival curve `t -> Q(τ > t)` for `t >= 0`.
pub trait SurvivalCurve: Sync {
    fn survival(&self, t: f64) -> f64;

    fn kind(&self) -> Option<ModelKind> {
        None
    }
}

impl<F> SurvivalCurve for F
where
    F: Fn(f64) -> f64 + Sync,
{
    fn survival(&self, t: f64) -> f64 {
        self(t)
    }
}

fn check_buckets(ends: &[f64], values: &[f64], what: &str) -> Result<()> {
    if ends.is_empty() {
        return domain(format!("{what}: at least one bucket required"));
    }
    if ends.len() != values.len() {
        return domain(format!("{what}: {} bucket ends but {} values", ends.len(), values.len()));
    }
    let mut prev = 0.0;
    for (i, &e) in ends.iter().enumerate() {
        if !(e.is_finite() && e > prev) {
            return domain(format!("{what}: bucket ends must be positive and strictly increasing (bucket {i})"));
        }
        prev = e;
    }
    Ok(())
}

/// Piecewise-constant instantaneous volatility. Bucket `j` covers
/// `(ends[j-1], ends[j]]`; the last volatility is held flat beyond the
/// last bucket end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVols", into = "RawVols")]
pub struct VolatilityTermStructure {
    bucket_ends: Vec<f64>,
    sigmas: Vec<f64>,
    /// Integrated variance at each bucket end.
    cum_var: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawVols {
    bucket_ends: Vec<f64>,
    sigmas: Vec<f64>,
}

impl TryFrom<RawVols> for VolatilityTermStructure {
    type Error = CreditError;
    fn try_from(raw: RawVols) -> Result<Self> {
        Self::new(raw.bucket_ends, raw.sigmas)
    }
}

impl From<VolatilityTermStructure> for RawVols {
    fn from(v: VolatilityTermStructure) -> Self {
        RawVols { bucket_ends: v.bucket_ends, sigmas: v.sigmas }
    }
}

impl VolatilityTermStructure {
    pub fn new(bucket_ends: Vec<f64>, sigmas: Vec<f64>) -> Result<Self> {
        check_buckets(&bucket_ends, &sigmas, "volatility term structure")?;
        if let Some(s) = sigmas.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return domain(format!("volatilities must be positive and finite, got {s}"));
        }
        let mut cum_var = Vec::with_capacity(sigmas.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for (&e, &s) in bucket_ends.iter().zip(&sigmas) {
            acc += s * s * (e - prev);
            cum_var.push(acc);
            prev = e;
        }
        Ok(Self { bucket_ends, sigmas, cum_var })
    }

    /// Single volatility for all maturities (one bucket ending at `horizon`).
    pub fn flat(sigma: f64, horizon: f64) -> Result<Self> {
        Self::new(vec![horizon], vec![sigma])
    }

    pub fn bucket_ends(&self) -> &[f64] {
        &self.bucket_ends
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    /// Copy with one extra bucket `(last_end, end]` at volatility `sigma`.
    pub fn extended(&self, end: f64, sigma: f64) -> Result<Self> {
        let mut ends = self.bucket_ends.clone();
        let mut sigmas = self.sigmas.clone();
        ends.push(end);
        sigmas.push(sigma);
        Self::new(ends, sigmas)
    }

    /// Instantaneous volatility at `t` (right-continuous within buckets).
    pub fn sigma_at(&self, t: f64) -> f64 {
        let j = self.bucket_ends.partition_point(|&e| e < t).min(self.sigmas.len() - 1);
        self.sigmas[j]
    }

    /// `∫_0^t σ_u² du`.
    pub fn cumulative_variance(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let j = self.bucket_ends.partition_point(|&e| e < t);
        if j >= self.sigmas.len() {
            let last = self.sigmas.len() - 1;
            let s = self.sigmas[last];
            return self.cum_var[last] + s * s * (t - self.bucket_ends[last]);
        }
        let (base, start) = if j == 0 { (0.0, 0.0) } else { (self.cum_var[j - 1], self.bucket_ends[j - 1]) };
        let s = self.sigmas[j];
        base + s * s * (t - start)
    }
}

/// AT1P survival for a given integrated variance. Shared by the AT1P and
/// SBTV evaluators so both take exactly the same arithmetic path.
pub fn at1p_survival_from_variance(h_over_v0: f64, b: f64, variance: f64) -> f64 {
    if variance <= 0.0 {
        return 1.0;
    }
    let k = 2.0 * b - 1.0;
    let log_ratio = h_over_v0.ln();
    if !variance.is_finite() {
        // Σ → ∞: both Φ arguments tend to sign(k)·∞
        return if k > 0.0 { (1.0 - h_over_v0.powf(k)).clamp(0.0, 1.0) } else { 0.0 };
    }
    let sd = variance.sqrt();
    let drift = 0.5 * k * variance;
    let d1 = (-log_ratio + drift) / sd;
    let d2 = (log_ratio + drift) / sd;
    let second = if k == -1.0 { norm_cdf(d2) / h_over_v0 } else { (k * log_ratio).exp() * norm_cdf(d2) };
    (norm_cdf(d1) - second).clamp(0.0, 1.0)
}

/// AT1P parameters: barrier ratio `H/V_0`, barrier volatility exponent `B`
/// and the firm volatility term structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAt1p", into = "RawAt1p")]
pub struct At1pParams {
    h_over_v0: f64,
    b: f64,
    vols: VolatilityTermStructure,
}

#[derive(Serialize, Deserialize)]
struct RawAt1p {
    h_over_v0: f64,
    b: f64,
    vols: VolatilityTermStructure,
}

impl TryFrom<RawAt1p> for At1pParams {
    type Error = CreditError;
    fn try_from(r: RawAt1p) -> Result<Self> {
        Self::new(r.h_over_v0, r.b, r.vols)
    }
}

impl From<At1pParams> for RawAt1p {
    fn from(p: At1pParams) -> Self {
        RawAt1p { h_over_v0: p.h_over_v0, b: p.b, vols: p.vols }
    }
}

fn check_barrier_ratio(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return domain(format!("barrier ratio H/V0 must lie in (0, 1), got {h} (firm must start above the barrier)"));
    }
    Ok(())
}

impl At1pParams {
    pub fn new(h_over_v0: f64, b: f64, vols: VolatilityTermStructure) -> Result<Self> {
        check_barrier_ratio(h_over_v0)?;
        if !b.is_finite() {
            return domain(format!("barrier exponent B must be finite, got {b}"));
        }
        Ok(Self { h_over_v0, b, vols })
    }

    /// Build from absolute levels; only the ratio `h / v0` is retained.
    pub fn from_levels(v0: f64, h: f64, b: f64, vols: VolatilityTermStructure) -> Result<Self> {
        if !(v0 > 0.0 && h > 0.0) {
            return domain(format!("firm value and barrier must be positive, got V0={v0}, H={h}"));
        }
        Self::new(h / v0, b, vols)
    }

    pub fn h_over_v0(&self) -> f64 {
        self.h_over_v0
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn vols(&self) -> &VolatilityTermStructure {
        &self.vols
    }

    /// `Q(τ > t)`; `t` must be non-negative.
    pub fn survival_checked(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return domain(format!("survival time must be >= 0, got {t}"));
        }
        Ok(self.survival(t))
    }
}

impl SurvivalCurve for At1pParams {
    fn survival(&self, t: f64) -> f64 {
        at1p_survival_from_variance(self.h_over_v0, self.b, self.vols.cumulative_variance(t))
    }

    fn kind(&self) -> Option<ModelKind> {
        Some(ModelKind::At1p)
    }
}

/// Checked AT1P survival probability `Q(τ > t)`.
pub fn at1p_survival(params: &At1pParams, t: f64) -> Result<f64> {
    params.survival_checked(t)
}

/// Constant payout ratio `k` of the firm (per year).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PayoutRatio(pub f64);

impl PayoutRatio {
    pub fn integrated(self, t: f64) -> f64 {
        self.0 * t
    }
}

/// Default barrier `H(t)` in units of the initial firm value.
pub fn barrier_level(params: &At1pParams, curve: &DiscountCurve, payout: PayoutRatio, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("barrier time must be >= 0, got {t}"));
    }
    let exponent = curve.integrated_rate(0.0, t) - payout.integrated(t) - params.b * params.vols.cumulative_variance(t);
    Ok(params.h_over_v0 * exponent.exp())
}

/// One barrier scenario of the SBTV mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub h_over_v0: f64,
    pub probability: f64,
}

/// SBTV parameters: AT1P with a discrete random initial barrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSbtv", into = "RawSbtv")]
pub struct SbtvParams {
    scenarios: Vec<Scenario>,
    b: f64,
    vols: VolatilityTermStructure,
}

#[derive(Serialize, Deserialize)]
struct RawSbtv {
    scenarios: Vec<Scenario>,
    b: f64,
    vols: VolatilityTermStructure,
}

impl TryFrom<RawSbtv> for SbtvParams {
    type Error = CreditError;
    fn try_from(r: RawSbtv) -> Result<Self> {
        Self::new(r.scenarios, r.b, r.vols)
    }
}

impl From<SbtvParams> for RawSbtv {
    fn from(p: SbtvParams) -> Self {
        RawSbtv { scenarios: p.scenarios, b: p.b, vols: p.vols }
    }
}

/// Tolerance on `Σ p^i = 1`.
const PROBABILITY_SUM_TOL: f64 = 1e-12;

impl SbtvParams {
    pub fn new(scenarios: Vec<Scenario>, b: f64, vols: VolatilityTermStructure) -> Result<Self> {
        if scenarios.is_empty() {
            return domain("SBTV needs at least one scenario");
        }
        let mut prev_h = 0.0;
        let mut total = 0.0;
        for (i, s) in scenarios.iter().enumerate() {
            check_barrier_ratio(s.h_over_v0)?;
            if i > 0 && s.h_over_v0 <= prev_h {
                return domain("scenario barriers must be strictly increasing");
            }
            if !(0.0..=1.0).contains(&s.probability) {
                return domain(format!("scenario probability must lie in [0, 1], got {}", s.probability));
            }
            prev_h = s.h_over_v0;
            total += s.probability;
        }
        if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
            return domain(format!("scenario probabilities must sum to one, got {total}"));
        }
        if !b.is_finite() {
            return domain(format!("barrier exponent B must be finite, got {b}"));
        }
        Ok(Self { scenarios, b, vols })
    }

    /// Two-scenario SBTV with `p^2 = 1 - p^1`.
    pub fn two_scenario(h1: f64, h2: f64, p1: f64, b: f64, vols: VolatilityTermStructure) -> Result<Self> {
        Self::new(
            vec![Scenario { h_over_v0: h1, probability: p1 }, Scenario { h_over_v0: h2, probability: 1.0 - p1 }],
            b,
            vols,
        )
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn vols(&self) -> &VolatilityTermStructure {
        &self.vols
    }

    /// The AT1P model conditional on scenario `i`.
    pub fn scenario_model(&self, i: usize) -> At1pParams {
        At1pParams { h_over_v0: self.scenarios[i].h_over_v0, b: self.b, vols: self.vols.clone() }
    }

    pub fn survival_checked(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return domain(format!("survival time must be >= 0, got {t}"));
        }
        Ok(self.survival(t))
    }
}

impl SurvivalCurve for SbtvParams {
    fn survival(&self, t: f64) -> f64 {
        let var = self.vols.cumulative_variance(t);
        let q: f64 = self
            .scenarios
            .iter()
            .map(|s| s.probability * at1p_survival_from_variance(s.h_over_v0, self.b, var))
            .sum();
        q.clamp(0.0, 1.0)
    }

    fn kind(&self) -> Option<ModelKind> {
        Some(ModelKind::Sbtv)
    }
}

/// Checked SBTV survival `Σ p^i Q_AT1P(τ > t | H^i)`.
pub fn sbtv_survival(params: &SbtvParams, t: f64) -> Result<f64> {
    params.survival_checked(t)
}

/// Piecewise-constant hazard rate, flat beyond the last bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHazard", into = "RawHazard")]
pub struct HazardCurve {
    bucket_ends: Vec<f64>,
    lambdas: Vec<f64>,
    cum_hazard: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawHazard {
    bucket_ends: Vec<f64>,
    lambdas: Vec<f64>,
}

impl TryFrom<RawHazard> for HazardCurve {
    type Error = CreditError;
    fn try_from(r: RawHazard) -> Result<Self> {
        Self::new(r.bucket_ends, r.lambdas)
    }
}

impl From<HazardCurve> for RawHazard {
    fn from(h: HazardCurve) -> Self {
        RawHazard { bucket_ends: h.bucket_ends, lambdas: h.lambdas }
    }
}

impl HazardCurve {
    pub fn new(bucket_ends: Vec<f64>, lambdas: Vec<f64>) -> Result<Self> {
        check_buckets(&bucket_ends, &lambdas, "hazard curve")?;
        if let Some(l) = lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return domain(format!("hazard rates must be non-negative and finite, got {l}"));
        }
        let mut cum_hazard = Vec::with_capacity(lambdas.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for (&e, &l) in bucket_ends.iter().zip(&lambdas) {
            acc += l * (e - prev);
            cum_hazard.push(acc);
            prev = e;
        }
        Ok(Self { bucket_ends, lambdas, cum_hazard })
    }

    pub fn flat(lambda: f64, horizon: f64) -> Result<Self> {
        Self::new(vec![horizon], vec![lambda])
    }

    pub fn extended(&self, end: f64, lambda: f64) -> Result<Self> {
        let mut ends = self.bucket_ends.clone();
        let mut lambdas = self.lambdas.clone();
        ends.push(end);
        lambdas.push(lambda);
        Self::new(ends, lambdas)
    }

    pub fn bucket_ends(&self) -> &[f64] {
        &self.bucket_ends
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// `∫_0^t λ(u) du`.
    pub fn cumulative_hazard(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let j = self.bucket_ends.partition_point(|&e| e < t);
        if j >= self.lambdas.len() {
            let last = self.lambdas.len() - 1;
            return self.cum_hazard[last] + self.lambdas[last] * (t - self.bucket_ends[last]);
        }
        let (base, start) = if j == 0 { (0.0, 0.0) } else { (self.cum_hazard[j - 1], self.bucket_ends[j - 1]) };
        base + self.lambdas[j] * (t - start)
    }

    /// Smallest `t` with `∫_0^t λ = target`, or `None` if the hazard never
    /// accumulates that much.
    pub fn inverse_cumulative_hazard(&self, target: f64) -> Option<f64> {
        if target <= 0.0 {
            return Some(0.0);
        }
        let j = self.cum_hazard.partition_point(|&c| c < target);
        if j < self.lambdas.len() {
            let (base, start) = if j == 0 { (0.0, 0.0) } else { (self.cum_hazard[j - 1], self.bucket_ends[j - 1]) };
            // λ_j > 0 here because the cumulative hazard strictly increased
            return Some(start + (target - base) / self.lambdas[j]);
        }
        let last = self.lambdas.len() - 1;
        let l = self.lambdas[last];
        if l > 0.0 {
            Some(self.bucket_ends[last] + (target - self.cum_hazard[last]) / l)
        } else {
            None
        }
    }
}

impl SurvivalCurve for HazardCurve {
    fn survival(&self, t: f64) -> f64 {
        (-self.cumulative_hazard(t)).exp()
    }

    fn kind(&self) -> Option<ModelKind> {
        Some(ModelKind::Intensity)
    }
}

/// Checked intensity-model survival `exp(-∫_0^t λ)`.
pub fn intensity_survival(curve: &HazardCurve, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("survival time must be >= 0, got {t}"));
    }
    Ok(curve.survival(t))
}

/// Calibrated model of any of the three families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum SurvivalModel {
    Intensity(HazardCurve),
    At1p(At1pParams),
    Sbtv(SbtvParams),
}

impl SurvivalModel {
    pub fn model_kind(&self) -> ModelKind {
        match self {
            SurvivalModel::Intensity(_) => ModelKind::Intensity,
            SurvivalModel::At1p(_) => ModelKind::At1p,
            SurvivalModel::Sbtv(_) => ModelKind::Sbtv,
        }
    }
}

impl SurvivalCurve for SurvivalModel {
    fn survival(&self, t: f64) -> f64 {
        match self {
            SurvivalModel::Intensity(h) => h.survival(t),
            SurvivalModel::At1p(p) => p.survival(t),
            SurvivalModel::Sbtv(p) => p.survival(t),
        }
    }

    fn kind(&self) -> Option<ModelKind> {
        Some(self.model_kind())
    }
}
