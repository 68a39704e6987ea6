use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::DiscountCurve;
use crate::error::{CreditError, Result};
use crate::survival::{HazardCurve, ModelKind, SurvivalModel, VolatilityTermStructure};

use super::contract::{ErsContract, SimulationConfig};

/// Paths per independently seeded block.
pub const BLOCK_PATHS: usize = 2048;

const GRID_EPS: f64 = 1e-12;

/// Simulation dates `0 = t_0 < … < t_n = T`, uniform at `1/steps_per_year`
/// plus any breakpoint that falls strictly inside a step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    inserted: Vec<f64>,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps_per_year: u32, breakpoints: &[f64]) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(CreditError::Domain(format!("simulation horizon must be positive, got {horizon}")));
        }
        if steps_per_year == 0 {
            return Err(CreditError::Config("steps per year must be positive".into()));
        }
        let h = 1.0 / steps_per_year as f64;
        let mut times: Vec<f64> = (0..)
            .map(|i| i as f64 * h)
            .take_while(|&t| t < horizon - GRID_EPS)
            .collect();
        times.push(horizon);
        let mut inserted = Vec::new();
        for &b in breakpoints {
            if b <= GRID_EPS || b >= horizon - GRID_EPS {
                continue;
            }
            let pos = times.partition_point(|&t| t < b);
            let near = |i: usize| times.get(i).is_some_and(|&t| (t - b).abs() <= GRID_EPS);
            if near(pos) || (pos > 0 && near(pos - 1)) {
                continue;
            }
            times.insert(pos, b);
            inserted.push(b);
        }
        if !inserted.is_empty() {
            log::info!("simulation grid refined with breakpoints {inserted:?}");
        }
        Ok(Self { times, inserted })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn inserted(&self) -> &[f64] {
        &self.inserted
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }
}

/// Default time and the equity price observed at that time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefaultEvent {
    pub time: f64,
    pub equity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    /// Index of the barrier scenario drawn for the path (always 0 outside SBTV).
    pub scenario: u32,
    pub default: Option<DefaultEvent>,
    /// Equity price on each payment date of the contract schedule.
    pub equity_at_schedule: Vec<f64>,
    pub equity_terminal: f64,
}

/// Output of [`simulate_joint_paths`], ordered by path index.
#[derive(Debug, Clone)]
pub struct SimulatedPaths {
    pub model: ModelKind,
    pub grid: TimeGrid,
    pub horizon: f64,
    pub antithetic: bool,
    pub records: Vec<PathRecord>,
}

impl SimulatedPaths {
    pub fn defaulted(&self) -> usize {
        self.records.iter().filter(|r| r.default.is_some()).count()
    }

    /// Writes up to `cap` path records as CSV.
    pub fn write_csv<W: Write>(&self, writer: W, cap: usize) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            path: usize,
            scenario: u32,
            defaulted: bool,
            default_time: Option<f64>,
            equity_at_default: Option<f64>,
            equity_terminal: f64,
        }
        let mut w = csv::Writer::from_writer(writer);
        for (path, r) in self.records.iter().take(cap).enumerate() {
            w.serialize(Row {
                path,
                scenario: r.scenario,
                defaulted: r.default.is_some(),
                default_time: r.default.map(|d| d.time),
                equity_at_default: r.default.map(|d| d.equity),
                equity_terminal: r.equity_terminal,
            })
            .map_err(|e| CreditError::Io(std::io::Error::other(e)))?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Draws {
    rng: ChaCha8Rng,
    sign: f64,
}

impl Draws {
    #[inline]
    fn normal(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        self.sign * z
    }

    #[inline]
    fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

struct Step {
    dt: f64,
    t_end: f64,
    equity_drift: f64,
    equity_sd: f64,
    firm_var: f64,
    /// Ends on a payment date.
    records_equity: bool,
}

enum Default_ {
    Structural {
        b: f64,
        /// `(ln(V0/H), cumulative probability)` per scenario.
        scenarios: Vec<(f64, f64)>,
    },
    Intensity(HazardCurve),
}

struct Engine {
    steps: Vec<Step>,
    default: Default_,
    ln_s0: f64,
    rho: f64,
    rho_perp: f64,
    equity_vol: f64,
    q_plus_half_var: f64,
    bridge: bool,
    schedule_len: usize,
}

impl Engine {
    fn equity_drift(&self, curve: &DiscountCurve, s: f64, t: f64) -> f64 {
        curve.integrated_rate(s, t) - self.q_plus_half_var * (t - s)
    }

    fn run(&self, d: &mut Draws, curve: &DiscountCurve) -> PathRecord {
        match &self.default {
            Default_::Structural { b, scenarios } => self.run_structural(d, *b, scenarios),
            Default_::Intensity(h) => self.run_intensity(d, h, curve),
        }
    }

    fn run_structural(&self, d: &mut Draws, b: f64, scenarios: &[(f64, f64)]) -> PathRecord {
        let u = d.uniform();
        let scenario = scenarios.iter().position(|&(_, c)| u < c).unwrap_or(scenarios.len() - 1);
        let mut x = scenarios[scenario].0;
        let mut ls = self.ln_s0;
        let mut default = None;
        let mut at_schedule = Vec::with_capacity(self.schedule_len);
        for st in &self.steps {
            let z1 = d.normal();
            let z2 = d.normal();
            let z3 = d.normal();
            let u = d.uniform();
            let x_new = x + (b - 0.5) * st.firm_var + st.firm_var.sqrt() * z1;
            let ls_new = ls + st.equity_drift + st.equity_sd * (self.rho * z1 + self.rho_perp * z2);
            if default.is_none() {
                if x_new <= 0.0 {
                    default = Some(DefaultEvent { time: st.t_end, equity: ls_new.exp() });
                } else if self.bridge && st.firm_var > 0.0 && u < (-2.0 * x * x_new / st.firm_var).exp() {
                    // Crossing inside the step: stamp it at the midpoint and
                    // draw the equity bridge conditional on the firm bridge
                    // sitting on the barrier there.
                    let firm_vol = (st.firm_var / st.dt).sqrt();
                    let firm_dev = -0.5 * (x + x_new) / firm_vol;
                    let mean = 0.5 * (ls + ls_new) + self.rho * self.equity_vol * firm_dev;
                    let sd = self.rho_perp * self.equity_vol * 0.5 * st.dt.sqrt();
                    default = Some(DefaultEvent { time: st.t_end - 0.5 * st.dt, equity: (mean + sd * z3).exp() });
                }
            }
            x = x_new;
            ls = ls_new;
            if st.records_equity {
                at_schedule.push(ls.exp());
            }
        }
        PathRecord { scenario: scenario as u32, default, equity_at_schedule: at_schedule, equity_terminal: ls.exp() }
    }

    fn run_intensity(&self, d: &mut Draws, hazard: &HazardCurve, curve: &DiscountCurve) -> PathRecord {
        let e = -(1.0 - d.uniform()).ln();
        let tau = hazard.inverse_cumulative_hazard(e);
        let mut ls = self.ln_s0;
        let mut default = None;
        let mut t = 0.0;
        let mut at_schedule = Vec::with_capacity(self.schedule_len);
        for st in &self.steps {
            let za = d.normal();
            let zb = d.normal();
            match tau {
                Some(tau) if tau > t && tau <= st.t_end => {
                    let l_tau = ls + self.equity_drift(curve, t, tau) + self.equity_vol * (tau - t).sqrt() * za;
                    default = Some(DefaultEvent { time: tau, equity: l_tau.exp() });
                    ls = l_tau
                        + self.equity_drift(curve, tau, st.t_end)
                        + self.equity_vol * (st.t_end - tau).sqrt() * zb;
                }
                _ => ls += st.equity_drift + st.equity_sd * za,
            }
            t = st.t_end;
            if st.records_equity {
                at_schedule.push(ls.exp());
            }
        }
        PathRecord { scenario: 0, default, equity_at_schedule: at_schedule, equity_terminal: ls.exp() }
    }
}

fn structural_inputs(model: &SurvivalModel) -> Option<(f64, Vec<(f64, f64)>, &VolatilityTermStructure)> {
    match model {
        SurvivalModel::At1p(p) => Some((p.b(), vec![(-p.h_over_v0().ln(), 1.0)], p.vols())),
        SurvivalModel::Sbtv(p) => {
            let mut cum = 0.0;
            let sc = p
                .scenarios()
                .iter()
                .map(|s| {
                    cum += s.probability;
                    (-s.h_over_v0.ln(), cum)
                })
                .collect();
            Some((p.b(), sc, p.vols()))
        }
        SurvivalModel::Intensity(_) => None,
    }
}

/// Simulates the counterparty default time jointly with the underlying
/// equity up to the contract maturity.
///
/// Structural models evolve `x = ln(V_t / H(t))`, which moves by
/// `(B − ½)ΔΣ + √ΔΣ·Z₁` per step irrespective of rates and payouts; default
/// is the first grid date with `x ≤ 0`, or, with the bridge correction on, a
/// crossing between grid dates detected with probability
/// `exp(−2 x_i x_{i+1} / ΔΣ)`. Under the intensity model the default time is
/// drawn by inverting the cumulative hazard and the equity is independent.
///
/// Results are identical for any thread count: block `k` of
/// [`BLOCK_PATHS`] paths draws from stream `k` of a generator keyed by the
/// seed.
pub fn simulate_joint_paths(
    model: &SurvivalModel,
    contract: &ErsContract,
    curve: &DiscountCurve,
    config: &SimulationConfig,
) -> Result<SimulatedPaths> {
    contract.validate()?;
    config.validate()?;
    let horizon = contract.maturity();
    let structural = structural_inputs(model);
    let mut breakpoints: Vec<f64> = match (&structural, model) {
        (Some((_, _, vols)), _) => vols.bucket_ends().to_vec(),
        (None, SurvivalModel::Intensity(h)) => h.bucket_ends().to_vec(),
        _ => Vec::new(),
    };
    breakpoints.extend_from_slice(contract.schedule.dates());
    let grid = TimeGrid::new(horizon, config.steps_per_year, &breakpoints)?;
    let sv = contract.equity_vol;
    let q_plus_half_var = contract.dividend_yield + 0.5 * sv * sv;
    let steps = grid
        .times()
        .windows(2)
        .map(|w| {
            let dt = w[1] - w[0];
            let firm_var = structural.as_ref().map_or(0.0, |(_, _, v)| v.cumulative_variance(w[1]) - v.cumulative_variance(w[0]));
            Step {
                dt,
                t_end: w[1],
                equity_drift: curve.integrated_rate(w[0], w[1]) - q_plus_half_var * dt,
                equity_sd: sv * dt.sqrt(),
                firm_var,
                records_equity: contract.schedule.dates().iter().any(|&d| (d - w[1]).abs() <= GRID_EPS),
            }
        })
        .collect();
    let default = match (structural, model) {
        (Some((b, scenarios, _)), _) => Default_::Structural { b, scenarios },
        (None, SurvivalModel::Intensity(h)) => Default_::Intensity(h.clone()),
        _ => unreachable!("every model is structural or intensity based"),
    };
    let engine = Engine {
        steps,
        default,
        ln_s0: contract.s0.ln(),
        rho: contract.rho,
        rho_perp: (1.0 - contract.rho * contract.rho).max(0.0).sqrt(),
        equity_vol: sv,
        q_plus_half_var,
        bridge: config.bridge_correction,
        schedule_len: contract.schedule.len(),
    };

    let n = config.n_paths;
    let blocks = n.div_ceil(BLOCK_PATHS);
    let records: Vec<PathRecord> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(k as u64);
            let mut d = Draws { rng, sign: 1.0 };
            let len = BLOCK_PATHS.min(n - k * BLOCK_PATHS);
            let mut out = Vec::with_capacity(len);
            if config.antithetic {
                for _ in 0..len / 2 {
                    let start = d.rng.clone();
                    d.sign = 1.0;
                    out.push(engine.run(&mut d, curve));
                    d.rng = start;
                    d.sign = -1.0;
                    out.push(engine.run(&mut d, curve));
                }
            } else {
                for _ in 0..len {
                    out.push(engine.run(&mut d, curve));
                }
            }
            out
        })
        .collect();

    Ok(SimulatedPaths { model: model.model_kind(), grid, horizon, antithetic: config.antithetic, records })
}
