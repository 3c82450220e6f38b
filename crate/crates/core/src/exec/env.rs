//! Episodes, state construction and the step/settlement rules.

use super::{ExecData, FeatureScaler, FillModel, ProblemSpec, TraceRow};
use crate::error::{Error, Result};
use rand::Rng;
use std::sync::Arc;

/// What the agent sees at a decision time.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecState {
    /// Remaining inventory.
    pub q: u32,
    /// Remaining decisions.
    pub m: u32,
    /// Standardized market signals; missing ones are 0.
    pub signals: Vec<f64>,
    pub missing: Vec<bool>,
    /// Reference price at the episode start.
    pub s0: f64,
    /// Reference price now.
    pub s_t: f64,
    pub mid: f64,
    /// Grid row of this decision.
    pub row: usize,
}

impl ExecState {
    /// Policy input: signals followed by `q / V` and `m / H`.
    pub fn vector(&self, spec: &ProblemSpec) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.signals.len() + 2);
        self.write_vector(spec, &mut v);
        v
    }

    pub fn write_vector(&self, spec: &ProblemSpec, out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.signals);
        out.push(self.q as f64 / spec.volume as f64);
        out.push(self.m as f64 / spec.decisions as f64);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    /// Units actually sold this step.
    pub filled: u32,
    /// Cash per unit net of fee and impact; `None` when nothing filled.
    pub fill_price: Option<f64>,
    pub impact_cost: f64,
    /// Terminal liquidation cash and penalty, on the last step only.
    pub liquidation: Option<f64>,
    pub penalty: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub reward: f64,
    pub cash_delta: f64,
    pub next: ExecState,
    pub done: bool,
    pub info: StepInfo,
}

/// A running episode. Created by [`ExecEnv::reset`].
#[derive(Debug, Clone)]
pub struct Episode {
    pub start: usize,
    pub state: ExecState,
    pub cash: f64,
    pub reward_sum: f64,
    pub trace: Vec<TraceRow>,
    done: bool,
}

impl Episode {
    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Implementation shortfall of the realized cash, as a fraction.
    pub fn shortfall(&self, spec: &ProblemSpec) -> f64 {
        let base = spec.volume as f64 * self.state.s0;
        (self.cash - base) / base
    }
}

/// Uniform episode start in `[first_row, n_rows - 1 - episode_steps]`.
pub fn sample_start<R: Rng + ?Sized>(
    n_rows: usize,
    first_row: usize,
    episode_steps: usize,
    rng: &mut R,
) -> Result<usize> {
    let needed = first_row + episode_steps + 1;
    if n_rows < needed {
        return Err(Error::CaptureTooShort { have: n_rows, needed });
    }
    Ok(rng.random_range(first_row..=n_rows - 1 - episode_steps))
}

/// Additional cost of selling `a` units in one interval when the
/// participation exceeds 10% of the order.
pub fn impact_cost(a: u32, spec: &ProblemSpec, s0: f64) -> f64 {
    let v = spec.volume as f64;
    spec.impact_beta * (a as f64 / v - 0.1).max(0.0) * v * s0
}

/// Liquidate the remaining `q` at `s_t` and charge the zero-ending penalty.
/// Returns `(liquidation cash, penalty)`.
pub fn settle_terminal(q: u32, s_t: f64, spec: &ProblemSpec) -> (f64, f64) {
    let r = q as f64;
    (r * s_t, spec.penalty_alpha * r * r * s_t)
}

#[derive(Debug, Clone)]
pub struct ExecEnv {
    data: Arc<ExecData>,
    spec: ProblemSpec,
    scaler: FeatureScaler,
    interval: usize,
}

impl ExecEnv {
    pub fn new(data: Arc<ExecData>, spec: ProblemSpec, scaler: FeatureScaler) -> Result<Self> {
        spec.validate()?;
        if scaler.len() != data.n_features() {
            return Err(Error::InvalidSpec(format!(
                "scaler has {} features, data has {}",
                scaler.len(),
                data.n_features()
            )));
        }
        if matches!(spec.fill, FillModel::BookWalk) && data.bid_view(data.segments[0].first_row).is_none() {
            return Err(Error::InvalidSpec("book-walk fills need bid levels".into()));
        }
        let interval = spec.interval_steps();
        Ok(ExecEnv {
            data,
            spec,
            scaler,
            interval,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn data(&self) -> &Arc<ExecData> {
        &self.data
    }

    pub fn scaler(&self) -> &FeatureScaler {
        &self.scaler
    }

    pub fn n_signals(&self) -> usize {
        self.data.n_features()
    }

    pub fn state_dim(&self) -> usize {
        self.n_signals() + 2
    }

    pub fn n_actions(&self) -> usize {
        self.spec.volume as usize + 1
    }

    /// Uniform over all admissible starts of all segments.
    pub fn sample_start<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        let steps = self.spec.episode_steps();
        let n = self.data.n_starts(steps);
        if n == 0 {
            return Err(Error::CaptureTooShort {
                have: self.data.segments.iter().map(|s| s.end - s.first_row).max().unwrap_or(0),
                needed: steps + 1,
            });
        }
        Ok(self.data.nth_start(steps, rng.random_range(0..n)).expect("index below count"))
    }

    pub fn build_state(&self, row: usize, q: u32, m: u32, s0: f64) -> ExecState {
        let mut signals = Vec::with_capacity(self.n_signals());
        let mut missing = Vec::with_capacity(self.n_signals());
        self.scaler.apply(self.data.raw_row(row), &mut signals, &mut missing);
        ExecState {
            q,
            m,
            signals,
            missing,
            s0,
            s_t: self.data.price[row],
            mid: self.data.mid[row],
            row,
        }
    }

    pub fn reset(&self, start: usize) -> Result<Episode> {
        self.reset_at(start, self.spec.volume, self.spec.decisions)
    }

    /// Start a partial episode at `row` holding `q` units with `m` decisions
    /// left. Rewards keep the `V * S_0` normalization with `S_0` the price
    /// at `row`.
    pub fn reset_at(&self, row: usize, q: u32, m: u32) -> Result<Episode> {
        let steps = m as usize * self.interval;
        let fits = self
            .data
            .segments
            .iter()
            .any(|s| row >= s.first_row && row + steps < s.end);
        if m == 0 || m > self.spec.decisions || q > self.spec.volume || !fits {
            return Err(Error::CaptureTooShort {
                have: self.data.len(),
                needed: row + steps + 1,
            });
        }
        let s0 = self.data.price[row];
        Ok(Episode {
            start: row,
            state: self.build_state(row, q, m, s0),
            cash: 0.0,
            reward_sum: 0.0,
            trace: Vec::with_capacity(m as usize),
            done: false,
        })
    }

    /// Sell `a` units at the current decision and advance one interval.
    pub fn step(&self, ep: &mut Episode, a: u32) -> Result<StepResult> {
        if ep.done {
            return Err(Error::EpisodeDone);
        }
        let st = &ep.state;
        if a > st.q {
            return Err(Error::Oversell {
                requested: a,
                remaining: st.q,
            });
        }
        let spec = &self.spec;
        let (s0, s_t) = (st.s0, st.s_t);
        let (filled, gross) = self.fill(st.row, s_t, a);
        let fee = spec.fee * gross;
        let impact = if spec.impact_enabled && filled > 0 {
            impact_cost(filled, spec, s0)
        } else {
            0.0
        };
        let proceeds = gross - fee - impact;

        let q_next = st.q - filled;
        let m_next = st.m - 1;
        let next_row = st.row + self.interval;
        let s_next = self.data.price[next_row];
        let scale = spec.volume as f64 * s0;
        let mut reward = (q_next as f64 * (s_next - s_t) + (gross - filled as f64 * s_t) - fee - impact) / scale;
        let mut cash_delta = proceeds;

        let done = m_next == 0;
        let (mut liquidation, mut penalty) = (None, None);
        if done {
            let (cash, z) = settle_terminal(q_next, s_next, spec);
            reward -= z / scale;
            cash_delta += cash - z;
            liquidation = Some(cash);
            penalty = Some(z);
        }

        let next = self.build_state(next_row, q_next, m_next, s0);
        ep.trace.push(TraceRow {
            step: spec.decisions - st.m,
            grid_ts: self.data.grid_ts[st.row],
            mid: st.mid,
            price: s_t,
            q: st.q,
            action: a,
            filled,
            reward,
            cash: ep.cash + cash_delta,
        });
        ep.cash += cash_delta;
        ep.reward_sum += reward;
        ep.done = done;
        ep.state = next.clone();
        Ok(StepResult {
            reward,
            cash_delta,
            next,
            done,
            info: StepInfo {
                filled,
                fill_price: (filled > 0).then(|| proceeds / filled as f64),
                impact_cost: impact,
                liquidation,
                penalty,
            },
        })
    }

    /// Units sold and gross proceeds before fee and impact.
    fn fill(&self, row: usize, s_t: f64, a: u32) -> (u32, f64) {
        if a == 0 {
            return (0, 0.0);
        }
        match self.spec.fill {
            FillModel::QuoteFill => (a, a as f64 * s_t),
            FillModel::LinearImpact { k } => (a, a as f64 * (s_t - k * a as f64)),
            FillModel::BookWalk => {
                let Some(book) = self.data.bid_view(row) else {
                    return (0, 0.0);
                };
                // Inventory is whole units: sell only what the ladder can absorb
                // in full units and keep the rest.
                let (fill, _) = book.fill_market_sell(a as f64);
                let units = (fill.filled_qty + 1e-9).floor().min(a as f64) as u32;
                if units == a {
                    return (a, fill.notional);
                }
                let (fill, _) = book.fill_market_sell(units as f64);
                (units, fill.notional)
            }
        }
    }

    /// Run one episode from `start` with `policy` choosing each action.
    pub fn run<P>(&self, start: usize, mut policy: P) -> Result<Episode>
    where
        P: FnMut(&ExecState) -> Result<u32>,
    {
        let mut ep = self.reset(start)?;
        while !ep.is_done() {
            let a = policy(&ep.state)?;
            self.step(&mut ep, a)?;
        }
        Ok(ep)
    }
}
