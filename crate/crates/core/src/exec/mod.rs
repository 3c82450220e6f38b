//! Discrete sell-side execution MDP.
//!
//! An episode sells `volume` units over `horizon_s` seconds with `decisions`
//! equally spaced market orders. The execution reference price `S_t` is the
//! target venue's best bid: the price a market sell of one unit would
//! receive. Rewards are the relative P&L of holding the remaining inventory
//! across one interval minus fees, so that their episode sum equals the
//! implementation shortfall of the realized cash.

mod data;
mod env;
mod trace;

pub use data::{ExecData, FeatureScaler, Segment};
pub use env::{impact_cost, sample_start, settle_terminal, Episode, ExecEnv, ExecState, StepInfo, StepResult};
pub use trace::{write_traces_csv, TraceRow};

use crate::error::{Error, Result};
use crate::GRID_NS;
use serde::{Deserialize, Serialize};

/// How a market sell of `a` units is priced before fees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FillModel {
    /// Every unit at the current best bid.
    QuoteFill,
    /// Walk the visible bid ladder; depth beyond the top five stays unsold.
    BookWalk,
    /// `S_t - k * a`: execution price linear in the per-interval quantity.
    LinearImpact { k: f64 },
}

/// Which market features the agent observes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Target-venue order flow and book imbalance.
    Single,
    /// The single-venue features plus cross-venue sums and the spread.
    Cross,
}

impl Scope {
    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Single => "single",
            Scope::Cross => "cross",
        }
    }

    pub fn feature_names(self) -> &'static [&'static str] {
        match self {
            Scope::Single => &["oimn", "imb"],
            Scope::Cross => &["oimn", "imb", "oimn_cross", "imb_cross", "spread_norm_bps"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemSpec {
    /// Units to sell, `V`.
    pub volume: u32,
    /// Execution horizon `T`, seconds.
    pub horizon_s: f64,
    /// Decision count `H`; one decision every `T / H` seconds.
    pub decisions: u32,
    /// Proportional fee charged on every fill.
    pub fee: f64,
    /// Charge `impact_beta * max(0, a / V - 0.1) * V * S_0` per order.
    pub impact_enabled: bool,
    pub impact_beta: f64,
    /// Quadratic charge on inventory left at the horizon.
    pub penalty_alpha: f64,
    pub fill: FillModel,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        ProblemSpec {
            volume: 50,
            horizon_s: 50.0,
            decisions: 10,
            fee: 3e-4,
            impact_enabled: false,
            impact_beta: 1e-5,
            penalty_alpha: 0.02,
            fill: FillModel::QuoteFill,
        }
    }
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        if self.volume == 0 {
            return bad("volume must be > 0");
        }
        if self.decisions == 0 {
            return bad("decisions must be >= 1");
        }
        if !(self.horizon_s > 0.0) {
            return bad("horizon_s must be > 0");
        }
        for v in [self.fee, self.impact_beta, self.penalty_alpha] {
            if !(v.is_finite() && v >= 0.0) {
                return bad("fee, impact_beta and penalty_alpha must be >= 0");
            }
        }
        if let FillModel::LinearImpact { k } = self.fill {
            if !(k.is_finite() && k >= 0.0) {
                return bad("linear impact k must be >= 0");
            }
        }
        let steps = self.horizon_s * 1e9 / GRID_NS as f64 / self.decisions as f64;
        if (steps - steps.round()).abs() > 1e-9 || steps.round() < 1.0 {
            return bad("horizon_s / decisions must be a positive multiple of 10ms");
        }
        Ok(())
    }

    /// Grid steps between decisions.
    pub fn interval_steps(&self) -> usize {
        (self.horizon_s * 1e9 / GRID_NS as f64 / self.decisions as f64).round() as usize
    }

    /// Grid steps spanned by one episode.
    pub fn episode_steps(&self) -> usize {
        self.interval_steps() * self.decisions as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_problem_decides_every_five_seconds() {
        let p = ProblemSpec::default();
        p.validate().unwrap();
        assert_eq!(p.interval_steps(), 500);
        assert_eq!(p.episode_steps(), 5_000);
    }

    #[test]
    fn rejects_bad_specs() {
        let p = ProblemSpec {
            volume: 0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = ProblemSpec {
            horizon_s: 0.015,
            decisions: 1,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = ProblemSpec {
            fill: FillModel::LinearImpact { k: -1.0 },
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }
}
