//! Baselines, shortfall metrics and policy comparison reports.

mod compare;
mod heatmap;

pub use compare::{compare, Arm, Histogram, PolicyRow, RunReport};
pub use heatmap::{action_heatmap, write_heatmap_csv, HeatmapGrid, SignalBucket, HEATMAP_BUCKETS};

use crate::error::Result;
use crate::exec::{ExecState, ProblemSpec};
use crate::ppo::PolicyParams;

/// Units per decision for an even split; the remainder goes to the
/// earliest decisions.
pub fn twap_schedule(spec: &ProblemSpec) -> Vec<u32> {
    let (v, h) = (spec.volume, spec.decisions);
    (0..h).map(|i| v / h + u32::from(i < v % h)).collect()
}

/// Total cash: fills `(units, net price per unit)` plus terminal liquidation
/// of `remaining` units at `s_t`, minus the zero-ending penalty.
pub fn cash(fills: &[(u32, f64)], remaining: u32, s_t: f64, spec: &ProblemSpec) -> f64 {
    let traded: f64 = fills.iter().map(|&(x, p)| x as f64 * p).sum();
    let (liq, z) = crate::exec::settle_terminal(remaining, s_t, spec);
    traded + liq - z
}

/// `(cash - V p0) / (V p0)` as a fraction.
pub fn implementation_shortfall(cash: f64, volume: u32, p0: f64) -> f64 {
    let base = volume as f64 * p0;
    (cash - base) / base
}

/// Shortfall improvement over the baseline, in bps.
pub fn gain(is_model: f64, is_twap: f64) -> f64 {
    (is_model - is_twap) * 1e4
}

/// Something that picks the number of units to sell.
pub trait ExecPolicy: Sync {
    fn act(&self, state: &ExecState, spec: &ProblemSpec) -> Result<u32>;
}

/// Sells the TWAP schedule regardless of the market, capped at inventory.
#[derive(Debug, Clone, Copy, Default)]
pub struct Twap;

impl ExecPolicy for Twap {
    fn act(&self, state: &ExecState, spec: &ProblemSpec) -> Result<u32> {
        let k = (spec.decisions - state.m) as usize;
        Ok(twap_schedule(spec)[k].min(state.q))
    }
}

/// A trained actor acting greedily.
#[derive(Debug, Clone)]
pub struct Greedy<'a>(pub &'a PolicyParams);

impl ExecPolicy for Greedy<'_> {
    fn act(&self, state: &ExecState, spec: &ProblemSpec) -> Result<u32> {
        let a = self.0.greedy(&state.vector(spec), state.q as usize + 1)?;
        Ok(a as u32)
    }
}

impl<F> ExecPolicy for F
where
    F: Fn(&ExecState, &ProblemSpec) -> Result<u32> + Sync,
{
    fn act(&self, state: &ExecState, spec: &ProblemSpec) -> Result<u32> {
        self(state, spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(v: u32, h: u32) -> ProblemSpec {
        ProblemSpec {
            volume: v,
            decisions: h,
            ..Default::default()
        }
    }

    #[test]
    fn twap_examples() {
        assert_eq!(twap_schedule(&spec(50, 10)), vec![5; 10]);
        assert_eq!(twap_schedule(&spec(10, 10)), vec![1; 10]);
        assert_eq!(twap_schedule(&spec(52, 10)), vec![6, 6, 5, 5, 5, 5, 5, 5, 5, 5]);
    }

    #[test]
    fn cash_examples() {
        let s = ProblemSpec::default();
        assert_eq!(cash(&[(50, 100.0)], 0, 100.0, &s), 5000.0);
        let p = 100.0 * (1.0 - 3e-4);
        let c = cash(&vec![(5, p); 10], 0, 100.0, &s);
        assert!((c - 50.0 * p).abs() < 1e-9);
        assert!((cash(&[], 5, 100.0, &s) - 450.0).abs() < 1e-12);
    }

    #[test]
    fn shortfall_and_gain_examples() {
        assert_eq!(implementation_shortfall(5000.0, 50, 100.0), 0.0);
        assert!((implementation_shortfall(0.999 * 5000.0, 50, 100.0) * 1e4 - -10.0).abs() < 1e-9);
        assert_eq!(gain(-3.1e-4, -3.1e-4), 0.0);
        assert!((gain(-2.42e-4, -3.10e-4) - 0.68).abs() < 1e-9);
        assert!((gain(-2.78e-4, -3.10e-4) - 0.32).abs() < 1e-9);
    }
}
