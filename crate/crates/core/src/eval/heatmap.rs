//! Aggressiveness of a policy over remaining time and remaining volume.
//!
//! For every market state visited at a decision time, the policy is probed
//! at each `(m, q)` combination and `a / q` is averaged per cell. Market
//! states are split by a designated standardized signal into Increase
//! (`> +1`), Decrease (`< -1`) and Unchanged.

use super::ExecPolicy;
use crate::error::Result;
use crate::exec::{ExecEnv, ExecState};
use rayon::prelude::*;
use std::io::{self, Write};

pub const HEATMAP_BUCKETS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalBucket {
    Increase,
    Unchanged,
    Decrease,
}

impl SignalBucket {
    pub const ALL: [SignalBucket; 3] = [SignalBucket::Increase, SignalBucket::Unchanged, SignalBucket::Decrease];

    pub fn of(signal: f64) -> Self {
        if signal > 1.0 {
            SignalBucket::Increase
        } else if signal < -1.0 {
            SignalBucket::Decrease
        } else {
            SignalBucket::Unchanged
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SignalBucket::Increase => "increase",
            SignalBucket::Unchanged => "unchanged",
            SignalBucket::Decrease => "decrease",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Bucket of a fraction in `(0, 1]`: `ceil(x * 10) - 1`.
fn bucket(x: f64) -> usize {
    ((x * HEATMAP_BUCKETS as f64).ceil() as usize).clamp(1, HEATMAP_BUCKETS) - 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapGrid {
    pub bucket: SignalBucket,
    /// `sum[time][volume]` of `a / q`.
    sum: [[f64; HEATMAP_BUCKETS]; HEATMAP_BUCKETS],
    count: [[u64; HEATMAP_BUCKETS]; HEATMAP_BUCKETS],
    /// Market states that fell in this bucket.
    pub states: usize,
}

impl HeatmapGrid {
    fn new(bucket: SignalBucket) -> Self {
        HeatmapGrid {
            bucket,
            sum: [[0.0; HEATMAP_BUCKETS]; HEATMAP_BUCKETS],
            count: [[0; HEATMAP_BUCKETS]; HEATMAP_BUCKETS],
            states: 0,
        }
    }

    fn merge(&mut self, other: &HeatmapGrid) {
        for t in 0..HEATMAP_BUCKETS {
            for v in 0..HEATMAP_BUCKETS {
                self.sum[t][v] += other.sum[t][v];
                self.count[t][v] += other.count[t][v];
            }
        }
        self.states += other.states;
    }

    /// Mean aggressiveness of a cell; `None` when empty.
    pub fn cell(&self, time: usize, volume: usize) -> Option<f64> {
        let c = self.count[time][volume];
        (c > 0).then(|| self.sum[time][volume] / c as f64)
    }

    /// Mean over all probes in the grid.
    pub fn global_mean(&self) -> Option<f64> {
        let c: u64 = self.count.iter().flatten().sum();
        let s: f64 = self.sum.iter().flatten().sum();
        (c > 0).then(|| s / c as f64)
    }

    /// For each volume bucket, how many times aggressiveness increases from
    /// one nonempty time bucket to the next larger one.
    pub fn time_inversions(&self, tol: f64) -> Vec<usize> {
        (0..HEATMAP_BUCKETS)
            .map(|v| {
                let col: Vec<f64> = (0..HEATMAP_BUCKETS).filter_map(|t| self.cell(t, v)).collect();
                col.windows(2).filter(|w| w[1] > w[0] + tol).count()
            })
            .collect()
    }
}

/// Probe `policy` at the decision rows of the given episode starts.
/// `signal` indexes the standardized signal that selects the bucket.
pub fn action_heatmap(env: &ExecEnv, policy: &dyn ExecPolicy, starts: &[usize], signal: usize) -> Result<Vec<HeatmapGrid>> {
    let spec = env.spec();
    let interval = spec.interval_steps();
    let rows: Vec<usize> = starts
        .iter()
        .flat_map(|&s| (0..spec.decisions as usize).map(move |k| s + k * interval))
        .collect();
    let partial: Vec<Result<Vec<HeatmapGrid>>> = rows
        .par_chunks(64)
        .map(|chunk| {
            let mut grids: Vec<HeatmapGrid> = SignalBucket::ALL.iter().map(|&b| HeatmapGrid::new(b)).collect();
            for &row in chunk {
                let base = env.build_state(row, spec.volume, spec.decisions, env.data().price[row]);
                let b = SignalBucket::of(base.signals[signal]);
                let g = &mut grids[b.index()];
                g.states += 1;
                for m in 1..=spec.decisions {
                    for q in 1..=spec.volume {
                        let st = ExecState { q, m, ..base.clone() };
                        let a = policy.act(&st, spec)?;
                        let (tb, vb) = (
                            bucket(m as f64 / spec.decisions as f64),
                            bucket(q as f64 / spec.volume as f64),
                        );
                        g.sum[tb][vb] += a as f64 / q as f64;
                        g.count[tb][vb] += 1;
                    }
                }
            }
            Ok(grids)
        })
        .collect();
    let mut out: Vec<HeatmapGrid> = SignalBucket::ALL.iter().map(|&b| HeatmapGrid::new(b)).collect();
    for p in partial {
        for (o, g) in out.iter_mut().zip(p?) {
            o.merge(&g);
        }
    }
    Ok(out)
}

pub fn write_heatmap_csv<W: Write>(mut w: W, grids: &[HeatmapGrid]) -> io::Result<()> {
    writeln!(w, "time_bucket,volume_bucket,signal_bucket,aggressiveness")?;
    for g in grids {
        for t in 0..HEATMAP_BUCKETS {
            for v in 0..HEATMAP_BUCKETS {
                let cell = g.cell(t, v).map(|x| x.to_string()).unwrap_or_default();
                writeln!(w, "{t},{v},{},{cell}", g.bucket.as_str())?;
            }
        }
    }
    Ok(())
}
