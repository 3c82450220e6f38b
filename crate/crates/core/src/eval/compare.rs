//! Paired multi-policy evaluation.

use super::{gain, ExecPolicy};
use crate::error::{Error, Result};
use crate::exec::{ExecEnv, TraceRow};
use crate::util::{mean, variance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::io::{self, Write};

/// A named policy with the environment it observes.
pub struct Arm<'a> {
    pub name: String,
    pub env: &'a ExecEnv,
    pub policy: &'a dyn ExecPolicy,
}

impl<'a> Arm<'a> {
    pub fn new(name: impl Into<String>, env: &'a ExecEnv, policy: &'a dyn ExecPolicy) -> Self {
        Arm {
            name: name.into(),
            env,
            policy,
        }
    }
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyRow {
    pub policy: String,
    #[serde(rename = "IS_mean_bps")]
    pub is_mean_bps: f64,
    /// Standard deviation of per-episode IS, in bps.
    #[serde(rename = "IS_variance_bps")]
    pub is_std_bps: f64,
    /// Variance of per-episode IS, in bps squared.
    #[serde(rename = "IS_variance_bps2")]
    pub is_variance_bps2: f64,
    #[serde(rename = "Gain_bps")]
    pub gain_bps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub seed: u64,
    pub starts: Vec<usize>,
    pub rows: Vec<PolicyRow>,
    /// Per policy, per episode IS in bps, ordered by episode.
    pub is_bps: Vec<Vec<f64>>,
    /// Per policy, the traces of the first episodes kept.
    pub traces: Vec<Vec<Vec<TraceRow>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// `counts[policy][bin]`.
    pub counts: Vec<Vec<usize>>,
}

/// Evaluate every arm on the same `n` episode starts. Gains are relative
/// to arm `baseline`. Traces of the first `keep_traces` episodes are kept.
pub fn compare(arms: &[Arm<'_>], baseline: usize, n: usize, seed: u64, keep_traces: usize) -> Result<RunReport> {
    if arms.is_empty() || baseline >= arms.len() {
        return Err(Error::InvalidSpec("compare needs a baseline arm".into()));
    }
    let spec = arms[0].env.spec();
    for a in arms {
        if a.env.spec() != spec {
            return Err(Error::InvalidSpec(format!("arm {} uses a different problem", a.name)));
        }
        if a.env.data().segments != arms[0].env.data().segments {
            return Err(Error::InvalidSpec(format!("arm {} uses a different market", a.name)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts = (0..n).map(|_| arms[0].env.sample_start(&mut rng)).collect::<Result<Vec<_>>>()?;

    let mut is_bps = Vec::with_capacity(arms.len());
    let mut traces = Vec::with_capacity(arms.len());
    for arm in arms {
        let eps: Vec<_> = starts
            .par_iter()
            .map(|&s| arm.env.run(s, |st| arm.policy.act(st, spec)))
            .collect::<Result<_>>()?;
        is_bps.push(eps.iter().map(|e| e.shortfall(spec) * 1e4).collect::<Vec<f64>>());
        traces.push(eps.into_iter().take(keep_traces).map(|e| e.trace).collect());
    }
    let base_mean = mean(&is_bps[baseline]);
    let rows = arms
        .iter()
        .zip(&is_bps)
        .map(|(arm, is)| {
            let m = mean(is);
            let var = variance(is);
            PolicyRow {
                policy: arm.name.clone(),
                is_mean_bps: m,
                is_std_bps: var.sqrt(),
                is_variance_bps2: var,
                gain_bps: gain(m * 1e-4, base_mean * 1e-4),
            }
        })
        .collect();
    Ok(RunReport {
        seed,
        starts,
        rows,
        is_bps,
        traces,
    })
}

impl RunReport {
    /// Equal-width bins spanning every policy's IS.
    pub fn histogram(&self, n_bins: usize) -> Histogram {
        let n_bins = n_bins.max(1);
        let all = self.is_bps.iter().flatten();
        let lo = all.clone().cloned().fold(f64::INFINITY, f64::min);
        let hi = all.cloned().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if lo.is_finite() && hi > lo {
            (lo, hi)
        } else if lo.is_finite() {
            (lo - 0.5, lo + 0.5)
        } else {
            (0.0, 1.0)
        };
        let w = (hi - lo) / n_bins as f64;
        let edges: Vec<f64> = (0..=n_bins).map(|i| lo + w * i as f64).collect();
        let counts = self
            .is_bps
            .iter()
            .map(|is| {
                let mut c = vec![0usize; n_bins];
                for &x in is {
                    let b = (((x - lo) / w).floor() as isize).clamp(0, n_bins as isize - 1);
                    c[b as usize] += 1;
                }
                c
            })
            .collect();
        Histogram { edges, counts }
    }

    pub fn table_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows).expect("rows serialize")
    }

    pub fn write_histogram_csv<W: Write>(&self, mut w: W, n_bins: usize) -> io::Result<()> {
        let h = self.histogram(n_bins);
        writeln!(w, "bin_left,bin_right,policy,count")?;
        for (row, counts) in self.rows.iter().zip(&h.counts) {
            for (b, c) in counts.iter().enumerate() {
                writeln!(w, "{},{},{},{}", h.edges[b], h.edges[b + 1], row.policy, c)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::Twap;
    use super::*;
    use crate::capture::{resample, venues_of};
    use crate::exec::{ExecData, FeatureScaler, ProblemSpec};
    use crate::signals::{compute_features, FeatureParams, MarketTable};
    use crate::synth::flat_market;
    use crate::{Scope, GRID_NS};
    use std::sync::Arc;

    fn flat_env() -> ExecEnv {
        let recs = flat_market(100.0, 120_000_000_000);
        let venues = venues_of(&recs);
        let frames = resample(&recs, &venues, GRID_NS).unwrap();
        let table = MarketTable::from_frames(frames.into_iter().map(Ok), venues.clone(), &[]).unwrap();
        let feats = compute_features(&table, &FeatureParams::default());
        let data = ExecData::build(&table, &feats, &venues[0], Scope::Single, 0).unwrap();
        let n = data.n_features();
        ExecEnv::new(Arc::new(data), ProblemSpec::default(), FeatureScaler::identity(n)).unwrap()
    }

    #[test]
    fn twap_alone_has_zero_gain_and_histogram_mass() {
        let env = flat_env();
        let arms = [Arm::new("TWAP", &env, &Twap)];
        let r = compare(&arms, 0, 50, 3, 1).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].gain_bps, 0.0);
        assert!((r.rows[0].is_mean_bps - -3.0).abs() < 1e-9);
        let h = r.histogram(10);
        assert_eq!(h.counts[0].iter().sum::<usize>(), 50);
        assert_eq!(r.traces[0].len(), 1);
    }

    #[test]
    fn same_seed_same_report() {
        let env = flat_env();
        let dump = |s: &crate::exec::ExecState, _: &ProblemSpec| Ok(s.q);
        let arms = [Arm::new("TWAP", &env, &Twap), Arm::new("dump", &env, &dump)];
        let a = compare(&arms, 0, 20, 9, 0).unwrap();
        let b = compare(&arms, 0, 20, 9, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.table_json(), b.table_json());
    }
}
