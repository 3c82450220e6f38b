//! Feature definitions. All windows are trailing, so a value at row `t`
//! depends only on rows `<= t`. Missing inputs propagate as `None`.

use super::table::MarketTable;
use crate::capture::VenueId;
use crate::util::{RollingMean, RollingMinMax};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureScope {
    Venue(VenueId),
    Cross,
}

/// A named feature on the grid. Missing values are `None`.
#[derive(Debug, Clone)]
pub struct FeatureSeries {
    pub name: String,
    pub scope: FeatureScope,
    pub grid_ts: Arc<[i64]>,
    pub values: Vec<Option<f64>>,
}

impl FeatureSeries {
    pub fn new(name: impl Into<String>, scope: FeatureScope, grid_ts: Arc<[i64]>, values: Vec<Option<f64>>) -> Self {
        assert_eq!(grid_ts.len(), values.len(), "feature length must match grid");
        FeatureSeries {
            name: name.into(),
            scope,
            grid_ts,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Order flow imbalance of one window: taker buy minus taker sell volume.
pub fn oim(buy_volume: f64, sell_volume: f64) -> f64 {
    buy_volume - sell_volume
}

/// OIM of venue `vi` per row, aggregated over the trailing `window` rows
/// (`window = 1` is the single 10ms interval). Missing where the venue is
/// absent.
pub fn oim_series(table: &MarketTable, vi: usize, window: usize) -> Vec<Option<f64>> {
    let c = &table.cols[vi];
    let window = window.max(1);
    let mut out = Vec::with_capacity(table.len());
    let mut acc = 0.0;
    for t in 0..table.len() {
        acc += oim(c.buy_volume[t], c.sell_volume[t]);
        if t >= window {
            acc -= oim(c.buy_volume[t - window], c.sell_volume[t - window]);
        }
        // exact re-sum keeps the running total from drifting
        if t % 4096 == 0 && window > 1 {
            let lo = (t + 1).saturating_sub(window);
            acc = (lo..=t).map(|k| oim(c.buy_volume[k], c.sell_volume[k])).sum();
        }
        out.push(c.present[t].then_some(if window == 1 {
            oim(c.buy_volume[t], c.sell_volume[t])
        } else {
            acc
        }));
    }
    out
}

/// Min-max normalised OIM: `sign(x) * (|x| - min|x|) / (max|x| - min|x|)`
/// with min and max over the trailing `window` observations (current one
/// included). Needs two observations; a flat window yields 0.
pub fn oimn(oim: &[Option<f64>], window: usize) -> Vec<Option<f64>> {
    let mut mm = RollingMinMax::new(window.max(2));
    oim.iter()
        .map(|x| {
            let x = (*x)?;
            mm.push(x.abs());
            if mm.len() < 2 {
                return None;
            }
            let (lo, hi) = (mm.min()?, mm.max()?);
            if hi <= lo {
                return Some(0.0);
            }
            Some(x.signum() * (x.abs() - lo) / (hi - lo))
        })
        .collect()
}

/// Sum across venues, skipping missing entries. `None` when every venue is
/// missing. Also returns the number of skipped venues per row.
pub fn cross_sum(parts: &[&[Option<f64>]]) -> (Vec<Option<f64>>, Vec<u8>) {
    let n = parts.first().map_or(0, |p| p.len());
    let mut out = Vec::with_capacity(n);
    let mut skipped = Vec::with_capacity(n);
    for t in 0..n {
        let mut sum = 0.0;
        let mut seen = 0;
        for p in parts {
            if let Some(v) = p[t] {
                sum += v;
                seen += 1;
            }
        }
        skipped.push((parts.len() - seen) as u8);
        out.push((seen > 0).then_some(sum));
    }
    (out, skipped)
}

/// Book imbalance `(B - A) / (B + A)` of cumulative top-5 depths. `None`
/// for an empty book.
pub fn imb(bid_depth: f64, ask_depth: f64) -> Option<f64> {
    let b = if bid_depth.is_finite() { bid_depth } else { 0.0 };
    let a = if ask_depth.is_finite() { ask_depth } else { 0.0 };
    let total = b + a;
    (total > 0.0).then(|| (b - a) / total)
}

pub fn imb_series(table: &MarketTable, vi: usize) -> Vec<Option<f64>> {
    let c = &table.cols[vi];
    (0..table.len())
        .map(|t| if c.present[t] { imb(c.bid_depth[t], c.ask_depth[t]) } else { None })
        .collect()
}

/// Cross-venue spread of `target`: sum over peers of `mid_j - mid_target`.
/// `None` when the target or every peer is missing.
pub fn spread(target: usize, mids: &[Option<f64>]) -> Option<f64> {
    let own = mids.get(target).copied().flatten()?;
    let mut sum = 0.0;
    let mut peers = 0;
    for (j, m) in mids.iter().enumerate() {
        if j == target {
            continue;
        }
        if let Some(m) = m {
            sum += m - own;
            peers += 1;
        }
    }
    (peers > 0).then_some(sum)
}

pub fn spread_series(table: &MarketTable, target: usize) -> Vec<Option<f64>> {
    let mut mids = vec![None; table.venues.len()];
    (0..table.len())
        .map(|t| {
            for (j, c) in table.cols.iter().enumerate() {
                mids[j] = c.mid[t].is_finite().then_some(c.mid[t]);
            }
            spread(target, &mids)
        })
        .collect()
}

/// Spread minus its trailing mean over the last `window` observations
/// (current one included).
pub fn spread_norm(spread: &[Option<f64>], window: usize) -> Vec<Option<f64>> {
    let mut rm = RollingMean::new(window.max(1));
    spread
        .iter()
        .map(|s| {
            let s = (*s)?;
            rm.push(s);
            Some(s - rm.mean()?)
        })
        .collect()
}

/// Return over the next `h` rows in basis points. The last `h` rows and
/// rows with a missing endpoint are `None`.
pub fn future_return(mid: &[f64], h: usize) -> Vec<Option<f64>> {
    (0..mid.len())
        .map(|t| {
            let later = *mid.get(t + h)?;
            let now = mid[t];
            (now.is_finite() && later.is_finite() && now > 0.0).then(|| 1e4 * (later - now) / now)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureParams {
    /// Trailing window for OIMN min/max and the spread rolling mean, ms.
    pub norm_window_ms: u64,
    /// Aggregation window of OIM, ms (10 = one grid interval).
    pub oim_window_ms: u64,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams {
            norm_window_ms: 30_000,
            oim_window_ms: 10,
        }
    }
}

impl FeatureParams {
    pub fn norm_window(&self) -> usize {
        ((self.norm_window_ms as i64 * 1_000_000 / crate::GRID_NS) as usize).max(1)
    }

    pub fn oim_window(&self) -> usize {
        ((self.oim_window_ms as i64 * 1_000_000 / crate::GRID_NS) as usize).max(1)
    }
}

/// The standard feature set over every venue of a table.
#[derive(Debug, Clone)]
pub struct MarketFeatures {
    pub grid_ts: Arc<[i64]>,
    pub venues: Vec<VenueId>,
    pub oim: Vec<Vec<Option<f64>>>,
    pub oimn: Vec<Vec<Option<f64>>>,
    pub imb: Vec<Vec<Option<f64>>>,
    pub oimn_cross: Vec<Option<f64>>,
    pub imb_cross: Vec<Option<f64>>,
    pub spread: Vec<Vec<Option<f64>>>,
    pub spread_norm: Vec<Vec<Option<f64>>>,
}

impl MarketFeatures {
    pub fn series(&self, name: &str, venue: Option<usize>) -> Option<FeatureSeries> {
        let grid = self.grid_ts.clone();
        let scoped = |vals: &Vec<Vec<Option<f64>>>, vi: usize| {
            FeatureSeries::new(name, FeatureScope::Venue(self.venues[vi].clone()), grid.clone(), vals[vi].clone())
        };
        match (name, venue) {
            ("oim", Some(v)) => Some(scoped(&self.oim, v)),
            ("oimn", Some(v)) => Some(scoped(&self.oimn, v)),
            ("imb", Some(v)) => Some(scoped(&self.imb, v)),
            ("spread", Some(v)) => Some(scoped(&self.spread, v)),
            ("spread_norm", Some(v)) => Some(scoped(&self.spread_norm, v)),
            ("oimn_cross", _) => Some(FeatureSeries::new(name, FeatureScope::Cross, grid, self.oimn_cross.clone())),
            ("imb_cross", _) => Some(FeatureSeries::new(name, FeatureScope::Cross, grid, self.imb_cross.clone())),
            _ => None,
        }
    }
}

pub fn compute_features(table: &MarketTable, params: &FeatureParams) -> MarketFeatures {
    let n = table.venues.len();
    let w = params.norm_window();
    let oim: Vec<_> = (0..n).map(|v| oim_series(table, v, params.oim_window())).collect();
    let oimn_v: Vec<_> = oim.iter().map(|s| oimn(s, w)).collect();
    let imb_v: Vec<_> = (0..n).map(|v| imb_series(table, v)).collect();
    let (oimn_cross, _) = cross_sum(&oimn_v.iter().map(|v| v.as_slice()).collect::<Vec<_>>());
    let (imb_cross, _) = cross_sum(&imb_v.iter().map(|v| v.as_slice()).collect::<Vec<_>>());
    let spread_v: Vec<_> = (0..n).map(|v| spread_series(table, v)).collect();
    let spread_norm_v = spread_v.iter().map(|s| spread_norm(s, w)).collect();
    MarketFeatures {
        grid_ts: table.grid_ts.clone(),
        venues: table.venues.clone(),
        oim,
        oimn: oimn_v,
        imb: imb_v,
        oimn_cross,
        imb_cross,
        spread: spread_v,
        spread_norm: spread_norm_v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn oim_examples() {
        assert_eq!(oim(10.0, 10.0), 0.0);
        assert_eq!(oim(10.0, 4.0), 6.0);
        assert_eq!(oim(0.0, 0.0), 0.0);
    }

    #[test]
    fn oimn_hand_example() {
        let out = oimn(&[Some(2.0), Some(6.0), Some(-4.0)], 3);
        assert_eq!(out[0], None);
        assert_eq!(out[1], Some(1.0));
        assert_eq!(out[2], Some(-0.5));
    }

    #[test]
    fn oimn_boundaries_and_degenerate_window() {
        let out = oimn(&[Some(-3.0), Some(1.0), Some(-3.0)], 10);
        assert_eq!(out[2], Some(-1.0));
        let out = oimn(&[Some(5.0), Some(1.0)], 10);
        assert_eq!(out[1], Some(0.0));
        let flat = oimn(&[Some(2.0), Some(-2.0), Some(2.0)], 10);
        assert_eq!(flat[1..], [Some(0.0), Some(0.0)]);
    }

    #[test]
    fn cross_sum_examples() {
        let a = [Some(0.5)];
        assert_eq!(cross_sum(&[&a]).0, vec![Some(0.5)]);
        let (b, c, d) = ([Some(0.5)], [Some(-0.2)], [Some(0.1)]);
        let s = cross_sum(&[&b, &c, &d]).0[0].unwrap();
        assert!((s - 0.4).abs() < 1e-15);
        let m: [Option<f64>; 1] = [None];
        let (s, skipped) = cross_sum(&[&m, &m]);
        assert_eq!((s[0], skipped[0]), (None, 2));
        let (x, y, z) = ([Some(0.5)], [Some(0.5)], [Some(-1.0)]);
        assert_eq!(cross_sum(&[&x, &y, &z]).0[0], Some(0.0));
        let (p, q) = ([Some(0.2)], [Some(0.3)]);
        assert_eq!(cross_sum(&[&p, &q]).0[0], Some(0.5));
    }

    #[test]
    fn imb_examples() {
        assert_eq!(imb(5.0, 5.0), Some(0.0));
        assert_eq!(imb(3.0, 0.0), Some(1.0));
        assert_eq!(imb(30.0, 10.0), Some(0.5));
        assert_eq!(imb(0.0, 0.0), None);
    }

    #[test]
    fn spread_examples() {
        assert_eq!(spread(0, &[Some(100.0), Some(100.0), Some(100.0)]), Some(0.0));
        let s = spread(0, &[Some(100.0), Some(100.2), Some(100.3)]).unwrap();
        assert!((s - 0.5).abs() < 1e-9);
        assert_eq!(spread(0, &[Some(100.0)]), None);
        assert_eq!(spread(0, &[Some(100.0), None]), None);
    }

    #[test]
    fn spread_norm_examples() {
        let out = spread_norm(&[Some(1.0), Some(1.0), Some(4.0)], 3);
        assert_eq!(out[2], Some(2.0));
        let c = spread_norm(&[Some(0.7); 10], 4);
        assert!(c.iter().all(|v| v.unwrap().abs() < 1e-12));
        let w1 = spread_norm(&[Some(1.0), Some(-3.0), Some(8.0)], 1);
        assert!(w1.iter().all(|v| *v == Some(0.0)));
    }

    #[test]
    fn future_return_examples() {
        assert_eq!(future_return(&[100.0, 100.0, 100.0], 1), vec![Some(0.0), Some(0.0), None]);
        let r = future_return(&[100.0, 100.01], 1)[0].unwrap();
        assert!((r - 1.0).abs() < 1e-9);
        assert_eq!(future_return(&[100.0, 101.0, 102.0], 2)[1..], [None, None]);
    }

    proptest! {
        #[test]
        fn oimn_in_unit_interval(xs in prop::collection::vec(prop::option::of(-50.0f64..50.0), 1..200), w in 2usize..30) {
            for v in oimn(&xs, w).into_iter().flatten() {
                prop_assert!((-1.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn imb_in_unit_interval(b in 0.0f64..100.0, a in 0.0f64..100.0) {
            if let Some(v) = imb(b, a) {
                prop_assert!((-1.0..=1.0).contains(&v));
            }
        }
    }
}
