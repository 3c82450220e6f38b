//! Per-venue series the execution environment reads at decision times.

use super::Scope;
use crate::capture::{Level, VenueId};
use crate::error::{Error, Result};
use crate::lob::BookView;
use crate::signals::{MarketFeatures, MarketTable};
use crate::BOOK_DEPTH;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Execution-relevant columns of one target venue plus the raw signals of
/// one scope, stored row-major with `NaN` for missing values.
#[derive(Debug, Clone)]
pub struct ExecData {
    pub grid_ts: Arc<[i64]>,
    pub venue: VenueId,
    pub scope: Scope,
    /// Best bid, forward-filled over gaps after the first quote.
    pub price: Vec<f64>,
    pub mid: Vec<f64>,
    raw: Vec<f64>,
    n_features: usize,
    bid_levels: Option<Vec<[Level; BOOK_DEPTH]>>,
    /// Independent market segments stored back to back. Episodes never
    /// cross a segment boundary.
    pub segments: Vec<Segment>,
}

/// Rows `start..end` of one market; episodes may start from `first_row`,
/// once the target is quoted and rolling feature windows are warm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub first_row: usize,
    pub end: usize,
}

impl Segment {
    /// Admissible episode starts for an episode spanning `steps` rows.
    pub fn starts(&self, steps: usize) -> std::ops::Range<usize> {
        let last = self.end.saturating_sub(steps + 1);
        if self.first_row > last || self.end < steps + 1 {
            self.first_row..self.first_row
        } else {
            self.first_row..last + 1
        }
    }
}

impl ExecData {
    /// Extract the target venue's columns. `warmup_rows` rows are skipped
    /// before episodes may start, typically the normalization window.
    pub fn build(
        table: &MarketTable,
        features: &MarketFeatures,
        target: &VenueId,
        scope: Scope,
        warmup_rows: usize,
    ) -> Result<Self> {
        let ti = table
            .venue_index(target)
            .ok_or_else(|| Error::UnknownVenue(target.to_string()))?;
        let col = &table.cols[ti];
        let first_quote = col
            .best_bid
            .iter()
            .position(|p| p.is_finite())
            .ok_or(Error::CaptureTooShort { have: 0, needed: 1 })?;
        let mut price = col.best_bid.clone();
        let mut mid = col.mid.clone();
        for t in first_quote + 1..price.len() {
            if !price[t].is_finite() {
                price[t] = price[t - 1];
            }
            if !mid[t].is_finite() {
                mid[t] = mid[t - 1];
            }
        }

        let cols: Vec<&[Option<f64>]> = match scope {
            Scope::Single => vec![&features.oimn[ti], &features.imb[ti]],
            Scope::Cross => vec![
                &features.oimn[ti],
                &features.imb[ti],
                &features.oimn_cross,
                &features.imb_cross,
                &features.spread_norm[ti],
            ],
        };
        let n_features = cols.len();
        let mut raw = Vec::with_capacity(table.len() * n_features);
        for t in 0..table.len() {
            for c in &cols {
                raw.push(c[t].unwrap_or(f64::NAN));
            }
        }
        Ok(ExecData {
            grid_ts: table.grid_ts.clone(),
            venue: target.clone(),
            scope,
            price,
            mid,
            raw,
            n_features,
            bid_levels: col.bid_levels.clone(),
            segments: vec![Segment {
                start: 0,
                first_row: first_quote.max(warmup_rows).min(table.len()),
                end: table.len(),
            }],
        })
    }

    /// Stack independent markets of the same venue and scope.
    pub fn concat(parts: Vec<ExecData>) -> Result<Self> {
        let mut it = parts.into_iter();
        let mut out = it.next().ok_or_else(|| Error::InvalidSpec("no market segments".into()))?;
        for p in it {
            if p.venue != out.venue || p.scope != out.scope {
                return Err(Error::InvalidSpec("segments differ in venue or scope".into()));
            }
            let off = out.len();
            let mut ts = out.grid_ts.to_vec();
            ts.extend_from_slice(&p.grid_ts);
            out.grid_ts = ts.into();
            out.price.extend(p.price);
            out.mid.extend(p.mid);
            out.raw.extend(p.raw);
            out.bid_levels = match (out.bid_levels.take(), p.bid_levels) {
                (Some(mut a), Some(b)) => {
                    a.extend(b);
                    Some(a)
                }
                _ => None,
            };
            out.segments.extend(p.segments.iter().map(|s| Segment {
                start: s.start + off,
                first_row: s.first_row + off,
                end: s.end + off,
            }));
        }
        Ok(out)
    }

    /// Number of admissible starts for an episode spanning `steps` rows.
    pub fn n_starts(&self, steps: usize) -> usize {
        self.segments.iter().map(|s| s.starts(steps).len()).sum()
    }

    /// The `k`-th admissible start in row order.
    pub fn nth_start(&self, steps: usize, mut k: usize) -> Option<usize> {
        for s in &self.segments {
            let r = s.starts(steps);
            if k < r.len() {
                return Some(r.start + k);
            }
            k -= r.len();
        }
        None
    }

    pub fn is_start(&self, steps: usize, row: usize) -> bool {
        self.segments.iter().any(|s| s.starts(steps).contains(&row))
    }

    pub fn len(&self) -> usize {
        self.price.len()
    }

    pub fn is_empty(&self) -> bool {
        self.price.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Raw signals at row `t`; `NaN` marks a missing value.
    pub fn raw_row(&self, t: usize) -> &[f64] {
        &self.raw[t * self.n_features..(t + 1) * self.n_features]
    }

    /// Visible bid ladder at row `t`, if levels were kept.
    pub fn bid_view(&self, t: usize) -> Option<BookView> {
        let ladder = self.bid_levels.as_ref()?.get(t)?;
        let bids = ladder.iter().filter(|l| l.qty > 0.0 && l.price.is_finite()).copied().collect();
        Some(BookView::new(bids, Vec::new()))
    }
}

/// Per-feature standardization fitted on training rows and stored with the
/// policy so evaluation sees identically scaled inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureScaler {
    pub fn identity(n: usize) -> Self {
        FeatureScaler {
            mean: vec![0.0; n],
            std: vec![1.0; n],
        }
    }

    /// Fit on the episode-eligible rows of every segment, ignoring missing
    /// values. Constant or empty columns get unit scale.
    pub fn fit(data: &ExecData) -> Self {
        let n = data.n_features();
        let mut sum = vec![0.0; n];
        let mut sq = vec![0.0; n];
        let mut cnt = vec![0usize; n];
        for t in data.segments.iter().flat_map(|s| s.first_row..s.end) {
            for (j, &x) in data.raw_row(t).iter().enumerate() {
                if x.is_finite() {
                    sum[j] += x;
                    sq[j] += x * x;
                    cnt[j] += 1;
                }
            }
        }
        let mut mean = vec![0.0; n];
        let mut std = vec![1.0; n];
        for j in 0..n {
            if cnt[j] > 0 {
                let m = sum[j] / cnt[j] as f64;
                let v = (sq[j] / cnt[j] as f64 - m * m).max(0.0);
                mean[j] = m;
                if v.sqrt() > 1e-12 {
                    std[j] = v.sqrt();
                }
            }
        }
        FeatureScaler { mean, std }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Standardize `raw` into `out`; missing inputs become 0 and are flagged.
    pub fn apply(&self, raw: &[f64], out: &mut Vec<f64>, missing: &mut Vec<bool>) {
        out.clear();
        missing.clear();
        for (j, &x) in raw.iter().enumerate() {
            if x.is_finite() {
                out.push((x - self.mean[j]) / self.std[j]);
                missing.push(false);
            } else {
                out.push(0.0);
                missing.push(true);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_starts_leave_room_for_the_episode() {
        let s = Segment {
            start: 0,
            first_row: 10,
            end: 30,
        };
        assert_eq!(s.starts(9), 10..21);
        assert_eq!(s.starts(19), 10..11);
        assert!(s.starts(20).is_empty());
    }

    #[test]
    fn scaler_standardizes_and_flags_missing() {
        let s = FeatureScaler {
            mean: vec![1.0, 0.0],
            std: vec![2.0, 1.0],
        };
        let (mut out, mut miss) = (Vec::new(), Vec::new());
        s.apply(&[5.0, f64::NAN], &mut out, &mut miss);
        assert_eq!(out, vec![2.0, 0.0]);
        assert_eq!(miss, vec![false, true]);
    }
}
