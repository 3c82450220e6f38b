//! Collector-clock to venue-clock mapping.
//!
//! A [`ClockMap`] is piecewise linear through the `(local_ts, exch_ts)` knots
//! observed on one venue's stream. Outside the observed range the offset of
//! the nearest knot is held constant.

use super::{MarketRecord, VenueId};
use crate::error::{Error, Result};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct ClockMap {
    pub venue: VenueId,
    knots: Vec<(i64, i64)>,
}

impl ClockMap {
    /// Builds a map from knots already sorted by local time with strictly
    /// increasing local and nondecreasing exchange time.
    pub fn from_knots(venue: VenueId, knots: Vec<(i64, i64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::FewerThanTwoKnots {
                venue: venue.0,
                found: knots.len(),
            });
        }
        debug_assert!(knots.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
        Ok(ClockMap { venue, knots })
    }

    pub fn knots(&self) -> &[(i64, i64)] {
        &self.knots
    }

    /// Maps a local timestamp to venue time, rounding to the nearest ns.
    pub fn map(&self, local_ts: i64) -> i64 {
        let first = self.knots[0];
        let last = *self.knots.last().expect("at least two knots");
        if local_ts <= first.0 {
            return local_ts + (first.1 - first.0);
        }
        if local_ts >= last.0 {
            return local_ts + (last.1 - last.0);
        }
        // first knot with local > query; its predecessor is <= query
        let hi = self.knots.partition_point(|k| k.0 <= local_ts);
        let (l0, e0) = self.knots[hi - 1];
        let (l1, e1) = self.knots[hi];
        let num = (local_ts - l0) as i128 * (e1 - e0) as i128;
        let den = (l1 - l0) as i128;
        let step = (2 * num + den).div_euclid(2 * den);
        e0 + step as i64
    }
}

/// Builds the clock map of a single venue from its records (in stream
/// order). Knots whose exchange time would move backwards, or that repeat a
/// local timestamp, are rejected and their stream positions returned.
pub fn align_clock<'a>(
    venue: &VenueId,
    records: impl IntoIterator<Item = &'a MarketRecord>,
) -> Result<(ClockMap, Vec<usize>)> {
    let mut knots: Vec<(i64, i64)> = Vec::new();
    let mut rejected = Vec::new();
    for (pos, r) in records.into_iter().enumerate() {
        let Some(exch) = r.exch_ts else { continue };
        match knots.last() {
            Some(&(l, e)) if r.local_ts <= l || exch < e => rejected.push(pos),
            _ => knots.push((r.local_ts, exch)),
        }
    }
    let map = ClockMap::from_knots(venue.clone(), knots)?;
    Ok((map, rejected))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlignReport {
    /// Venues with a usable clock map and their knot counts.
    pub aligned: Vec<(VenueId, usize)>,
    /// Venues left unmapped because they carried fewer than two knots.
    pub unmapped: Vec<VenueId>,
    /// Number of rejected non-monotone knots per venue.
    pub rejected_knots: Vec<(VenueId, usize)>,
}

/// Builds per-venue clock maps and fills in `exch_ts` for records that lack
/// one. Input must already be normalized (see [`super::normalize`]).
pub fn align_records(records: &mut [MarketRecord]) -> AlignReport {
    let mut by_venue: BTreeMap<VenueId, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_venue.entry(r.venue.clone()).or_default().push(i);
    }
    let mut report = AlignReport::default();
    for (venue, idx) in by_venue {
        let res = align_clock(&venue, idx.iter().map(|&i| &records[i]));
        match res {
            Ok((map, rejected)) => {
                for &i in &idx {
                    if records[i].exch_ts.is_none() {
                        records[i].exch_ts = Some(map.map(records[i].local_ts));
                    }
                }
                report.aligned.push((venue.clone(), map.knots().len()));
                if !rejected.is_empty() {
                    report.rejected_knots.push((venue, rejected.len()));
                }
            }
            Err(_) => report.unmapped.push(venue),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::{Payload, TakerSide, Trade};
    use proptest::prelude::*;

    fn rec(local: i64, exch: Option<i64>) -> MarketRecord {
        MarketRecord {
            venue: "v".into(),
            local_ts: local,
            exch_ts: exch,
            payload: Payload::Trade(Trade {
                price: 1.0,
                qty: 1.0,
                side: TakerSide::Buy,
            }),
        }
    }

    fn two_knot_map() -> ClockMap {
        ClockMap::from_knots("v".into(), vec![(100, 90), (200, 190)]).unwrap()
    }

    #[test]
    fn exact_at_knots_and_linear_between() {
        let m = two_knot_map();
        assert_eq!(m.map(100), 90);
        assert_eq!(m.map(200), 190);
        assert_eq!(m.map(150), 140);
    }

    #[test]
    fn constant_offset_outside_range() {
        let m = ClockMap::from_knots("v".into(), vec![(100, 90), (200, 250)]).unwrap();
        assert_eq!(m.map(50), 40);
        assert_eq!(m.map(300), 350);
    }

    #[test]
    fn single_knot_is_rejected() {
        let recs = [rec(1, Some(1)), rec(2, None)];
        let err = align_clock(&"v".into(), recs.iter()).unwrap_err();
        assert!(matches!(err, Error::FewerThanTwoKnots { found: 1, .. }));
    }

    #[test]
    fn backwards_knot_is_skipped() {
        let recs = [rec(100, Some(90)), rec(150, Some(80)), rec(200, Some(190))];
        let (m, rejected) = align_clock(&"v".into(), recs.iter()).unwrap();
        assert_eq!(rejected, vec![1]);
        assert_eq!(m.knots(), &[(100, 90), (200, 190)]);
    }

    #[test]
    fn align_fills_missing_exchange_time() {
        let mut recs = vec![rec(100, Some(90)), rec(150, None), rec(200, Some(190))];
        let report = align_records(&mut recs);
        assert_eq!(recs[1].exch_ts, Some(140));
        assert_eq!(report.aligned.len(), 1);
    }

    proptest! {
        #[test]
        fn mapping_is_monotone(
            steps in prop::collection::vec((1i64..1_000, 0i64..2_000), 2..20),
            queries in prop::collection::vec(-5_000i64..50_000, 2..50),
        ) {
            let mut knots = Vec::new();
            let (mut l, mut e) = (0i64, 0i64);
            for (dl, de) in steps {
                l += dl;
                e += de;
                knots.push((l, e));
            }
            let m = ClockMap::from_knots("v".into(), knots).unwrap();
            let mut qs = queries;
            qs.sort();
            let mapped: Vec<i64> = qs.iter().map(|&q| m.map(q)).collect();
            prop_assert!(mapped.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
