//! Ordering of multi-venue record streams.
//!
//! Each venue may be ingested independently (one transport per venue); all
//! records then pass through a single merge that fixes the final order by
//! `local_ts`, breaking ties by source index and arrival order.

use super::{MarketRecord, VenueId};
use crate::error::Result;
use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

/// Sorted, de-duplicated venue universe of a record set.
pub fn venues_of<'a>(records: impl IntoIterator<Item = &'a MarketRecord>) -> Vec<VenueId> {
    records
        .into_iter()
        .map(|r| r.venue.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Orders records by `local_ts` (stable, so arrival order breaks ties) and
/// makes timestamps strictly increasing within each venue by bumping
/// duplicates forward one nanosecond at a time.
pub fn normalize(mut records: Vec<MarketRecord>) -> Vec<MarketRecord> {
    records.sort_by_key(|r| r.local_ts);
    let mut last: HashMap<VenueId, i64> = HashMap::new();
    let mut bumped = false;
    for r in records.iter_mut() {
        if let Some(&prev) = last.get(&r.venue) {
            if r.local_ts <= prev {
                r.local_ts = prev + 1;
                bumped = true;
            }
        }
        last.insert(r.venue.clone(), r.local_ts);
    }
    if bumped {
        records.sort_by_key(|r| r.local_ts);
    }
    records
}

type Source<'a> = Box<dyn Iterator<Item = Result<MarketRecord>> + Send + 'a>;

/// K-way merge of independently ordered per-venue sources.
pub struct MergedStream<'a> {
    sources: Vec<Source<'a>>,
    heap: BinaryHeap<Reverse<(i64, usize, u64)>>,
    pending: Vec<Option<MarketRecord>>,
    arrivals: u64,
    failed: Option<crate::error::Error>,
}

pub fn merge_streams<'a>(sources: Vec<Source<'a>>) -> MergedStream<'a> {
    let n = sources.len();
    let mut m = MergedStream {
        sources,
        heap: BinaryHeap::new(),
        pending: vec![None; n],
        arrivals: 0,
        failed: None,
    };
    for i in 0..n {
        m.refill(i);
    }
    m
}

impl MergedStream<'_> {
    fn refill(&mut self, i: usize) {
        match self.sources[i].next() {
            Some(Ok(r)) => {
                self.heap.push(Reverse((r.local_ts, i, self.arrivals)));
                self.arrivals += 1;
                self.pending[i] = Some(r);
            }
            Some(Err(e)) => {
                if self.failed.is_none() {
                    self.failed = Some(e);
                }
            }
            None => {}
        }
    }
}

impl Iterator for MergedStream<'_> {
    type Item = Result<MarketRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some(e) = self.failed.take() {
            self.heap.clear();
            return Some(Err(e));
        }
        let Reverse((_, i, _)) = self.heap.pop()?;
        let rec = self.pending[i].take().expect("pending record for heap entry");
        self.refill(i);
        Some(Ok(rec))
    }
}
