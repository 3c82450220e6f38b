//! Locally reconstructed limit order book.
//!
//! Snapshots replace the book, deltas upsert or delete levels, and ticker
//! updates overwrite the top of book. Every level remembers the sequence
//! number of its last update so a crossed book can be repaired by dropping
//! the staler side.

use super::{BookLevels, Level, Ticker};
use crate::error::{Error, Result};
use ordered_float::OrderedFloat;
use std::collections::BTreeMap;

type Px = OrderedFloat<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Slot {
    qty: f64,
    seq: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalBook {
    bids: BTreeMap<Px, Slot>,
    asks: BTreeMap<Px, Slot>,
    last_update_local_ts: Option<i64>,
    seq: u64,
}

impl LocalBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_levels(levels: &BookLevels, local_ts: i64) -> Self {
        let mut b = LocalBook::new();
        b.apply_snapshot(levels, local_ts);
        b
    }

    pub fn last_update_local_ts(&self) -> Option<i64> {
        self.last_update_local_ts
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty() && self.asks.is_empty()
    }

    pub fn best_bid(&self) -> Option<Level> {
        self.bids
            .iter()
            .next_back()
            .map(|(p, s)| Level::new(p.0, s.qty))
    }

    pub fn best_ask(&self) -> Option<Level> {
        self.asks.iter().next().map(|(p, s)| Level::new(p.0, s.qty))
    }

    /// Best `k` bids, best first.
    pub fn top_bids(&self, k: usize) -> Vec<Level> {
        self.bids
            .iter()
            .rev()
            .take(k)
            .map(|(p, s)| Level::new(p.0, s.qty))
            .collect()
    }

    /// Best `k` asks, best first.
    pub fn top_asks(&self, k: usize) -> Vec<Level> {
        self.asks
            .iter()
            .take(k)
            .map(|(p, s)| Level::new(p.0, s.qty))
            .collect()
    }

    pub fn bid_len(&self) -> usize {
        self.bids.len()
    }

    pub fn ask_len(&self) -> usize {
        self.asks.len()
    }

    /// True when no level has a nonpositive quantity and the book is not
    /// crossed.
    pub fn is_valid(&self) -> bool {
        let qty_ok = self
            .bids
            .values()
            .chain(self.asks.values())
            .all(|s| s.qty > 0.0);
        let uncrossed = match (self.best_bid(), self.best_ask()) {
            (Some(b), Some(a)) => b.price < a.price,
            _ => true,
        };
        qty_ok && uncrossed
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn touch(&mut self, local_ts: i64) {
        self.last_update_local_ts = Some(match self.last_update_local_ts {
            Some(prev) => prev.max(local_ts),
            None => local_ts,
        });
    }

    pub fn apply_snapshot(&mut self, levels: &BookLevels, local_ts: i64) {
        self.bids.clear();
        self.asks.clear();
        self.apply_delta(levels, local_ts);
    }

    /// Applies an incremental update: quantity 0 deletes a level, a positive
    /// quantity inserts or replaces it. Levels with a nonpositive price are
    /// ignored. A crossed result is repaired by deleting the older of the two
    /// touching levels until the book is uncrossed.
    pub fn apply_delta(&mut self, delta: &BookLevels, local_ts: i64) {
        for (levels, is_bid) in [(&delta.bids, true), (&delta.asks, false)] {
            for l in levels {
                if !(l.price.is_finite() && l.price > 0.0) {
                    continue;
                }
                let seq = self.next_seq();
                let side = if is_bid { &mut self.bids } else { &mut self.asks };
                if l.qty > 0.0 {
                    side.insert(OrderedFloat(l.price), Slot { qty: l.qty, seq });
                } else {
                    side.remove(&OrderedFloat(l.price));
                }
            }
        }
        self.uncross();
        self.touch(local_ts);
    }

    fn uncross(&mut self) {
        loop {
            let (Some((&bp, &bs)), Some((&ap, &as_))) =
                (self.bids.iter().next_back(), self.asks.iter().next())
            else {
                return;
            };
            if bp < ap {
                return;
            }
            if bs.seq < as_.seq {
                self.bids.remove(&bp);
            } else {
                self.asks.remove(&ap);
            }
        }
    }

    /// Overwrites the top of book with a ticker update. Bids priced above
    /// the ticker bid and asks priced below the ticker ask are stale and
    /// removed, which also removes any level crossing the new quote. Deeper
    /// levels are untouched. A side with nonpositive ticker quantity is
    /// cleared above the quote but no level is inserted for it.
    pub fn merge_ticker(&mut self, ticker: &Ticker, local_ts: i64) -> Result<()> {
        if !(ticker.bid_price > 0.0 && ticker.ask_price > 0.0) {
            return Err(Error::CrossedTicker {
                bid: ticker.bid_price,
                ask: ticker.ask_price,
            });
        }
        if ticker.bid_price >= ticker.ask_price {
            return Err(Error::CrossedTicker {
                bid: ticker.bid_price,
                ask: ticker.ask_price,
            });
        }
        let bid_px = OrderedFloat(ticker.bid_price);
        let ask_px = OrderedFloat(ticker.ask_price);
        // split_off keeps keys >= the argument in the returned map
        let _ = self.bids.split_off(&OrderedFloat(next_up(ticker.bid_price)));
        let above = self.asks.split_off(&ask_px);
        self.asks = above;
        let seq = self.next_seq();
        if ticker.bid_qty > 0.0 {
            self.bids.insert(bid_px, Slot { qty: ticker.bid_qty, seq });
        } else {
            self.bids.remove(&bid_px);
        }
        if ticker.ask_qty > 0.0 {
            self.asks.insert(ask_px, Slot { qty: ticker.ask_qty, seq });
        } else {
            self.asks.remove(&ask_px);
        }
        self.touch(local_ts);
        Ok(())
    }
}

/// Smallest double strictly greater than a positive finite `x`.
fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}
