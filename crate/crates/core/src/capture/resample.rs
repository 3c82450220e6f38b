//! Fixed-interval resampling without lookahead.
//!
//! Frame `g` reflects exactly the records with `local_ts <= g`: book state is
//! the last state at or before `g`, and trade volume covers the half-open
//! window `(g - grid, g]`.

use super::{Level, LocalBook, MarketRecord, Payload, TakerSide, VenueId};
use crate::error::{Error, Result};
use crate::BOOK_DEPTH;

/// Per-venue state on one grid point. Only built for venues whose book has
/// at least one level.
#[derive(Debug, Clone, PartialEq)]
pub struct VenueFrame {
    /// Best `BOOK_DEPTH` bids, best first.
    pub bids: Vec<Level>,
    /// Best `BOOK_DEPTH` asks, best first.
    pub asks: Vec<Level>,
    pub best_bid: Option<f64>,
    pub best_ask: Option<f64>,
    pub mid: Option<f64>,
    pub buy_volume: f64,
    pub sell_volume: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledFrame {
    /// Grid time in ns, a multiple of the grid interval.
    pub grid_ts: i64,
    /// Indexed like the resampler's venue list; `None` marks an absent venue.
    pub venues: Vec<Option<VenueFrame>>,
    /// Largest `local_ts` consumed so far, for lookahead audits.
    pub last_record_ts: Option<i64>,
}

#[derive(Debug, Clone, Default)]
struct VenueState {
    book: LocalBook,
    buy: f64,
    sell: f64,
}

/// Streaming resampler over a time-sorted record iterator.
pub struct Resampler<I: Iterator<Item = Result<MarketRecord>>> {
    input: std::iter::Peekable<I>,
    venues: Vec<VenueId>,
    state: Vec<VenueState>,
    grid_ns: i64,
    next_grid: Option<i64>,
    prev_ts: Option<i64>,
    consumed: usize,
    last_record_ts: Option<i64>,
    rejected_tickers: usize,
    unknown_venue_records: usize,
    done: bool,
}

fn ceil_to(ts: i64, grid: i64) -> i64 {
    -((-ts).div_euclid(grid)) * grid
}

impl<I> Resampler<I>
where
    I: Iterator<Item = Result<MarketRecord>>,
{
    pub fn new(input: I, venues: Vec<VenueId>, grid_ns: i64) -> Self {
        assert!(grid_ns > 0, "grid interval must be positive");
        let n = venues.len();
        Resampler {
            input: input.peekable(),
            venues,
            state: vec![VenueState::default(); n],
            grid_ns,
            next_grid: None,
            prev_ts: None,
            consumed: 0,
            last_record_ts: None,
            rejected_tickers: 0,
            unknown_venue_records: 0,
            done: false,
        }
    }

    pub fn venues(&self) -> &[VenueId] {
        &self.venues
    }

    /// Ticker updates dropped because they were crossed.
    pub fn rejected_tickers(&self) -> usize {
        self.rejected_tickers
    }

    pub fn unknown_venue_records(&self) -> usize {
        self.unknown_venue_records
    }

    fn apply(&mut self, rec: MarketRecord) {
        let Some(vi) = self.venues.iter().position(|v| *v == rec.venue) else {
            self.unknown_venue_records += 1;
            return;
        };
        let st = &mut self.state[vi];
        match &rec.payload {
            Payload::Trade(t) => match t.side {
                TakerSide::Buy => st.buy += t.qty,
                TakerSide::Sell => st.sell += t.qty,
            },
            Payload::BookSnapshot(l) => st.book.apply_snapshot(l, rec.local_ts),
            Payload::BookDelta(l) => st.book.apply_delta(l, rec.local_ts),
            Payload::Ticker(t) => {
                if st.book.merge_ticker(t, rec.local_ts).is_err() {
                    self.rejected_tickers += 1;
                }
            }
        }
    }

    fn frame(&mut self, grid_ts: i64) -> SampledFrame {
        let venues = self
            .state
            .iter_mut()
            .map(|st| {
                let (buy, sell) = (st.buy, st.sell);
                st.buy = 0.0;
                st.sell = 0.0;
                if st.book.is_empty() {
                    return None;
                }
                let best_bid = st.book.best_bid().map(|l| l.price);
                let best_ask = st.book.best_ask().map(|l| l.price);
                let mid = match (best_bid, best_ask) {
                    (Some(b), Some(a)) => Some(0.5 * (b + a)),
                    _ => None,
                };
                Some(VenueFrame {
                    bids: st.book.top_bids(BOOK_DEPTH),
                    asks: st.book.top_asks(BOOK_DEPTH),
                    best_bid,
                    best_ask,
                    mid,
                    buy_volume: buy,
                    sell_volume: sell,
                })
            })
            .collect();
        SampledFrame {
            grid_ts,
            venues,
            last_record_ts: self.last_record_ts,
        }
    }
}

impl<I> Iterator for Resampler<I>
where
    I: Iterator<Item = Result<MarketRecord>>,
{
    type Item = Result<SampledFrame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let grid_ts = match self.next_grid {
            Some(g) => g,
            None => match self.input.peek() {
                None => {
                    self.done = true;
                    return None;
                }
                Some(Err(_)) => {
                    self.done = true;
                    let Some(Err(e)) = self.input.next() else { unreachable!() };
                    return Some(Err(e));
                }
                Some(Ok(r)) => ceil_to(r.local_ts, self.grid_ns),
            },
        };
        loop {
            match self.input.peek() {
                Some(Ok(r)) if r.local_ts <= grid_ts => {}
                Some(Err(_)) => {
                    self.done = true;
                    let Some(Err(e)) = self.input.next() else { unreachable!() };
                    return Some(Err(e));
                }
                _ => break,
            }
            let rec = self.input.next().expect("peeked").expect("peeked ok");
            if let Some(prev) = self.prev_ts {
                if rec.local_ts < prev {
                    self.done = true;
                    return Some(Err(Error::UnsortedInput {
                        position: self.consumed,
                        prev,
                        next: rec.local_ts,
                    }));
                }
            }
            self.prev_ts = Some(rec.local_ts);
            self.last_record_ts = Some(rec.local_ts);
            self.consumed += 1;
            self.apply(rec);
        }
        // an out-of-order record sitting past the boundary would otherwise be
        // reported one frame late; check it here too
        if let (Some(Ok(r)), Some(prev)) = (self.input.peek(), self.prev_ts) {
            if r.local_ts < prev {
                self.done = true;
                return Some(Err(Error::UnsortedInput {
                    position: self.consumed,
                    prev,
                    next: r.local_ts,
                }));
            }
        }
        let frame = self.frame(grid_ts);
        if self.input.peek().is_none() {
            self.done = true;
        } else {
            self.next_grid = Some(grid_ts + self.grid_ns);
        }
        Some(Ok(frame))
    }
}

/// Resamples an in-memory, time-sorted record slice.
pub fn resample(records: &[MarketRecord], venues: &[VenueId], grid_ns: i64) -> Result<Vec<SampledFrame>> {
    Resampler::new(records.iter().cloned().map(Ok), venues.to_vec(), grid_ns).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::{BookLevels, Ticker, Trade};
    use crate::GRID_NS;

    const MS: i64 = 1_000_000;

    fn book_rec(venue: &str, ts: i64, bid: f64, ask: f64) -> MarketRecord {
        MarketRecord {
            venue: venue.into(),
            local_ts: ts,
            exch_ts: None,
            payload: Payload::BookSnapshot(BookLevels {
                bids: vec![Level::new(bid, 1.0)],
                asks: vec![Level::new(ask, 1.0)],
            }),
        }
    }

    fn trade(venue: &str, ts: i64, qty: f64, side: TakerSide) -> MarketRecord {
        MarketRecord {
            venue: venue.into(),
            local_ts: ts,
            exch_ts: None,
            payload: Payload::Trade(Trade { price: 100.0, qty, side }),
        }
    }

    #[test]
    fn trades_aggregate_over_half_open_window() {
        let recs = vec![
            book_rec("a", 0, 99.0, 101.0),
            trade("a", 3 * MS, 2.0, TakerSide::Buy),
            trade("a", 7 * MS, 5.0, TakerSide::Sell),
            trade("a", 10 * MS + 1, 9.0, TakerSide::Sell),
        ];
        let frames = resample(&recs, &["a".into()], GRID_NS).unwrap();
        assert_eq!(frames.len(), 3);
        assert_eq!(frames[0].grid_ts, 0);
        let f1 = frames[1].venues[0].as_ref().unwrap();
        assert_eq!((f1.buy_volume, f1.sell_volume), (2.0, 5.0));
        let f2 = frames[2].venues[0].as_ref().unwrap();
        assert_eq!((f2.buy_volume, f2.sell_volume), (0.0, 9.0));
    }

    #[test]
    fn empty_window_has_zero_volume() {
        let recs = vec![book_rec("a", 0, 99.0, 101.0), book_rec("a", 25 * MS, 99.0, 101.0)];
        let frames = resample(&recs, &["a".into()], GRID_NS).unwrap();
        for f in &frames {
            let v = f.venues[0].as_ref().unwrap();
            assert_eq!((v.buy_volume, v.sell_volume), (0.0, 0.0));
        }
    }

    #[test]
    fn record_one_ns_after_grid_is_not_visible() {
        let recs = vec![
            book_rec("a", 0, 99.0, 101.0),
            book_rec("a", 10 * MS + 1, 50.0, 51.0),
        ];
        let frames = resample(&recs, &["a".into()], GRID_NS).unwrap();
        assert_eq!(frames[1].grid_ts, 10 * MS);
        assert_eq!(frames[1].venues[0].as_ref().unwrap().mid, Some(100.0));
        assert!(frames.iter().all(|f| f.last_record_ts.unwrap() <= f.grid_ts));
    }

    #[test]
    fn venue_without_book_is_absent() {
        let recs = vec![book_rec("a", 0, 99.0, 101.0), book_rec("b", 15 * MS, 99.0, 101.0)];
        let frames = resample(&recs, &["a".into(), "b".into()], GRID_NS).unwrap();
        assert!(frames[0].venues[1].is_none());
        assert!(frames[1].venues[1].is_none());
        assert!(frames[2].venues[1].is_some());
    }

    #[test]
    fn unsorted_input_reports_position() {
        let recs = vec![
            book_rec("a", 0, 99.0, 101.0),
            book_rec("a", 30 * MS, 99.0, 101.0),
            book_rec("a", 20 * MS, 99.0, 101.0),
        ];
        let err = resample(&recs, &["a".into()], GRID_NS).unwrap_err();
        assert!(matches!(err, Error::UnsortedInput { position: 2, .. }));
    }

    #[test]
    fn crossed_ticker_is_counted_and_ignored() {
        let recs = vec![
            book_rec("a", 0, 99.0, 101.0),
            MarketRecord {
                venue: "a".into(),
                local_ts: 1,
                exch_ts: None,
                payload: Payload::Ticker(Ticker {
                    bid_price: 102.0,
                    bid_qty: 1.0,
                    ask_price: 101.0,
                    ask_qty: 1.0,
                }),
            },
        ];
        let mut rs = Resampler::new(recs.into_iter().map(Ok), vec!["a".into()], GRID_NS);
        let frames: Vec<_> = rs.by_ref().collect::<Result<_>>().unwrap();
        assert_eq!(rs.rejected_tickers(), 1);
        assert_eq!(frames.last().unwrap().venues[0].as_ref().unwrap().mid, Some(100.0));
    }

    #[test]
    fn negative_timestamps_round_up_to_grid() {
        assert_eq!(ceil_to(-15 * MS, GRID_NS), -10 * MS);
        assert_eq!(ceil_to(-20 * MS, GRID_NS), -20 * MS);
        assert_eq!(ceil_to(1, GRID_NS), 10 * MS);
    }
}
