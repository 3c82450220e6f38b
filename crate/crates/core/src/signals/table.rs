use crate::capture::{Level, SampledFrame, VenueId};
use crate::error::Result;
use crate::lob::{BookSide, BookView};
use crate::BOOK_DEPTH;
use std::sync::Arc;

/// Per-venue columns of a [`MarketTable`]. Missing values are `NaN`.
#[derive(Debug, Clone, Default)]
pub struct VenueColumns {
    pub present: Vec<bool>,
    pub best_bid: Vec<f64>,
    pub best_ask: Vec<f64>,
    pub mid: Vec<f64>,
    pub buy_volume: Vec<f64>,
    pub sell_volume: Vec<f64>,
    /// Top-5 cumulative depth per side.
    pub bid_depth: Vec<f64>,
    pub ask_depth: Vec<f64>,
    /// Full top-5 bid ladder, kept only for venues that need book-walk fills.
    pub bid_levels: Option<Vec<[Level; BOOK_DEPTH]>>,
}

/// Columnar view of a resampled frame sequence; one row per grid point.
#[derive(Debug, Clone)]
pub struct MarketTable {
    pub grid_ts: Arc<[i64]>,
    pub venues: Vec<VenueId>,
    pub cols: Vec<VenueColumns>,
}

impl MarketTable {
    /// Collects a frame stream. `keep_levels` lists venue indices whose
    /// bid ladder is retained.
    pub fn from_frames<I>(frames: I, venues: Vec<VenueId>, keep_levels: &[usize]) -> Result<Self>
    where
        I: IntoIterator<Item = Result<SampledFrame>>,
    {
        let n = venues.len();
        let mut grid = Vec::new();
        let mut cols: Vec<VenueColumns> = (0..n)
            .map(|i| VenueColumns {
                bid_levels: keep_levels.contains(&i).then(Vec::new),
                ..Default::default()
            })
            .collect();
        for f in frames {
            let f = f?;
            grid.push(f.grid_ts);
            for (i, c) in cols.iter_mut().enumerate() {
                let v = f.venues.get(i).and_then(|v| v.as_ref());
                let nan = f64::NAN;
                match v {
                    None => {
                        c.present.push(false);
                        c.best_bid.push(nan);
                        c.best_ask.push(nan);
                        c.mid.push(nan);
                        c.buy_volume.push(0.0);
                        c.sell_volume.push(0.0);
                        c.bid_depth.push(nan);
                        c.ask_depth.push(nan);
                        if let Some(l) = c.bid_levels.as_mut() {
                            l.push([Level::new(nan, 0.0); BOOK_DEPTH]);
                        }
                    }
                    Some(v) => {
                        let view = BookView::from_frame(v);
                        c.present.push(true);
                        c.best_bid.push(v.best_bid.unwrap_or(nan));
                        c.best_ask.push(v.best_ask.unwrap_or(nan));
                        c.mid.push(v.mid.unwrap_or(nan));
                        c.buy_volume.push(v.buy_volume);
                        c.sell_volume.push(v.sell_volume);
                        c.bid_depth.push(view.depth_sum(BookSide::Bid, BOOK_DEPTH));
                        c.ask_depth.push(view.depth_sum(BookSide::Ask, BOOK_DEPTH));
                        if let Some(l) = c.bid_levels.as_mut() {
                            let mut ladder = [Level::new(nan, 0.0); BOOK_DEPTH];
                            for (slot, lv) in ladder.iter_mut().zip(&v.bids) {
                                *slot = *lv;
                            }
                            l.push(ladder);
                        }
                    }
                }
            }
        }
        Ok(MarketTable {
            grid_ts: grid.into(),
            venues,
            cols,
        })
    }

    pub fn len(&self) -> usize {
        self.grid_ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid_ts.is_empty()
    }

    pub fn venue_index(&self, venue: &VenueId) -> Option<usize> {
        self.venues.iter().position(|v| v == venue)
    }

    /// Bid side of venue `vi` at row `t` as a book view (asks omitted).
    pub fn bid_view(&self, vi: usize, t: usize) -> Option<BookView> {
        let ladder = self.cols[vi].bid_levels.as_ref()?.get(t)?;
        let bids = ladder.iter().filter(|l| l.qty > 0.0 && l.price.is_finite()).copied().collect();
        Some(BookView::new(bids, Vec::new()))
    }
}
