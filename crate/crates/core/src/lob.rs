//! Order book views and market-order fill simulation.

use crate::capture::{Level, LocalBook, VenueFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BookSide {
    Bid,
    Ask,
}

/// Top-K snapshot of one venue's book. Both sides are best-first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BookView {
    pub bids: Vec<Level>,
    pub asks: Vec<Level>,
}

/// Result of walking the book with a market order.
#[derive(Debug, Clone, PartialEq)]
pub struct Fill {
    /// Quantity-weighted price; `None` when nothing filled.
    pub avg_price: Option<f64>,
    pub filled_qty: f64,
    /// Requested quantity left over after exhausting visible depth.
    pub unfilled_qty: f64,
    /// Sum of price * qty over the consumed levels.
    pub notional: f64,
}

impl BookView {
    pub fn new(bids: Vec<Level>, asks: Vec<Level>) -> Self {
        BookView { bids, asks }
    }

    pub fn from_book(book: &LocalBook, k: usize) -> Self {
        BookView {
            bids: book.top_bids(k),
            asks: book.top_asks(k),
        }
    }

    pub fn from_frame(frame: &VenueFrame) -> Self {
        BookView {
            bids: frame.bids.clone(),
            asks: frame.asks.clone(),
        }
    }

    pub fn side(&self, side: BookSide) -> &[Level] {
        match side {
            BookSide::Bid => &self.bids,
            BookSide::Ask => &self.asks,
        }
    }

    pub fn mid(&self) -> Option<f64> {
        Some(0.5 * (self.bids.first()?.price + self.asks.first()?.price))
    }

    /// Total quantity over the best `levels` levels of a side; shallower
    /// books sum what exists.
    pub fn depth_sum(&self, side: BookSide, levels: usize) -> f64 {
        self.side(side).iter().take(levels).map(|l| l.qty).sum()
    }

    /// Sells `qty` into the bids best-first. Returns the fill and the book
    /// with consumed depth removed.
    pub fn fill_market_sell(&self, qty: f64) -> (Fill, BookView) {
        let mut remaining = qty.max(0.0);
        let mut notional = 0.0;
        let mut filled = 0.0;
        let mut bids = Vec::with_capacity(self.bids.len());
        for l in &self.bids {
            if remaining <= 0.0 {
                bids.push(*l);
                continue;
            }
            let take = remaining.min(l.qty);
            notional += take * l.price;
            filled += take;
            remaining -= take;
            if l.qty - take > 0.0 {
                bids.push(Level::new(l.price, l.qty - take));
            }
        }
        let fill = Fill {
            avg_price: (filled > 0.0).then(|| notional / filled),
            filled_qty: filled,
            unfilled_qty: remaining,
            notional,
        };
        (
            fill,
            BookView {
                bids,
                asks: self.asks.clone(),
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn view(bids: &[(f64, f64)]) -> BookView {
        BookView::new(
            bids.iter().map(|&(p, q)| Level::new(p, q)).collect(),
            vec![Level::new(101.0, 1.0)],
        )
    }

    #[test]
    fn depth_sums() {
        assert_eq!(BookView::default().depth_sum(BookSide::Bid, 5), 0.0);
        let v = view(&[(100.0, 1.0), (99.0, 2.0), (98.0, 3.0), (97.0, 4.0), (96.0, 5.0), (95.0, 6.0)]);
        assert_eq!(v.depth_sum(BookSide::Bid, 5), 15.0);
        assert_eq!(view(&[(100.0, 7.0)]).depth_sum(BookSide::Bid, 5), 7.0);
    }

    #[test]
    fn zero_sell_leaves_book() {
        let v = view(&[(100.0, 3.0), (99.0, 5.0)]);
        let (f, after) = v.fill_market_sell(0.0);
        assert_eq!(f.filled_qty, 0.0);
        assert_eq!(f.avg_price, None);
        assert_eq!(after, v);
    }

    #[test]
    fn walks_levels_best_first() {
        let v = view(&[(100.0, 3.0), (99.0, 5.0)]);
        let (f, after) = v.fill_market_sell(4.0);
        assert_eq!(f.filled_qty, 4.0);
        assert_eq!(f.avg_price, Some(99.75));
        assert_eq!(after.bids, vec![Level::new(99.0, 4.0)]);
    }

    #[test]
    fn exhaustion_reports_unfilled() {
        let v = view(&[(100.0, 3.0), (99.0, 5.0)]);
        let (f, after) = v.fill_market_sell(10.0);
        assert_eq!(f.filled_qty, 8.0);
        assert_eq!(f.unfilled_qty, 2.0);
        assert!(after.bids.is_empty());
    }

    fn arb_bids() -> impl Strategy<Value = BookView> {
        prop::collection::vec(1u32..20, 1..6).prop_map(|qs| {
            view(
                &qs.iter()
                    .enumerate()
                    .map(|(i, &q)| (100.0 - i as f64, q as f64))
                    .collect::<Vec<_>>(),
            )
        })
    }

    proptest! {
        #[test]
        fn fill_conserves_quantity(v in arb_bids(), q in 0.0f64..120.0) {
            let (f, after) = v.fill_market_sell(q);
            let before = v.depth_sum(BookSide::Bid, 10);
            let left = after.depth_sum(BookSide::Bid, 10);
            prop_assert!((before - left - f.filled_qty).abs() < 1e-9);
            prop_assert!(f.filled_qty <= q + 1e-12);
        }

        #[test]
        fn sell_slippage_is_monotone(v in arb_bids(), q1 in 0.01f64..60.0, dq in 0.0f64..60.0) {
            let (a, _) = v.fill_market_sell(q1);
            let (b, _) = v.fill_market_sell(q1 + dq);
            prop_assert!(b.avg_price.unwrap() <= a.avg_price.unwrap() + 1e-9);
        }
    }
}
