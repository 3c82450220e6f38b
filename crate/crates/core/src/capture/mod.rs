//! Canonical capture format and the preprocessing pipeline that turns raw
//! multi-venue event streams into a fixed-interval frame sequence.
//!
//! Every record carries the collector's local receive time (`local_ts`), which
//! is the single clock all venues are aligned on. Venue timestamps
//! (`exch_ts`) are optional and only used to build [`ClockMap`]s.

mod book;
mod clock;
mod io;
mod resample;
mod stream;

pub use book::LocalBook;
pub use clock::{align_clock, align_records, AlignReport, ClockMap};
pub use io::{frames_csv_header, read_capture, write_capture, write_frame_rows, write_frames_csv, write_records, CaptureReader};
pub use resample::{resample, Resampler, SampledFrame, VenueFrame};
pub use stream::{merge_streams, normalize, venues_of, MergedStream};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Identifier of a trading venue, e.g. `"binance"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VenueId(pub String);

impl VenueId {
    pub fn new(name: impl Into<String>) -> Self {
        VenueId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VenueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VenueId {
    fn from(s: &str) -> Self {
        VenueId(s.to_string())
    }
}

/// Aggressor side of a trade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TakerSide {
    Buy,
    Sell,
}

/// One price level. Serialized as a `[price, qty]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct Level {
    pub price: f64,
    pub qty: f64,
}

impl Level {
    pub fn new(price: f64, qty: f64) -> Self {
        Level { price, qty }
    }
}

impl From<(f64, f64)> for Level {
    fn from((price, qty): (f64, f64)) -> Self {
        Level { price, qty }
    }
}

impl From<Level> for (f64, f64) {
    fn from(l: Level) -> Self {
        (l.price, l.qty)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trade {
    pub price: f64,
    pub qty: f64,
    pub side: TakerSide,
}

/// Price levels of a snapshot or an incremental update. Bids best-first
/// (descending), asks best-first (ascending); deltas may be unordered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BookLevels {
    pub bids: Vec<Level>,
    pub asks: Vec<Level>,
}

/// Best bid/offer update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ticker {
    pub bid_price: f64,
    pub bid_qty: f64,
    pub ask_price: f64,
    pub ask_qty: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Trade(Trade),
    BookSnapshot(BookLevels),
    BookDelta(BookLevels),
    Ticker(Ticker),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordKind {
    Trade,
    BookSnapshot,
    BookDelta,
    Ticker,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Trade => "trade",
            RecordKind::BookSnapshot => "book_snapshot",
            RecordKind::BookDelta => "book_delta",
            RecordKind::Ticker => "ticker",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "trade" => Some(RecordKind::Trade),
            "book_snapshot" => Some(RecordKind::BookSnapshot),
            "book_delta" => Some(RecordKind::BookDelta),
            "ticker" => Some(RecordKind::Ticker),
            _ => None,
        }
    }
}

/// One timestamped event from one venue.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketRecord {
    pub venue: VenueId,
    /// Collector receive time, ns.
    pub local_ts: i64,
    /// Venue-side time, ns, when the venue provides one.
    pub exch_ts: Option<i64>,
    pub payload: Payload,
}

impl MarketRecord {
    pub fn kind(&self) -> RecordKind {
        match self.payload {
            Payload::Trade(_) => RecordKind::Trade,
            Payload::BookSnapshot(_) => RecordKind::BookSnapshot,
            Payload::BookDelta(_) => RecordKind::BookDelta,
            Payload::Ticker(_) => RecordKind::Ticker,
        }
    }

    /// Checks the per-record invariants: positive prices, positive trade
    /// quantities, nonnegative book quantities.
    pub fn validate(&self) -> std::result::Result<(), String> {
        fn price_ok(p: f64) -> bool {
            p.is_finite() && p > 0.0
        }
        match &self.payload {
            Payload::Trade(t) => {
                if !price_ok(t.price) {
                    return Err(format!("trade price must be > 0, got {}", t.price));
                }
                if !(t.qty.is_finite() && t.qty > 0.0) {
                    return Err(format!("trade qty must be > 0, got {}", t.qty));
                }
            }
            Payload::BookSnapshot(b) | Payload::BookDelta(b) => {
                for l in b.bids.iter().chain(&b.asks) {
                    if !price_ok(l.price) {
                        return Err(format!("level price must be > 0, got {}", l.price));
                    }
                    if !(l.qty.is_finite() && l.qty >= 0.0) {
                        return Err(format!("level qty must be >= 0, got {}", l.qty));
                    }
                }
            }
            Payload::Ticker(t) => {
                if !price_ok(t.bid_price) || !price_ok(t.ask_price) {
                    return Err("ticker prices must be > 0".to_string());
                }
            }
        }
        Ok(())
    }
}
