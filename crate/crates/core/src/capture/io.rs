//! Newline-delimited JSON capture files and the columnar frame CSV.
//!
//! Capture lines carry exactly the fields `venue`, `kind`, `local_ts`,
//! optional `exch_ts` and `payload`, in that order. Writing a record that was
//! read from a canonical file reproduces the same bytes.

use super::{BookLevels, MarketRecord, Payload, RecordKind, SampledFrame, Ticker, Trade, VenueId};
use crate::error::{Error, Result};
use crate::util::fmt_sig9;
use serde::de::DeserializeOwned;
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

impl Serialize for MarketRecord {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = if self.exch_ts.is_some() { 5 } else { 4 };
        let mut st = serializer.serialize_struct("MarketRecord", n)?;
        st.serialize_field("venue", &self.venue)?;
        st.serialize_field("kind", self.kind().as_str())?;
        st.serialize_field("local_ts", &self.local_ts)?;
        if let Some(ts) = self.exch_ts {
            st.serialize_field("exch_ts", &ts)?;
        }
        match &self.payload {
            Payload::Trade(t) => st.serialize_field("payload", t)?,
            Payload::BookSnapshot(b) | Payload::BookDelta(b) => st.serialize_field("payload", b)?,
            Payload::Ticker(t) => st.serialize_field("payload", t)?,
        }
        st.end()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord<'a> {
    venue: String,
    kind: String,
    local_ts: i64,
    #[serde(default)]
    exch_ts: Option<i64>,
    #[serde(borrow)]
    payload: &'a RawValue,
}

fn parse_payload<T: DeserializeOwned>(raw: &RawValue, line: usize) -> Result<T> {
    serde_json::from_str(raw.get()).map_err(|e| Error::MalformedLine {
        line,
        reason: format!("payload: {e}"),
    })
}

/// Parses one capture line. `line` is 1-based and only used for errors.
pub fn parse_line(text: &str, line: usize) -> Result<MarketRecord> {
    let raw: RawRecord = serde_json::from_str(text).map_err(|e| Error::MalformedLine {
        line,
        reason: e.to_string(),
    })?;
    let kind = RecordKind::parse(&raw.kind).ok_or_else(|| Error::UnknownKind {
        line,
        kind: raw.kind.clone(),
    })?;
    let payload = match kind {
        RecordKind::Trade => Payload::Trade(parse_payload::<Trade>(raw.payload, line)?),
        RecordKind::BookSnapshot => {
            Payload::BookSnapshot(parse_payload::<BookLevels>(raw.payload, line)?)
        }
        RecordKind::BookDelta => Payload::BookDelta(parse_payload::<BookLevels>(raw.payload, line)?),
        RecordKind::Ticker => Payload::Ticker(parse_payload::<Ticker>(raw.payload, line)?),
    };
    let rec = MarketRecord {
        venue: VenueId(raw.venue),
        local_ts: raw.local_ts,
        exch_ts: raw.exch_ts,
        payload,
    };
    rec.validate()
        .map_err(|reason| Error::MalformedLine { line, reason })?;
    Ok(rec)
}

/// Streaming reader over a capture file.
pub struct CaptureReader<R> {
    inner: R,
    line: usize,
    buf: String,
}

impl CaptureReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(CaptureReader::new(BufReader::new(f)))
    }
}

impl<R: BufRead> CaptureReader<R> {
    pub fn new(inner: R) -> Self {
        CaptureReader {
            inner,
            line: 0,
            buf: String::new(),
        }
    }
}

impl<R: BufRead> Iterator for CaptureReader<R> {
    type Item = Result<MarketRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            self.line += 1;
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => {
                    return Some(Err(Error::MalformedLine {
                        line: self.line,
                        reason: e.to_string(),
                    }))
                }
            }
            let text = self.buf.trim_end_matches(['\n', '\r']);
            if text.trim().is_empty() {
                continue;
            }
            return Some(parse_line(text, self.line));
        }
    }
}

pub fn read_capture(path: impl AsRef<Path>) -> Result<Vec<MarketRecord>> {
    CaptureReader::open(path)?.collect()
}

pub fn write_records<'a, W: Write>(
    mut w: W,
    records: impl IntoIterator<Item = &'a MarketRecord>,
) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_capture<'a>(
    records: impl IntoIterator<Item = &'a MarketRecord>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(BufWriter::new(f), records).map_err(|e| Error::io(path, e))
}

/// Header of the frame CSV: one row per (grid_ts, venue).
pub fn frames_csv_header() -> String {
    let mut cols = vec!["grid_ts".to_string(), "venue".to_string(), "present".to_string()];
    for side in ["bid", "ask"] {
        for k in 1..=crate::BOOK_DEPTH {
            cols.push(format!("{side}{k}_px"));
            cols.push(format!("{side}{k}_qty"));
        }
    }
    for c in ["best_bid", "best_ask", "mid", "buy_volume", "sell_volume"] {
        cols.push(c.to_string());
    }
    cols.join(",")
}

/// Writes frames as CSV. Absent venues get `present = 0` and empty numeric
/// cells; missing depth levels are left empty.
pub fn write_frames_csv<'a, W: Write>(
    mut w: W,
    venues: &[VenueId],
    frames: impl IntoIterator<Item = &'a SampledFrame>,
) -> std::io::Result<()> {
    writeln!(w, "{}", frames_csv_header())?;
    for f in frames {
        write_frame_rows(&mut w, venues, f)?;
    }
    w.flush()
}

/// The CSV rows of one frame, one per venue, without a header.
pub fn write_frame_rows<W: Write>(w: &mut W, venues: &[VenueId], f: &SampledFrame) -> std::io::Result<()> {
    let n_numeric = 4 * crate::BOOK_DEPTH + 5;
    for (vi, venue) in venues.iter().enumerate() {
        write!(w, "{},{}", f.grid_ts, venue)?;
        match f.venues.get(vi).and_then(|v| v.as_ref()) {
            None => {
                w.write_all(b",0")?;
                for _ in 0..n_numeric {
                    w.write_all(b",")?;
                }
            }
            Some(v) => {
                w.write_all(b",1")?;
                for levels in [&v.bids, &v.asks] {
                    for k in 0..crate::BOOK_DEPTH {
                        match levels.get(k) {
                            Some(l) => write!(w, ",{},{}", fmt_sig9(l.price), fmt_sig9(l.qty))?,
                            None => w.write_all(b",,")?,
                        }
                    }
                }
                for x in [v.best_bid, v.best_ask, v.mid, Some(v.buy_volume), Some(v.sell_volume)] {
                    match x {
                        Some(x) => write!(w, ",{}", fmt_sig9(x))?,
                        None => w.write_all(b",")?,
                    }
                }
            }
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}
