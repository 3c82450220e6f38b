//! Episode trace export.

use crate::util::fmt_sig9;
use std::io::{self, Write};

/// One decision of an episode. `cash` is cumulative after this step,
/// terminal settlement included on the last row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: u32,
    pub grid_ts: i64,
    pub mid: f64,
    pub price: f64,
    pub q: u32,
    pub action: u32,
    pub filled: u32,
    pub reward: f64,
    pub cash: f64,
}

/// Write traces as CSV with an `episode` column naming the episode.
pub fn write_traces_csv<W: Write>(mut w: W, episodes: &[(usize, &[TraceRow])]) -> io::Result<()> {
    writeln!(w, "episode,t,grid_ts,mid,price,q,action,filled,reward,cash")?;
    for (id, rows) in episodes {
        for r in rows.iter() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                id,
                r.step,
                r.grid_ts,
                fmt_sig9(r.mid),
                fmt_sig9(r.price),
                r.q,
                r.action,
                r.filled,
                r.reward,
                r.cash
            )?;
        }
    }
    Ok(())
}
