//! Seeded synthetic multi-venue markets.
//!
//! The leader venue's log price follows a Gaussian random walk whose
//! per-step mean is a persistent AR(1) drift. Followers replay the leader
//! price after a fixed lag, shifted by a constant basis and perturbed by
//! independent noise. Every venue's taker flow and book depth tilt reveal the
//! current drift (and therefore the expected next leader return) with weight
//! `signal_strength` / `book_signal_strength`, mixed with venue-specific
//! noise. Summing a feature across venues therefore averages out noise,
//! which is the property the cross-venue features exploit.

use crate::capture::{BookLevels, Level, LocalBook, MarketRecord, Payload, TakerSide, Ticker, Trade, VenueId};
use crate::error::{Error, Result};
use crate::{BOOK_DEPTH, GRID_NS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

const MS: i64 = 1_000_000;
const US: i64 = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub seed: u64,
    /// Venue names; the number of venues is `venues.len()`.
    pub venues: Vec<String>,
    /// Index of the price-leading venue.
    pub leader: usize,
    /// Delay of each venue behind the leader, ms (the leader's entry is ignored).
    pub lag_ms: Vec<u64>,
    /// Constant price offset of each venue, price units.
    pub basis: Vec<f64>,
    /// Venue-clock latency per venue, ms. Empty means no venue timestamps.
    pub exch_latency_ms: Vec<f64>,
    /// First grid time, ns. Must be a multiple of 10ms.
    pub start_ns: i64,
    pub initial_price: f64,
    /// Standard deviation of the 10ms log return noise.
    pub vol: f64,
    /// Stationary standard deviation of the latent per-10ms drift.
    pub drift_vol: f64,
    pub drift_halflife_ms: f64,
    /// Relative standard deviation of the follower price noise.
    pub follower_noise: f64,
    /// Weight of the drift in each venue's taker flow, in `[0, 1]`.
    pub signal_strength: f64,
    /// Weight of the drift in each venue's depth tilt, in `[0, 1]`.
    pub book_signal_strength: f64,
    /// Mean two-sided base taker volume per venue per 10ms.
    pub trade_intensity: f64,
    /// Net taker volume per unit of the flow signal.
    pub flow_scale: f64,
    /// Mean resting quantity at each of the five levels.
    pub depth_profile: Vec<f64>,
    /// Maximum fractional tilt of bid versus ask depth.
    pub book_skew: f64,
    /// Relative half-width of the uniform per-level quantity jitter.
    pub depth_jitter: f64,
    pub tick: f64,
    pub spread_ticks: u32,
    pub level_spacing_ticks: u32,
    /// Interval between book deltas, ms; tickers are sent every 10ms. Deltas
    /// slower than the price drift let tickers strip the stale ladder.
    pub book_interval_ms: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 1,
            venues: vec!["alpha".into(), "beta".into(), "gamma".into()],
            leader: 0,
            lag_ms: vec![0, 200, 200],
            basis: vec![0.0, 0.5, -1.5],
            exch_latency_ms: vec![],
            start_ns: 1_700_000_000_000_000_000,
            initial_price: 20_000.0,
            vol: 2e-5,
            drift_vol: 8e-7,
            drift_halflife_ms: 5_000.0,
            follower_noise: 1e-5,
            signal_strength: 0.5,
            book_signal_strength: 0.5,
            trade_intensity: 1.0,
            flow_scale: 1.0,
            depth_profile: vec![2.0, 3.0, 4.0, 5.0, 6.0],
            book_skew: 0.5,
            depth_jitter: 0.1,
            tick: 0.1,
            spread_ticks: 1,
            level_spacing_ticks: 1,
            book_interval_ms: 10,
        }
    }
}

impl SynthConfig {
    pub fn n_venues(&self) -> usize {
        self.venues.len()
    }

    pub fn venue_ids(&self) -> Vec<VenueId> {
        self.venues.iter().map(|v| VenueId::new(v.clone())).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.venues.len();
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if n == 0 {
            return bad("at least one venue required".into());
        }
        if self.leader >= n {
            return bad(format!("leader index {} out of range", self.leader));
        }
        if self.lag_ms.len() != n || self.basis.len() != n {
            return bad("lag_ms and basis need one entry per venue".into());
        }
        if !self.exch_latency_ms.is_empty() && self.exch_latency_ms.len() != n {
            return bad("exch_latency_ms must be empty or have one entry per venue".into());
        }
        if self.lag_ms.iter().any(|&l| l as i64 % (GRID_NS / MS) != 0) {
            return bad("lag_ms must be multiples of 10ms".into());
        }
        if self.start_ns.rem_euclid(GRID_NS) != 0 {
            return bad("start_ns must be a multiple of 10ms".into());
        }
        for (name, v) in [
            ("vol", self.vol),
            ("drift_vol", self.drift_vol),
            ("follower_noise", self.follower_noise),
            ("trade_intensity", self.trade_intensity),
            ("flow_scale", self.flow_scale),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0"));
            }
        }
        for (name, v) in [
            ("signal_strength", self.signal_strength),
            ("book_signal_strength", self.book_signal_strength),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        if !(0.0..1.0).contains(&self.book_skew) || !(0.0..1.0).contains(&self.depth_jitter) {
            return bad("book_skew and depth_jitter must lie in [0, 1)".into());
        }
        if self.depth_profile.len() != BOOK_DEPTH || self.depth_profile.iter().any(|&q| !(q > 0.0)) {
            return bad(format!("depth_profile needs {BOOK_DEPTH} positive entries"));
        }
        if !(self.initial_price > 0.0 && self.tick > 0.0) {
            return bad("initial_price and tick must be > 0".into());
        }
        if (1.0 / self.tick - (1.0 / self.tick).round()).abs() > 1e-9 {
            return bad("tick must divide 1".into());
        }
        if self.spread_ticks == 0 || self.level_spacing_ticks == 0 {
            return bad("spread_ticks and level_spacing_ticks must be >= 1".into());
        }
        if self.drift_halflife_ms <= 0.0 {
            return bad("drift_halflife_ms must be > 0".into());
        }
        if self.book_interval_ms == 0 || self.book_interval_ms as i64 % (GRID_NS / MS) != 0 {
            return bad("book_interval_ms must be a positive multiple of 10".into());
        }
        // the per-venue intra-step offsets must stay inside one grid interval
        if n > 400 {
            return bad("at most 400 venues".into());
        }
        Ok(())
    }
}

/// Streaming generator; yields records in `local_ts` order.
pub struct SynthMarket {
    cfg: SynthConfig,
    rng: ChaCha8Rng,
    ids: Vec<VenueId>,
    steps: u64,
    step: u64,
    drift: f64,
    phi: f64,
    log_px: f64,
    history: VecDeque<f64>,
    max_lag_steps: usize,
    replicas: Vec<LocalBook>,
    ticks_per_unit: f64,
    buf: VecDeque<MarketRecord>,
    base_exp: Option<Exp<f64>>,
}

/// Generates `duration_ns` of market data (rounded down to whole 10ms steps).
pub fn generate(cfg: &SynthConfig, duration_ns: i64) -> Result<SynthMarket> {
    SynthMarket::new(cfg.clone(), duration_ns)
}

impl SynthMarket {
    pub fn new(cfg: SynthConfig, duration_ns: i64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let phi = 0.5f64.powf((GRID_NS / MS) as f64 / cfg.drift_halflife_ms);
        let drift = cfg.drift_vol * rng.sample::<f64, _>(StandardNormal);
        let max_lag_steps = cfg
            .lag_ms
            .iter()
            .map(|&l| (l as i64 * MS / GRID_NS) as usize)
            .max()
            .unwrap_or(0);
        let base_exp = (cfg.trade_intensity > 0.0).then(|| Exp::new(1.0 / cfg.trade_intensity).expect("rate > 0"));
        Ok(SynthMarket {
            ids: cfg.venue_ids(),
            replicas: vec![LocalBook::new(); cfg.n_venues()],
            ticks_per_unit: (1.0 / cfg.tick).round(),
            steps: (duration_ns.max(0) / GRID_NS) as u64,
            step: 0,
            drift,
            phi,
            log_px: 0.0,
            history: VecDeque::with_capacity(max_lag_steps + 1),
            max_lag_steps,
            buf: VecDeque::new(),
            base_exp,
            cfg,
            rng,
        })
    }

    pub fn venue_ids(&self) -> &[VenueId] {
        &self.ids
    }

    fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    fn px(&self, ticks: i64) -> f64 {
        ticks as f64 / self.ticks_per_unit
    }

    fn qty(x: f64) -> f64 {
        ((x * 1e4).round() / 1e4).max(1e-4)
    }

    /// Signal read by one venue: `s * u + sqrt(1 - s^2) * noise`.
    fn reading(&mut self, u: f64, strength: f64) -> f64 {
        let e = self.normal();
        strength * u + (1.0 - strength * strength).sqrt() * e
    }

    fn desired_book(&mut self, mid: f64, tilt: f64) -> (BookLevels, Ticker) {
        let tick = 1.0 / self.ticks_per_unit;
        let half = self.cfg.spread_ticks as f64 * tick / 2.0;
        let bid1 = ((mid - half) * self.ticks_per_unit).floor() as i64;
        let ask1 = bid1 + self.cfg.spread_ticks as i64;
        let spacing = self.cfg.level_spacing_ticks as i64;
        let mut bids = Vec::with_capacity(BOOK_DEPTH);
        let mut asks = Vec::with_capacity(BOOK_DEPTH);
        for k in 0..BOOK_DEPTH {
            let base = self.cfg.depth_profile[k];
            let jb = 1.0 + self.cfg.depth_jitter * (2.0 * self.rng.random::<f64>() - 1.0);
            let ja = 1.0 + self.cfg.depth_jitter * (2.0 * self.rng.random::<f64>() - 1.0);
            bids.push(Level::new(self.px(bid1 - k as i64 * spacing), Self::qty(base * (1.0 + tilt) * jb)));
            asks.push(Level::new(self.px(ask1 + k as i64 * spacing), Self::qty(base * (1.0 - tilt) * ja)));
        }
        let ticker = Ticker {
            bid_price: bids[0].price,
            bid_qty: bids[0].qty,
            ask_price: asks[0].price,
            ask_qty: asks[0].qty,
        };
        (BookLevels { bids, asks }, ticker)
    }

    fn diff(current: &LocalBook, desired: &BookLevels) -> BookLevels {
        let mut out = BookLevels::default();
        let cur_b = current.top_bids(usize::MAX);
        let cur_a = current.top_asks(usize::MAX);
        for (cur, want, dst) in [(&cur_b, &desired.bids, &mut out.bids), (&cur_a, &desired.asks, &mut out.asks)] {
            for l in cur {
                if !want.iter().any(|w| w.price == l.price) {
                    dst.push(Level::new(l.price, 0.0));
                }
            }
            for w in want {
                if !cur.iter().any(|l| l.price == w.price && l.qty == w.qty) {
                    dst.push(*w);
                }
            }
        }
        out
    }

    fn produce_step(&mut self) {
        let k = self.step;
        let grid_ts = self.cfg.start_ns + k as i64 * GRID_NS;
        let window_start = grid_ts - GRID_NS;

        // leader price path; the drift that will move the next return is
        // the one revealed by this step's flow
        if k > 0 {
            let eps = self.normal();
            self.log_px += self.drift + self.cfg.vol * eps;
            let xi = self.normal();
            self.drift = self.phi * self.drift + (1.0 - self.phi * self.phi).sqrt() * self.cfg.drift_vol * xi;
        }
        let leader_px = self.cfg.initial_price * self.log_px.exp();
        self.history.push_back(leader_px);
        if self.history.len() > self.max_lag_steps + 1 {
            self.history.pop_front();
        }
        let u = if self.cfg.drift_vol > 0.0 {
            self.drift / self.cfg.drift_vol
        } else {
            0.0
        };

        let book_step = k % (self.cfg.book_interval_ms * MS as u64 / GRID_NS as u64) == 0;
        let n = self.ids.len();
        for j in 0..n {
            let off = j as i64 * 10 * US;
            let mid = if j == self.cfg.leader {
                leader_px
            } else {
                let lag = (self.cfg.lag_ms[j] as i64 * MS / GRID_NS) as usize;
                let idx = self.history.len().saturating_sub(1 + lag);
                let noise = self.normal();
                self.history[idx] * (1.0 + self.cfg.follower_noise * noise) + self.cfg.basis[j]
            };
            let tilt_read = self.reading(u, self.cfg.book_signal_strength);
            let tilt = self.cfg.book_skew * tilt_read.tanh();
            let (book, ticker) = self.desired_book(mid, tilt);

            let flow = self.reading(u, self.cfg.signal_strength) * self.cfg.flow_scale;
            let base = self.base_exp.map(|d| d.sample(&mut self.rng)).unwrap_or(0.0);
            let exch = |ts: i64| -> Option<i64> {
                self.cfg
                    .exch_latency_ms
                    .get(j)
                    .map(|lat| ts - (lat * MS as f64).round() as i64)
            };
            let venue = self.ids[j].clone();
            let push = |ts: i64, payload: Payload, buf: &mut VecDeque<MarketRecord>| {
                buf.push_back(MarketRecord {
                    venue: venue.clone(),
                    local_ts: ts,
                    exch_ts: exch(ts),
                    payload,
                });
            };
            let mut out = VecDeque::new();
            let buy = base + flow.max(0.0);
            let sell = base + (-flow).max(0.0);
            if buy > 0.0 {
                push(
                    window_start + MS + off,
                    Payload::Trade(Trade {
                        price: ticker.ask_price,
                        qty: Self::qty(buy),
                        side: TakerSide::Buy,
                    }),
                    &mut out,
                );
            }
            if sell > 0.0 {
                push(
                    window_start + 2 * MS + off,
                    Payload::Trade(Trade {
                        price: ticker.bid_price,
                        qty: Self::qty(sell),
                        side: TakerSide::Sell,
                    }),
                    &mut out,
                );
            }
            if k == 0 {
                self.replicas[j].apply_snapshot(&book, window_start + 4 * MS + off);
                push(window_start + 4 * MS + off, Payload::BookSnapshot(book), &mut out);
            } else if book_step {
                let delta = Self::diff(&self.replicas[j], &book);
                self.replicas[j].apply_delta(&delta, window_start + 4 * MS + off);
                push(window_start + 4 * MS + off, Payload::BookDelta(delta), &mut out);
            }
            self.replicas[j]
                .merge_ticker(&ticker, window_start + 5 * MS + off)
                .expect("generated ticker is uncrossed");
            push(window_start + 5 * MS + off, Payload::Ticker(ticker), &mut out);
            self.buf.extend(out);
        }
        self.buf.make_contiguous().sort_by_key(|r| r.local_ts);
        self.step += 1;
    }
}

impl Iterator for SynthMarket {
    type Item = MarketRecord;

    fn next(&mut self) -> Option<MarketRecord> {
        while self.buf.is_empty() {
            if self.step >= self.steps {
                return None;
            }
            self.produce_step();
        }
        self.buf.pop_front()
    }
}

/// A single-venue market with constant mid `price`, a constant symmetric
/// five-level book and no trades. The book is snapshotted once and then
/// re-quoted every 100ms so the capture spans `duration_ns`.
pub fn flat_market(price: f64, duration_ns: i64) -> Vec<MarketRecord> {
    flat_market_on(VenueId::new("flat"), price, duration_ns)
}

pub fn flat_market_on(venue: VenueId, price: f64, duration_ns: i64) -> Vec<MarketRecord> {
    let levels = BookLevels {
        bids: (0..BOOK_DEPTH).map(|k| Level::new(price - 0.5 - k as f64, 1.0)).collect(),
        asks: (0..BOOK_DEPTH).map(|k| Level::new(price + 0.5 + k as f64, 1.0)).collect(),
    };
    let ticker = Ticker {
        bid_price: price - 0.5,
        bid_qty: 1.0,
        ask_price: price + 0.5,
        ask_qty: 1.0,
    };
    let mut out = vec![MarketRecord {
        venue: venue.clone(),
        local_ts: 0,
        exch_ts: None,
        payload: Payload::BookSnapshot(levels),
    }];
    let mut ts = 100 * MS;
    while ts <= duration_ns {
        out.push(MarketRecord {
            venue: venue.clone(),
            local_ts: ts,
            exch_ts: None,
            payload: Payload::Ticker(ticker),
        });
        ts += 100 * MS;
    }
    out
}
