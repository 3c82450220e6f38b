//! Cross-venue optimal execution laboratory.
//!
//! The crate is organised as a pipeline:
//!
//! - [`capture`]: canonical multi-venue record format, clock alignment, local
//!   order book reconstruction and no-lookahead resampling onto a 10ms grid.
//! - [`lob`]: order book queries and market-order fill simulation.
//! - [`synth`]: seeded leader/follower markets with planted order-flow signals.
//! - [`signals`]: single- and cross-venue features plus regression reports.
//! - [`exec`]: the discrete sell-side execution MDP.
//! - [`ppo`]: actor-critic PPO with hand-derived gradients and action masking.
//! - [`eval`]: TWAP baseline, cash / implementation shortfall metrics,
//!   paired policy comparison and action heatmaps.
//! - [`config`]: declarative experiment configuration.

pub mod capture;
pub mod config;
pub mod error;
pub mod eval;
pub mod exec;
pub mod lob;
pub mod pipeline;
pub mod ppo;
pub mod signals;
pub mod synth;
pub mod util;

pub use capture::{
    BookLevels, Level, LocalBook, MarketRecord, Payload, RecordKind, SampledFrame, TakerSide,
    Ticker, VenueFrame, VenueId,
};
pub use error::{Error, Result};
pub use exec::{ExecEnv, ExecState, FillModel, ProblemSpec, Scope, StepResult};
pub use lob::BookView;
pub use ppo::{PolicyParams, PpoConfig};
pub use signals::{FeatureSeries, HorizonSpec, RegressionReport};
pub use synth::SynthConfig;

/// Sampling interval of the resampled grid, in nanoseconds.
pub const GRID_NS: i64 = 10_000_000;

/// Number of book levels per side that features and frames use.
pub const BOOK_DEPTH: usize = 5;
