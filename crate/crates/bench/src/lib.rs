//! Shared fixtures for the benchmarks.

use crossex_core::exec::{ExecEnv, FeatureScaler, ProblemSpec, Scope};
use crossex_core::pipeline::Market;
use crossex_core::signals::FeatureParams;
use crossex_core::synth::generate;
use crossex_core::{MarketRecord, SynthConfig, VenueId};

pub const MINUTE_NS: i64 = 60_000_000_000;

/// Records of a default synthetic market.
pub fn records(duration_ns: i64) -> Vec<MarketRecord> {
    generate(&SynthConfig::default(), duration_ns).expect("default config").collect()
}

/// A resampled default market with features.
pub fn market(duration_ns: i64) -> Market {
    Market::synthetic(&SynthConfig::default(), duration_ns, FeatureParams::default(), None).expect("default config")
}

/// The cross-scope execution environment on the default target venue.
pub fn cross_env(duration_ns: i64) -> ExecEnv {
    let m = market(duration_ns);
    let target = VenueId::new("beta");
    m.env(&target, Scope::Cross, &ProblemSpec::default(), None::<FeatureScaler>)
        .expect("target venue exists")
}
