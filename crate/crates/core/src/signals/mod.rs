//! Single-venue and cross-venue microstructure features, and the
//! regression machinery that measures how well they predict future returns.

mod features;
mod regression;
mod table;

pub use features::{
    compute_features, cross_sum, future_return, imb, imb_series, oim, oim_series, oimn, spread,
    spread_norm, spread_series, FeatureParams, FeatureScope, FeatureSeries, MarketFeatures,
};
pub use regression::{
    bin_curve, horizon_report, ols_fit, paired_block_bootstrap, r2_score, BinPoint, BinRange,
    HorizonFit, OlsFit, RegressionReport,
};
pub use table::{MarketTable, VenueColumns};

use crate::error::{Error, Result};
use crate::GRID_NS;
use serde::{Deserialize, Serialize};

/// Prediction horizons, in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSpec {
    pub horizons_ms: Vec<u64>,
}

impl Default for HorizonSpec {
    fn default() -> Self {
        HorizonSpec {
            horizons_ms: vec![100, 200, 500, 1_000, 5_000, 10_000],
        }
    }
}

impl HorizonSpec {
    pub fn validate(&self) -> Result<()> {
        let step_ms = (GRID_NS / 1_000_000) as u64;
        if self.horizons_ms.is_empty() {
            return Err(Error::InvalidSpec("at least one horizon required".into()));
        }
        for &h in &self.horizons_ms {
            if h == 0 || h % step_ms != 0 {
                return Err(Error::InvalidSpec(format!(
                    "horizon {h}ms must be a positive multiple of {step_ms}ms"
                )));
            }
        }
        Ok(())
    }

    /// Horizons in grid steps.
    pub fn steps(&self) -> Vec<usize> {
        let step_ms = (GRID_NS / 1_000_000) as u64;
        self.horizons_ms.iter().map(|h| (h / step_ms) as usize).collect()
    }
}
