//! JSON checkpoints of a trained policy and everything needed to run it.

use super::{PolicyParams, PpoConfig};
use crate::error::{Error, Result};
use crate::exec::{FeatureScaler, ProblemSpec, Scope};
use crate::signals::FeatureParams;
use crate::VenueId;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub version: u32,
    pub scope: Scope,
    pub venue: VenueId,
    pub problem: ProblemSpec,
    pub features: FeatureParams,
    pub ppo: PpoConfig,
    pub updates: u64,
    pub scaler: FeatureScaler,
    pub params: PolicyParams,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Checkpoint(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "{}: unsupported version {}",
                path.display(),
                ck.version
            )));
        }
        Ok(ck)
    }
}
