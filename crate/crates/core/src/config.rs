//! Declarative experiment configuration (TOML).
//!
//! Every section has defaults, unknown fields are rejected, and the file
//! must carry `version = 1`.

use crate::error::{Error, Result};
use crate::exec::{ProblemSpec, Scope};
use crate::ppo::PpoConfig;
use crate::signals::{FeatureParams, HorizonSpec};
use crate::synth::SynthConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub market: MarketConfig,
    #[serde(default)]
    pub synth: SynthConfig,
    #[serde(default)]
    pub signals: SignalsConfig,
    #[serde(default)]
    pub problem: ProblemSpec,
    #[serde(default)]
    pub ppo: PpoConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub evaluate: EvaluateConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Seeds {
    /// First synthetic market seed (see [`MarketConfig`]).
    pub market: u64,
    pub train: u64,
    pub evaluate: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            market: 1,
            train: 11,
            evaluate: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    /// Training capture (NDJSON). Generated from `[synth]` when absent.
    pub capture: Option<PathBuf>,
    /// Held-out evaluation capture. Generated from `[synth]` when absent.
    pub eval_capture: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub checkpoint_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            capture: None,
            eval_capture: None,
            out_dir: PathBuf::from("out"),
            checkpoint_dir: PathBuf::from("out/checkpoints"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarketConfig {
    /// Venue the agent trades on and whose returns are predicted.
    pub target: String,
    /// Length of each generated market segment, seconds.
    pub train_duration_s: u64,
    pub eval_duration_s: u64,
    /// Independent generated segments for training and evaluation. Training
    /// segment `k` uses seed `seeds.market + k`; evaluation segments continue
    /// after the last training seed.
    pub train_segments: u64,
    pub eval_segments: u64,
}

impl Default for MarketConfig {
    fn default() -> Self {
        MarketConfig {
            target: "beta".into(),
            train_duration_s: 1_800,
            eval_duration_s: 1_800,
            train_segments: 8,
            eval_segments: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalsConfig {
    pub features: FeatureParams,
    pub horizons: HorizonSpec,
    /// Horizon of the bin curves, ms.
    pub bin_horizon_ms: u64,
    pub bins: usize,
}

impl Default for SignalsConfig {
    fn default() -> Self {
        SignalsConfig {
            features: FeatureParams::default(),
            horizons: HorizonSpec::default(),
            bin_horizon_ms: 500,
            bins: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Scopes to train, one agent each.
    pub arms: Vec<Scope>,
    pub updates: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            arms: vec![Scope::Single, Scope::Cross],
            updates: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateConfig {
    pub episodes: usize,
    /// Arms to compare besides TWAP; each needs a checkpoint.
    pub arms: Vec<Scope>,
    pub histogram_bins: usize,
    /// Episodes whose decision states feed the heatmap.
    pub heatmap_episodes: usize,
    /// Episode traces written per policy.
    pub traces: usize,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig {
            episodes: 1_000,
            arms: vec![Scope::Single, Scope::Cross],
            histogram_bins: 40,
            heatmap_episodes: 200,
            traces: 3,
        }
    }
}

/// Environment variables that override paths.
pub const ENV_CAPTURE: &str = "CROSSEX_CAPTURE";
pub const ENV_EVAL_CAPTURE: &str = "CROSSEX_EVAL_CAPTURE";
pub const ENV_OUT_DIR: &str = "CROSSEX_OUT_DIR";
pub const ENV_CHECKPOINT_DIR: &str = "CROSSEX_CHECKPOINT_DIR";

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            seeds: Seeds::default(),
            paths: Paths::default(),
            market: MarketConfig::default(),
            synth: SynthConfig::default(),
            signals: SignalsConfig::default(),
            problem: ProblemSpec::default(),
            ppo: PpoConfig::default(),
            train: TrainConfig::default(),
            evaluate: EvaluateConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, file: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| parse_error(file, &e))?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::ConfigParse {
                file: file.to_string(),
                field: Some("version".into()),
                message: format!("unsupported version {}, expected {CONFIG_VERSION}", cfg.version),
            });
        }
        cfg.validate().map_err(|e| Error::ConfigParse {
            file: file.to_string(),
            field: None,
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn train_seeds(&self) -> Vec<u64> {
        (0..self.market.train_segments).map(|k| self.seeds.market + k).collect()
    }

    pub fn eval_seeds(&self) -> Vec<u64> {
        let first = self.seeds.market + self.market.train_segments;
        (0..self.market.eval_segments).map(|k| first + k).collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.problem.validate()?;
        self.ppo.validate()?;
        self.signals.horizons.validate()?;
        if self.market.train_segments == 0 || self.market.eval_segments == 0 {
            return Err(Error::InvalidConfig("market segment counts must be >= 1".into()));
        }
        if !self.synth.venues.contains(&self.market.target) && self.paths.capture.is_none() {
            return Err(Error::UnknownVenue(self.market.target.clone()));
        }
        Ok(())
    }

    /// Apply path overrides from a variable lookup (normally the process
    /// environment).
    pub fn apply_env<F: Fn(&str) -> Option<String>>(&mut self, var: F) {
        if let Some(v) = var(ENV_CAPTURE) {
            self.paths.capture = Some(v.into());
        }
        if let Some(v) = var(ENV_EVAL_CAPTURE) {
            self.paths.eval_capture = Some(v.into());
        }
        if let Some(v) = var(ENV_OUT_DIR) {
            self.paths.out_dir = v.into();
        }
        if let Some(v) = var(ENV_CHECKPOINT_DIR) {
            self.paths.checkpoint_dir = v.into();
        }
    }
}

fn parse_error(file: &str, e: &toml::de::Error) -> Error {
    let message = e.message().to_string();
    let field = message
        .strip_prefix("unknown field `")
        .and_then(|rest| rest.split('`').next())
        .map(str::to_string)
        .or_else(|| message.strip_prefix("missing field `").and_then(|r| r.split('`').next()).map(str::to_string));
    Error::ConfigParse {
        file: file.to_string(),
        field,
        message,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ExperimentConfig::from_toml("version = 1\n", "t.toml").unwrap();
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn round_trips_through_toml() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&c.to_toml(), "t.toml").unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_field_is_named() {
        let err = ExperimentConfig::from_toml("version = 1\n[ppo]\nclip = 0.3\n", "t.toml").unwrap_err();
        match err {
            Error::ConfigParse { field, .. } => assert_eq!(field.as_deref(), Some("clip")),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn version_is_required_and_checked() {
        assert!(ExperimentConfig::from_toml("", "t.toml").is_err());
        let err = ExperimentConfig::from_toml("version = 2\n", "t.toml").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { field: Some(f), .. } if f == "version"));
    }

    #[test]
    fn env_overrides_paths_only() {
        let mut c = ExperimentConfig::default();
        c.apply_env(|k| (k == ENV_OUT_DIR).then(|| "/tmp/x".to_string()));
        assert_eq!(c.paths.out_dir, PathBuf::from("/tmp/x"));
        assert_eq!(c.paths.capture, None);
    }
}
