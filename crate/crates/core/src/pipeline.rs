//! Glue from captured records to execution environments and agents.

use crate::capture::{venues_of, MarketRecord, Resampler, VenueId};
use crate::error::{Error, Result};
use crate::exec::{ExecData, ExecEnv, FeatureScaler, ProblemSpec, Scope};
use crate::ppo::{ExecTraining, PolicyParams, PpoConfig, Trainer, UpdateStats};
use crate::signals::{compute_features, FeatureParams, MarketFeatures, MarketTable};
use crate::GRID_NS;
use std::sync::Arc;

/// A resampled market with its features.
pub struct Market {
    pub table: MarketTable,
    pub features: MarketFeatures,
    pub params: FeatureParams,
}

impl Market {
    /// Resample sorted records onto the grid and compute features. Bid
    /// ladders are kept for `keep_levels_for` (needed by book-walk fills).
    pub fn from_records(records: &[MarketRecord], params: FeatureParams, keep_levels_for: Option<&VenueId>) -> Result<Self> {
        let venues = venues_of(records);
        Self::from_stream(records.iter().cloned().map(Ok), venues, params, keep_levels_for)
    }

    /// Like [`Market::from_records`] for a sorted record stream over known
    /// venues; records are consumed without being collected.
    pub fn from_stream<I>(input: I, venues: Vec<VenueId>, params: FeatureParams, keep_levels_for: Option<&VenueId>) -> Result<Self>
    where
        I: Iterator<Item = Result<MarketRecord>>,
    {
        let keep: Vec<usize> = keep_levels_for
            .and_then(|v| venues.iter().position(|x| x == v))
            .into_iter()
            .collect();
        let frames = Resampler::new(input, venues.clone(), GRID_NS);
        let table = MarketTable::from_frames(frames, venues, &keep)?;
        let features = compute_features(&table, &params);
        Ok(Market { table, features, params })
    }

    /// Generate a synthetic market of `duration_ns` and resample it.
    pub fn synthetic(cfg: &crate::SynthConfig, duration_ns: i64, params: FeatureParams, keep_levels_for: Option<&VenueId>) -> Result<Self> {
        let stream = crate::synth::generate(cfg, duration_ns)?;
        Self::from_stream(stream.map(Ok), cfg.venue_ids(), params, keep_levels_for)
    }

    pub fn venue(&self, name: &str) -> Result<VenueId> {
        let id = VenueId::new(name);
        self.table
            .venue_index(&id)
            .map(|_| id)
            .ok_or_else(|| Error::UnknownVenue(name.to_string()))
    }

    /// Execution environment on `target` for one feature scope. Without a
    /// scaler, one is fitted on this market.
    pub fn env(&self, target: &VenueId, scope: Scope, problem: &ProblemSpec, scaler: Option<FeatureScaler>) -> Result<ExecEnv> {
        let data = ExecData::build(&self.table, &self.features, target, scope, self.params.norm_window())?;
        let scaler = scaler.unwrap_or_else(|| FeatureScaler::fit(&data));
        ExecEnv::new(Arc::new(data), problem.clone(), scaler)
    }
}

/// Train a fresh agent for `updates` PPO updates.
pub fn train_agent<F: FnMut(&UpdateStats)>(env: ExecEnv, cfg: &PpoConfig, updates: usize, log: F) -> Result<PolicyParams> {
    let training = ExecTraining {
        env,
        exploring_starts: cfg.exploring_starts,
    };
    let mut trainer = Trainer::new(training, cfg.clone())?;
    trainer.train(updates, log)?;
    Ok(trainer.into_params())
}

/// Execution data for each of `scopes` over independent synthetic market
/// segments, one per seed (the config's own seed is replaced).
pub fn synthetic_exec_data(
    cfg: &crate::SynthConfig,
    seeds: &[u64],
    duration_ns: i64,
    params: FeatureParams,
    target: &VenueId,
    scopes: &[Scope],
) -> Result<Vec<ExecData>> {
    use rayon::prelude::*;
    let per_seed: Vec<Vec<ExecData>> = seeds
        .par_iter()
        .map(|&seed| {
            let c = crate::SynthConfig { seed, ..cfg.clone() };
            let m = Market::synthetic(&c, duration_ns, params, Some(target))?;
            scopes
                .iter()
                .map(|&s| ExecData::build(&m.table, &m.features, target, s, params.norm_window()))
                .collect()
        })
        .collect::<Result<_>>()?;
    (0..scopes.len())
        .map(|k| ExecData::concat(per_seed.iter().map(|v| v[k].clone()).collect()))
        .collect()
}
