//! Run manifests: what was run, with which config and seeds, and digests of
//! every artifact written.

use crossex_core::config::ExperimentConfig;
use crossex_core::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Serialize)]
struct Artifact {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config_sha256: String,
    seeds: crossex_core::config::Seeds,
    ppo_seed: u64,
    synth_seed: u64,
    artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Write `<out_dir>/manifest-<command>.json`. The config hash covers the
/// effective config after overrides.
pub fn write(out_dir: &Path, command: &str, cfg: &ExperimentConfig, artifacts: &[PathBuf]) -> Result<()> {
    let arts = artifacts
        .iter()
        .map(|p| {
            Ok(Artifact {
                path: p.display().to_string(),
                sha256: file_digest(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let m = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: sha256_hex(cfg.to_toml().as_bytes()),
        seeds: cfg.seeds,
        ppo_seed: cfg.ppo.seed,
        synth_seed: cfg.synth.seed,
        artifacts: arts,
    };
    let path = out_dir.join(format!("manifest-{command}.json"));
    let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_matches_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
