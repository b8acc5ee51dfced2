use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::game::{run_all, ScenarioConfig, Trajectory};
use crate::rng::GENERATOR;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub replica: usize,
    pub master_seed: u64,
    pub stream: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub code_version: String,
    pub generator: String,
    /// Seconds since the Unix epoch. Not part of any reproducible output.
    pub timestamp: u64,
}

impl RunMetadata {
    pub fn now() -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self { code_version: env!("CARGO_PKG_VERSION").to_string(), generator: GENERATOR.to_string(), timestamp }
    }
}

/// A completed run: config snapshot, seed ledger and every trajectory.
#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub config: ScenarioConfig,
    pub seeds: Vec<SeedEntry>,
    pub trajectories: Vec<Trajectory>,
    pub metadata: RunMetadata,
}

#[derive(Serialize)]
struct Manifest<'a> {
    metadata: &'a RunMetadata,
    config: &'a ScenarioConfig,
    seeds: &'a [SeedEntry],
}

impl RunArtifact {
    pub fn execute(config: &ScenarioConfig, jobs: usize) -> Result<Self> {
        let trajectories = run_all(config, jobs)?;
        let seeds = (0..config.replicas)
            .map(|replica| SeedEntry { replica, master_seed: config.seed, stream: replica as u64 })
            .collect();
        Ok(Self { config: config.clone(), seeds, trajectories, metadata: RunMetadata::now() })
    }

    /// Re-run from the snapshot and compare trajectories.
    pub fn reproduces(&self) -> Result<bool> {
        let again = run_all(&self.config, 1)?;
        Ok(again.iter().zip(&self.trajectories).all(|(a, b)| a.records == b.records)
            && again.len() == self.trajectories.len())
    }

    /// `run.json` body: metadata, config snapshot and seed ledger.
    pub fn manifest_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&Manifest {
            metadata: &self.metadata,
            config: &self.config,
            seeds: &self.seeds,
        })?;
        s.push('\n');
        Ok(s)
    }
}
