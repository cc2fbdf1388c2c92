//! Resumable estimator state.
//!
//! JSON layout:
//! `{config_digest, seed, permutations_completed, players: [{t, mean, m2, converged, reason}]}`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::stats::PlayerStats;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub config_digest: String,
    pub seed: u64,
    pub permutations_completed: u64,
    pub players: Vec<PlayerStats>,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(format!("malformed checkpoint: {e}")))
    }

    /// Atomic write (temp file in the same directory, then rename).
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = self.to_json()?;
        crate::io::write_atomic(path, |f| f.write_all(json.as_bytes()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub(crate) fn check_compatible(&self, digest: &str, seed: u64, n_players: usize) -> Result<()> {
        if self.config_digest != digest {
            return Err(Error::Checkpoint(format!(
                "config digest {} does not match current run {}",
                self.config_digest, digest
            )));
        }
        if self.seed != seed {
            return Err(Error::Checkpoint(format!("seed {} does not match current run {seed}", self.seed)));
        }
        if self.players.len() != n_players {
            return Err(Error::Checkpoint(format!(
                "checkpoint has {} players, game has {n_players}",
                self.players.len()
            )));
        }
        Ok(())
    }
}
