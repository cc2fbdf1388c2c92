//! JSON game specifications.
//!
//! ```json
//! {"family": "additive", "base": 0.5, "weights": [0.2, -0.1, 0.3]}
//! {"family": "glove"}
//! {"family": "transformer", "weight_seed": 7, "language": "en", "dataset_size": 512}
//! ```

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Game;
use crate::games::dataset::generate_with_len;
use crate::games::{
    make_additive_game, make_glove_game, make_planted_game, make_unanimity_game, AdditiveGameSpec, ExternalGame,
    PlantedMultilingualSpec, SyntheticDataset, ToyTransformer, ToyTransformerSpec, TransformerGame, DEFAULT_SEQ_LEN,
    DEFAULT_TIMEOUT,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedGameSpec {
    #[serde(flatten)]
    pub family: PlantedMultilingualSpec,
    /// Language to play; defaults to the first in `languages`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
}

fn default_language() -> String {
    "en".to_string()
}

fn default_dataset_size() -> usize {
    512
}

fn default_seq_len() -> usize {
    DEFAULT_SEQ_LEN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformerGameSpec {
    #[serde(flatten)]
    pub model: ToyTransformerSpec,
    #[serde(default = "default_language")]
    pub language: String,
    #[serde(default = "default_dataset_size")]
    pub dataset_size: usize,
    #[serde(default)]
    pub dataset_seed: u64,
    #[serde(default = "default_seq_len")]
    pub seq_len: usize,
}

impl TransformerGameSpec {
    pub fn dataset(&self) -> Result<SyntheticDataset> {
        generate_with_len(&self.model, &self.language, self.dataset_size, self.seq_len, self.dataset_seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum GameSpec {
    Additive(AdditiveGameSpec),
    Planted(PlantedGameSpec),
    Unanimity {
        n: usize,
    },
    Glove,
    Transformer(TransformerGameSpec),
    External {
        cmd: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        timeout_secs: Option<u64>,
    },
}

impl GameSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("game spec: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn family(&self) -> &'static str {
        match self {
            GameSpec::Additive(_) => "additive",
            GameSpec::Planted(_) => "planted",
            GameSpec::Unanimity { .. } => "unanimity",
            GameSpec::Glove => "glove",
            GameSpec::Transformer(_) => "transformer",
            GameSpec::External { .. } => "external",
        }
    }

    pub fn build(&self) -> Result<Game> {
        match self {
            GameSpec::Additive(s) => make_additive_game(s.clone()),
            GameSpec::Planted(p) => {
                let lang = match &p.language {
                    Some(l) => l.clone(),
                    None => p
                        .family
                        .languages
                        .first()
                        .cloned()
                        .ok_or_else(|| Error::arg("planted family needs at least one language"))?,
                };
                make_planted_game(&p.family, &lang)
            }
            GameSpec::Unanimity { n } => make_unanimity_game(*n),
            GameSpec::Glove => make_glove_game(),
            GameSpec::Transformer(t) => {
                let model = ToyTransformer::new(t.model.clone())?;
                Game::new(TransformerGame::new(model, t.dataset()?)?)
            }
            GameSpec::External { cmd, timeout_secs } => {
                let timeout = timeout_secs.map_or(DEFAULT_TIMEOUT, Duration::from_secs);
                ExternalGame::spawn(cmd, timeout)?.into_game()
            }
        }
    }
}
