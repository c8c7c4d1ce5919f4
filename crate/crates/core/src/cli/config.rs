use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{SplitPreset, TopicConfig};
use crate::dro::AggregatorConfig;
use crate::error::{Error, Result};
use crate::model::{AutoencoderConfig, EncoderConfig};
use crate::numkit::AdamConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorpusSource {
    /// Synthetic corpus generated from a split preset.
    Preset {
        preset: SplitPreset,
        scale: f64,
        #[serde(default = "default_strength")]
        stereotype_strength: f64,
        #[serde(default)]
        seed: u64,
    },
    Jsonl { path: PathBuf },
}

fn default_strength() -> f64 {
    0.9
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<CorpusSource>,
    #[serde(default)]
    pub aggregator: AggregatorConfig,
    #[serde(default)]
    pub model: EncoderConfig,
    #[serde(default)]
    pub autoencoder: AutoencoderConfig,
    #[serde(default)]
    pub optimizer: AdamConfig,
    #[serde(default)]
    pub topics: TopicConfig,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    /// Epochs without held-out improvement before stopping.
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_held_out")]
    pub held_out_fraction: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

fn default_epochs() -> usize {
    20
}

fn default_batch_size() -> usize {
    32
}

fn default_patience() -> usize {
    3
}

fn default_held_out() -> f64 {
    0.1
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            aggregator: AggregatorConfig::default(),
            model: EncoderConfig::default(),
            autoencoder: AutoencoderConfig::default(),
            optimizer: AdamConfig::default(),
            topics: TopicConfig::default(),
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            patience: default_patience(),
            held_out_fraction: default_held_out(),
            seeds: default_seeds(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.aggregator.validate()?;
        self.model.validate()?;
        self.autoencoder.validate()?;
        self.topics.validate()?;
        if !(self.optimizer.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.aggregator.k > self.batch_size {
            return Err(Error::Config(format!(
                "k = {} exceeds batch_size = {}",
                self.aggregator.k, self.batch_size
            )));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if !(self.held_out_fraction > 0.0 && self.held_out_fraction < 1.0) {
            return Err(Error::Config("held_out_fraction must lie in (0, 1)".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if let Some(CorpusSource::Preset {
            scale,
            stereotype_strength,
            ..
        }) = &self.corpus
        {
            if !(*scale > 0.0) {
                return Err(Error::Config("corpus scale must be positive".into()));
            }
            if !(0.0..=1.0).contains(stereotype_strength) {
                return Err(Error::Config("stereotype_strength must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }
}
