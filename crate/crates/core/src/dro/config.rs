use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregatorKind {
    Erm,
    Group,
    TopicCvar,
    Topk,
    TopkGroup,
    TopkAe,
    Robustdebias,
}

impl AggregatorKind {
    pub const ALL: [AggregatorKind; 7] = [
        AggregatorKind::Erm,
        AggregatorKind::Group,
        AggregatorKind::TopicCvar,
        AggregatorKind::Topk,
        AggregatorKind::TopkGroup,
        AggregatorKind::TopkAe,
        AggregatorKind::Robustdebias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggregatorKind::Erm => "erm",
            AggregatorKind::Group => "group",
            AggregatorKind::TopicCvar => "topic_cvar",
            AggregatorKind::Topk => "topk",
            AggregatorKind::TopkGroup => "topk_group",
            AggregatorKind::TopkAe => "topk_ae",
            AggregatorKind::Robustdebias => "robustdebias",
        }
    }

    pub fn uses_autoencoder(self) -> bool {
        matches!(self, AggregatorKind::TopkAe | AggregatorKind::Robustdebias)
    }
}

impl fmt::Display for AggregatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AggregatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
            Error::Config(format!("unknown dro kind `{s}`; expected one of: {}", names.join(", ")))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DiversitySign {
    /// `L_AE = L_recon + β·L_div`.
    Literal,
    /// `L_AE = L_recon − β·L_div`: pushes bottleneck rows apart.
    #[default]
    Negated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GroupWeighting {
    /// `Σ_g (b_g / b) · mean_g`.
    #[default]
    Frequency,
    /// `max_g mean_g`.
    Worst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum CvarScope {
    /// Percentile over this batch's losses for the topic.
    #[default]
    Batch,
    /// Percentile over a sliding window of the topic's most recent losses.
    History { window: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CvarReduce {
    #[default]
    Mean,
    Sum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregatorConfig {
    pub kind: AggregatorKind,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub diversity_sign: DiversitySign,
    #[serde(default)]
    pub group_weighting: GroupWeighting,
    #[serde(default)]
    pub cvar_scope: CvarScope,
    #[serde(default)]
    pub cvar_reduce: CvarReduce,
    /// Autoencoder steps before latent groups replace the single fallback group.
    #[serde(default = "default_warmup")]
    pub warmup_steps: u64,
}

fn default_alpha() -> f64 {
    0.8
}

fn default_k() -> usize {
    6
}

fn default_beta() -> f64 {
    0.1
}

fn default_warmup() -> u64 {
    50
}

impl AggregatorConfig {
    pub fn new(kind: AggregatorKind) -> Self {
        Self {
            kind,
            alpha: default_alpha(),
            k: default_k(),
            beta: default_beta(),
            diversity_sign: DiversitySign::default(),
            group_weighting: GroupWeighting::default(),
            cvar_scope: CvarScope::default(),
            cvar_reduce: CvarReduce::default(),
            warmup_steps: default_warmup(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::Config(format!("beta must be non-negative, got {}", self.beta)));
        }
        if let CvarScope::History { window: 0 } = self.cvar_scope {
            return Err(Error::Config("cvar history window must be positive".into()));
        }
        Ok(())
    }
}

impl Default for AggregatorConfig {
    fn default() -> Self {
        Self::new(AggregatorKind::Erm)
    }
}
