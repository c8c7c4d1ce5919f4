use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const THREE_BIAS: [(&str, u64); 3] = [("gender", 53_215), ("race", 40_737), ("religion", 63_124)];
const SIX_BIAS_HIGH: [(&str, u64); 3] = [("body_type", 217_631), ("age", 157_443), ("ability", 154_507)];
const SIX_BIAS_LOW: [(&str, u64); 3] = [
    ("socioeconomic", 36_333),
    ("nationality", 28_993),
    ("sexual_orientation", 12_111),
];

/// Bias-type mixes of the three benchmark splits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPreset {
    ThreeBias,
    SixBiasHigh,
    SixBiasLow,
}

impl SplitPreset {
    pub const ALL: [SplitPreset; 3] = [SplitPreset::ThreeBias, SplitPreset::SixBiasHigh, SplitPreset::SixBiasLow];

    pub fn name(self) -> &'static str {
        match self {
            SplitPreset::ThreeBias => "three_bias",
            SplitPreset::SixBiasHigh => "six_bias_high",
            SplitPreset::SixBiasLow => "six_bias_low",
        }
    }

    /// Full-size sentence count per bias type.
    pub fn counts(self) -> Vec<(&'static str, u64)> {
        let mut out = THREE_BIAS.to_vec();
        match self {
            SplitPreset::ThreeBias => {}
            SplitPreset::SixBiasHigh => out.extend(SIX_BIAS_HIGH),
            SplitPreset::SixBiasLow => out.extend(SIX_BIAS_LOW),
        }
        out
    }
}

impl fmt::Display for SplitPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplitPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}`; expected three_bias, six_bias_high or six_bias_low")))
    }
}

/// Per-type counts `round(count · scale)`, at least 1 each.
pub fn apply_split_preset(preset: SplitPreset, scale: f64) -> Result<Vec<(String, u64)>> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Config(format!("scale must be positive, got {scale}")));
    }
    Ok(preset
        .counts()
        .into_iter()
        .map(|(name, n)| (name.to_string(), ((n as f64 * scale).round() as u64).max(1)))
        .collect())
}
