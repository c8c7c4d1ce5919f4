//! Autoencoder objectives and the bias-type weights used by RobustDebias.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::DiversitySign;
use crate::error::{Error, Result};
use crate::model::AutoencoderState;
use crate::numkit::{Element, Tape, Tensor, Var};

/// Example counts per bias type. Types are ordered by name, and that order
/// defines each type's group index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BiasFrequencyTable {
    counts: BTreeMap<String, u64>,
}

impl BiasFrequencyTable {
    pub fn from_types<'a>(types: impl IntoIterator<Item = &'a str>) -> Self {
        let mut counts = BTreeMap::new();
        for t in types {
            *counts.entry(t.to_string()).or_insert(0) += 1;
        }
        Self { counts }
    }

    pub fn from_counts(counts: BTreeMap<String, u64>) -> Result<Self> {
        if let Some((name, _)) = counts.iter().find(|(_, &c)| c == 0) {
            return Err(Error::Config(format!("bias type `{name}` has a zero count")));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn num_types(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn types(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    pub fn index_of(&self, bias_type: &str) -> Option<usize> {
        self.counts.keys().position(|k| k == bias_type)
    }

    /// `N / (|B| · n_b)`: balanced-class weight, averaging 1 over the corpus.
    pub fn weight(&self, bias_type: &str) -> Result<f64> {
        let n = *self
            .counts
            .get(bias_type)
            .ok_or_else(|| Error::contract(format!("bias type `{bias_type}` is not in the frequency table")))?;
        Ok(self.total() as f64 / (self.num_types() as f64 * n as f64))
    }
}

pub fn inverse_frequency_weights<S: AsRef<str>>(table: &BiasFrequencyTable, batch_types: &[S]) -> Result<Vec<f64>> {
    batch_types.iter().map(|t| table.weight(t.as_ref())).collect()
}

/// Weighted cross-entropy between `softmax(x_enc)` rows and `softmax(R)` rows:
/// `−(1/b) Σ_i w_i Σ_j p_ij · log softmax(R)_ij`.
pub fn ae_recon_loss<E: Element>(
    tape: &mut Tape<E>,
    x_enc: &Tensor<E>,
    recon: Var,
    weights: Option<&[f64]>,
) -> Result<Var> {
    let r = tape.value(recon);
    if r.shape() != x_enc.shape() || x_enc.shape().len() != 2 {
        return Err(Error::dim(
            "ae_recon_loss",
            format!("input {:?} vs reconstruction {:?}", x_enc.shape(), r.shape()),
        ));
    }
    let (b, d) = (x_enc.rows(), x_enc.cols());
    if let Some(w) = weights {
        if w.len() != b {
            return Err(Error::dim("ae_recon_loss", format!("{} weights for {b} rows", w.len())));
        }
        if let Some(bad) = w.iter().find(|&&v| !(v > 0.0)) {
            return Err(Error::contract(format!("reconstruction weight {bad} is not positive")));
        }
    }
    let target = x_enc.softmax_rows()?;
    let mut coeffs = Vec::with_capacity(b * d);
    for i in 0..b {
        let w = weights.map_or(1.0, |w| w[i]);
        let scale = -w / b as f64;
        coeffs.extend(target.row(i).iter().map(|&p| E::of(scale * p.as_f64())));
    }
    let log_probs = tape.log_softmax_rows(recon)?;
    tape.dot_const(log_probs, Tensor::new([b, d], coeffs)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DiversityLoss {
    Value(Var),
    /// Fewer than two rows: the loss is defined as zero.
    Degenerate,
}

pub fn ae_diversity_loss<E: Element>(tape: &mut Tape<E>, h: Var) -> Result<DiversityLoss> {
    if tape.value(h).rows() < 2 {
        return Ok(DiversityLoss::Degenerate);
    }
    Ok(DiversityLoss::Value(tape.pairwise_kl_mean(h)?))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AeStepReport {
    pub total: f64,
    pub recon: f64,
    pub diversity: f64,
    pub diversity_degenerate: bool,
}

/// One optimizer step on the autoencoder. `x_enc` is a detached copy of the
/// encoder's pooled output; nothing here touches the encoder's tape.
pub fn train_ae_step(
    ae: &mut AutoencoderState,
    x_enc: &Tensor<f32>,
    weights: Option<&[f64]>,
    beta: f64,
    sign: DiversitySign,
) -> Result<AeStepReport> {
    ae.validate_input(x_enc)?;
    let mut tape = Tape::new();
    let vars = ae.register(&mut tape, true);
    let x = tape.constant(x_enc.clone());
    let (h, r) = vars.forward(&mut tape, x)?;
    let recon = ae_recon_loss(&mut tape, x_enc, r, weights)?;
    let recon_value = tape.value(recon).item() as f64;
    let (total, diversity, degenerate) = match ae_diversity_loss(&mut tape, h)? {
        DiversityLoss::Value(div) => {
            let div_value = tape.value(div).item() as f64;
            let signed = match sign {
                DiversitySign::Literal => beta,
                DiversitySign::Negated => -beta,
            };
            let scaled = tape.scale(div, signed)?;
            (tape.add(recon, scaled)?, div_value, false)
        }
        DiversityLoss::Degenerate => (recon, 0.0, true),
    };
    let total_value = tape.value(total).item() as f64;
    let grads = tape.backward(total)?;
    let g: Vec<Option<&Tensor<f32>>> = vars.all().iter().map(|v| grads.get(*v)).collect();
    ae.apply(&g)?;
    Ok(AeStepReport {
        total: total_value,
        recon: recon_value,
        diversity,
        diversity_degenerate: degenerate,
    })
}
