use std::collections::VecDeque;

use super::aggregate::{
    aggregate_erm, aggregate_group, aggregate_topic_cvar, aggregate_topk, aggregate_topk_group, CvarHistory,
    LossBreakdown,
};
use super::config::{AggregatorConfig, AggregatorKind, CvarScope};
use super::latent::{train_ae_step, AeStepReport};
use crate::error::{Error, Result};
use crate::model::{assign_latent_groups, AutoencoderState};
use crate::numkit::Tensor;

/// Per-example metadata for one batch.
#[derive(Clone, Copy, Debug)]
pub struct BatchMeta<'a> {
    /// Bias-type index of each example.
    pub bias_groups: &'a [usize],
    pub topics: &'a [usize],
    /// Inverse-frequency weight of each example's bias type.
    pub weights: &'a [f64],
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub breakdown: LossBreakdown,
    pub autoencoder: Option<AeStepReport>,
    /// Latent group per example, for the autoencoder-based kinds.
    pub latent_groups: Option<Vec<usize>>,
}

/// Autoencoder update followed by latent TopK-Group selection.
///
/// The autoencoder is trained on `ae_input` (optionally weighted per row),
/// then the current batch `x_enc` is assigned to latent groups. Until the
/// autoencoder has taken more than `config.warmup_steps` steps every example
/// shares group 0.
pub fn robustdebias_step(
    losses: &[f64],
    x_enc: &Tensor<f32>,
    ae_input: &Tensor<f32>,
    ae_weights: Option<&[f64]>,
    ae: &mut AutoencoderState,
    config: &AggregatorConfig,
) -> Result<(LossBreakdown, AeStepReport, Vec<usize>)> {
    if x_enc.rows() != losses.len() {
        return Err(Error::dim(
            "robustdebias_step",
            format!("{} pooled rows for {} losses", x_enc.rows(), losses.len()),
        ));
    }
    let report = train_ae_step(ae, ae_input, ae_weights, config.beta, config.diversity_sign)?;
    let groups = if ae.optimizer_steps() <= config.warmup_steps {
        vec![0; losses.len()]
    } else {
        let (h, _) = ae.forward(x_enc)?;
        assign_latent_groups(&h)
    };
    let k = config.k.min(losses.len());
    let breakdown = aggregate_topk_group(losses, &groups, ae.config().groups, k)?;
    Ok((breakdown, report, groups))
}

/// Stateful batch objective for one training run.
#[derive(Clone, Debug)]
pub struct Objective {
    config: AggregatorConfig,
    num_groups: usize,
    num_topics: usize,
    autoencoder: Option<AutoencoderState>,
    /// Most recent detached pooled rows (and weights) the autoencoder trains on.
    ae_buffer: VecDeque<(Vec<f32>, f64)>,
    cvar_history: Option<CvarHistory>,
}

impl Objective {
    pub fn new(
        config: AggregatorConfig,
        num_groups: usize,
        num_topics: usize,
        autoencoder: Option<AutoencoderState>,
    ) -> Result<Self> {
        config.validate()?;
        if config.kind.uses_autoencoder() && autoencoder.is_none() {
            return Err(Error::Config(format!("{} needs an autoencoder", config.kind)));
        }
        let cvar_history = match config.cvar_scope {
            CvarScope::History { window } => Some(CvarHistory::new(window, num_topics)),
            CvarScope::Batch => None,
        };
        Ok(Self {
            config,
            num_groups,
            num_topics,
            autoencoder,
            ae_buffer: VecDeque::new(),
            cvar_history,
        })
    }

    pub fn config(&self) -> &AggregatorConfig {
        &self.config
    }

    pub fn autoencoder(&self) -> Option<&AutoencoderState> {
        self.autoencoder.as_ref()
    }

    pub fn into_autoencoder(self) -> Option<AutoencoderState> {
        self.autoencoder
    }

    pub fn step(&mut self, losses: &[f64], pooled: &Tensor<f32>, meta: &BatchMeta<'_>) -> Result<StepOutcome> {
        let b = losses.len();
        if meta.bias_groups.len() != b || meta.topics.len() != b || meta.weights.len() != b {
            return Err(Error::contract("batch metadata length differs from the batch"));
        }
        let k = self.config.k.min(b);
        let plain = |breakdown| StepOutcome {
            breakdown,
            autoencoder: None,
            latent_groups: None,
        };
        Ok(match self.config.kind {
            AggregatorKind::Erm => plain(aggregate_erm(losses)?),
            AggregatorKind::Group => plain(aggregate_group(
                losses,
                meta.bias_groups,
                self.num_groups,
                self.config.group_weighting,
            )?),
            AggregatorKind::TopicCvar => plain(aggregate_topic_cvar(
                losses,
                meta.topics,
                self.num_topics,
                self.config.alpha,
                self.config.cvar_reduce,
                self.cvar_history.as_mut(),
            )?),
            AggregatorKind::Topk => plain(aggregate_topk(losses, k)?),
            AggregatorKind::TopkGroup => plain(aggregate_topk_group(losses, meta.bias_groups, self.num_groups, k)?),
            AggregatorKind::TopkAe | AggregatorKind::Robustdebias => {
                let weighted = self.config.kind == AggregatorKind::Robustdebias;
                let ae = self.autoencoder.as_mut().expect("checked in new");
                let capacity = ae.config().batch;
                let d = pooled.cols();
                for (i, &w) in meta.weights.iter().enumerate() {
                    if self.ae_buffer.len() == capacity {
                        self.ae_buffer.pop_front();
                    }
                    self.ae_buffer.push_back((pooled.row(i).to_vec(), if weighted { w } else { 1.0 }));
                }
                let rows: Vec<f32> = self.ae_buffer.iter().flat_map(|(r, _)| r.iter().copied()).collect();
                let ae_input = Tensor::new([self.ae_buffer.len(), d], rows)?;
                let weights: Option<Vec<f64>> =
                    weighted.then(|| self.ae_buffer.iter().map(|(_, w)| *w).collect());
                let (breakdown, report, groups) =
                    robustdebias_step(losses, pooled, &ae_input, weights.as_deref(), ae, &self.config)?;
                StepOutcome {
                    breakdown,
                    autoencoder: Some(report),
                    latent_groups: Some(groups),
                }
            }
        })
    }
}
