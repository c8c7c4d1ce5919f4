//! The seven batch-loss objectives and the autoencoder machinery behind the
//! latent-group variants.

mod aggregate;
mod config;
mod latent;
mod objective;

pub use aggregate::{
    aggregate_erm, aggregate_group, aggregate_topic_cvar, aggregate_topk, aggregate_topk_group, nearest_rank,
    CvarHistory, GroupLoss, LossBreakdown,
};
pub use config::{AggregatorConfig, AggregatorKind, CvarReduce, CvarScope, DiversitySign, GroupWeighting};
pub use latent::{
    ae_diversity_loss, ae_recon_loss, inverse_frequency_weights, train_ae_step, AeStepReport, BiasFrequencyTable,
    DiversityLoss,
};
pub use objective::{robustdebias_step, BatchMeta, Objective, StepOutcome};
