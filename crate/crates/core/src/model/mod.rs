//! The masked-token encoder being fine-tuned and the grouping autoencoder.

mod autoencoder;
mod encoder;
mod mlm;

pub use autoencoder::{assign_latent_groups, AutoencoderConfig, AutoencoderState, AutoencoderVars, AE_TENSOR_NAMES};
pub use encoder::{EncoderConfig, EncoderParams, EncoderVars, InitScheme, MASK_ID, PAD_ID};
pub use mlm::{masked_log_probs, mlm_forward, mlm_losses, sentence_embedding, BatchForward};
