use super::encoder::{EncoderParams, EncoderVars, MASK_ID};
use crate::corpus::Example;
use crate::error::{Error, Result};
use crate::numkit::{Element, Tape, Tensor, Var};

/// One batch's forward pass, still attached to its tape.
#[derive(Debug)]
pub struct BatchForward<E: Element = f32> {
    pub tape: Tape<E>,
    pub params: EncoderVars,
    /// Per-example MLM loss, shape `[b]`.
    pub losses: Var,
    /// Mean-pooled final hidden states, shape `[b × d]`.
    pub pooled: Var,
}

impl<E: Element> BatchForward<E> {
    pub fn loss_values(&self) -> Vec<f64> {
        self.tape.value(self.losses).data().iter().map(|v| v.as_f64()).collect()
    }

    pub fn pooled_value(&self) -> &Tensor<E> {
        self.tape.value(self.pooled)
    }
}

fn check_example<E: Element>(params: &EncoderParams<E>, ex: &Example) -> Result<()> {
    params.validate_tokens(&ex.tokens)?;
    if ex.mask_index >= ex.tokens.len() {
        return Err(Error::contract(format!(
            "example {}: mask index {} outside sentence of {} tokens",
            ex.id,
            ex.mask_index,
            ex.tokens.len()
        )));
    }
    if ex.tokens[ex.mask_index] != MASK_ID {
        return Err(Error::contract(format!("example {}: no mask at mask index", ex.id)));
    }
    if ex.target as usize >= params.config().vocab_size {
        return Err(Error::Vocabulary(format!(
            "example {}: target id {} outside vocabulary",
            ex.id, ex.target
        )));
    }
    Ok(())
}

/// Cross-entropy of each example's target at its mask position, plus the
/// pooled sentence representations.
pub fn mlm_forward<E: Element>(params: &EncoderParams<E>, batch: &[Example]) -> Result<BatchForward<E>> {
    if batch.is_empty() {
        return Err(Error::contract("empty batch"));
    }
    for ex in batch {
        check_example(params, ex)?;
    }
    let mut tape = Tape::new();
    let vars = params.register(&mut tape, true);
    let (losses, pooled) = mlm_losses(&mut tape, &vars, batch)?;
    Ok(BatchForward {
        tape,
        params: vars,
        losses,
        pooled,
    })
}

/// Records per-example MLM losses `[b]` and pooled states `[b × d]` on `tape`.
/// Examples are assumed valid for the registered model.
pub fn mlm_losses<E: Element>(tape: &mut Tape<E>, vars: &EncoderVars, batch: &[Example]) -> Result<(Var, Var)> {
    let mut pooled = Vec::with_capacity(batch.len());
    let mut at_mask = Vec::with_capacity(batch.len());
    for ex in batch {
        let hidden = vars.encode(tape, &ex.tokens)?;
        pooled.push(tape.mean_rows(hidden)?);
        at_mask.push(tape.gather_rows(hidden, &[ex.mask_index])?);
    }
    let pooled = tape.concat_rows(&pooled)?;
    let at_mask = tape.concat_rows(&at_mask)?;
    let logits = vars.mlm_logits(tape, at_mask)?;
    let log_probs = tape.log_softmax_rows(logits)?;
    let targets: Vec<usize> = batch.iter().map(|e| e.target as usize).collect();
    let picked = tape.pick(log_probs, &targets)?;
    Ok((tape.scale(picked, -1.0)?, pooled))
}

/// Mean-pooled final hidden state of a sequence.
pub fn sentence_embedding<E: Element>(params: &EncoderParams<E>, tokens: &[u32]) -> Result<Vec<E>> {
    params.validate_tokens(tokens)?;
    let mut tape = Tape::new();
    let vars = params.register(&mut tape, false);
    let hidden = vars.encode(&mut tape, tokens)?;
    let pooled = tape.mean_rows(hidden)?;
    Ok(tape.value(pooled).data().to_vec())
}

/// Log-probabilities over the vocabulary at `position`, with that position
/// replaced by the mask token.
pub fn masked_log_probs<E: Element>(params: &EncoderParams<E>, tokens: &[u32], position: usize) -> Result<Vec<E>> {
    if position >= tokens.len() {
        return Err(Error::contract(format!(
            "position {position} outside sentence of {} tokens",
            tokens.len()
        )));
    }
    let mut masked = tokens.to_vec();
    masked[position] = MASK_ID;
    params.validate_tokens(&masked)?;
    let mut tape = Tape::new();
    let vars = params.register(&mut tape, false);
    let hidden = vars.encode(&mut tape, &masked)?;
    let row = tape.gather_rows(hidden, &[position])?;
    let logits = vars.mlm_logits(&mut tape, row)?;
    let log_probs = tape.log_softmax_rows(logits)?;
    Ok(tape.value(log_probs).data().to_vec())
}
