use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{Element, Tape, Tensor, Var};

pub const PAD_ID: u32 = 0;
pub const MASK_ID: u32 = 1;

const INIT_STD: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// Truncated normal (σ = 0.02, cut at 2σ) weights, zero biases, zero MLM head.
    #[default]
    TruncatedNormal,
    /// Every weight zero: a uniform-logit model whose embeddings are all zero.
    Zeros,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub max_len: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub init: InitScheme,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            vocab_size: 200,
            d_model: 32,
            max_len: 16,
            n_layers: 2,
            n_heads: 2,
            init: InitScheme::TruncatedNormal,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 3 {
            return Err(Error::Config("vocab_size must leave room beyond PAD and MASK".into()));
        }
        if self.d_model == 0 || self.max_len == 0 || self.n_heads == 0 {
            return Err(Error::Config("d_model, max_len and n_heads must be positive".into()));
        }
        if self.d_model % self.n_heads != 0 {
            return Err(Error::Config(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        Ok(())
    }

    fn ffn_dim(&self) -> usize {
        4 * self.d_model
    }
}

// Layout of the flat parameter list.
const TOK_EMB: usize = 0;
const POS_EMB: usize = 1;
const EMB_GAIN: usize = 2;
const EMB_BIAS: usize = 3;
const LAYER_BASE: usize = 4;
const PER_LAYER: usize = 16;

const WQ: usize = 0;
const BQ: usize = 1;
const WK: usize = 2;
const BK: usize = 3;
const WV: usize = 4;
const BV: usize = 5;
const WO: usize = 6;
const BO: usize = 7;
const LN1_GAIN: usize = 8;
const LN1_BIAS: usize = 9;
const W_FF1: usize = 10;
const B_FF1: usize = 11;
const W_FF2: usize = 12;
const B_FF2: usize = 13;
const LN2_GAIN: usize = 14;
const LN2_BIAS: usize = 15;

const LAYER_NAMES: [&str; PER_LAYER] = [
    "attn.q.weight",
    "attn.q.bias",
    "attn.k.weight",
    "attn.k.bias",
    "attn.v.weight",
    "attn.v.bias",
    "attn.out.weight",
    "attn.out.bias",
    "attn.norm.gain",
    "attn.norm.bias",
    "ffn.in.weight",
    "ffn.in.bias",
    "ffn.out.weight",
    "ffn.out.bias",
    "ffn.norm.gain",
    "ffn.norm.bias",
];

/// Parameters of the masked-token encoder and its MLM head.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams<E: Element = f32> {
    config: EncoderConfig,
    tensors: Vec<Tensor<E>>,
}

fn truncated_normal<E: Element, R: Rng>(rng: &mut R, shape: [usize; 2]) -> Tensor<E> {
    let n = shape[0] * shape[1];
    let mut data = Vec::with_capacity(n);
    while data.len() < n {
        let z: f64 = StandardNormal.sample(rng);
        if z.abs() <= 2.0 {
            data.push(E::of(z * INIT_STD));
        }
    }
    Tensor::new(shape, data).expect("sized above")
}

impl<E: Element> EncoderParams<E> {
    pub fn init<R: Rng>(config: EncoderConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let (v, d, l, f) = (config.vocab_size, config.d_model, config.max_len, config.ffn_dim());
        let zeros_only = config.init == InitScheme::Zeros;
        let weight = |rng: &mut R, shape: [usize; 2]| {
            if zeros_only {
                Tensor::zeros(shape)
            } else {
                truncated_normal(rng, shape)
            }
        };
        let ones = |n: usize| Tensor::full([n], E::one());
        let zeros = |n: usize| Tensor::<E>::zeros([n]);

        let mut tensors = vec![weight(rng, [v, d]), weight(rng, [l, d]), ones(d), zeros(d)];
        for _ in 0..config.n_layers {
            tensors.extend([
                weight(rng, [d, d]),
                zeros(d),
                weight(rng, [d, d]),
                zeros(d),
                weight(rng, [d, d]),
                zeros(d),
                weight(rng, [d, d]),
                zeros(d),
                ones(d),
                zeros(d),
                weight(rng, [d, f]),
                zeros(f),
                weight(rng, [f, d]),
                zeros(d),
                ones(d),
                zeros(d),
            ]);
        }
        // Zero head: an untrained model predicts the uniform distribution.
        tensors.push(Tensor::zeros([d, v]));
        tensors.push(zeros(v));
        Ok(Self { config, tensors })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn names(config: &EncoderConfig) -> Vec<String> {
        let mut names = vec![
            "encoder.embed.tokens".to_string(),
            "encoder.embed.positions".to_string(),
            "encoder.embed.norm.gain".to_string(),
            "encoder.embed.norm.bias".to_string(),
        ];
        for l in 0..config.n_layers {
            names.extend(LAYER_NAMES.iter().map(|n| format!("encoder.layer{l}.{n}")));
        }
        names.push("mlm.weight".to_string());
        names.push("mlm.bias".to_string());
        names
    }

    /// Rebuilds parameters from tensors listed in [`Self::names`] order.
    pub fn from_tensors(config: EncoderConfig, tensors: Vec<Tensor<E>>) -> Result<Self> {
        config.validate()?;
        let reference = Self::init(
            EncoderConfig {
                init: InitScheme::Zeros,
                ..config
            },
            &mut crate::seed::rng_for(0, crate::seed::Stream::EncoderInit),
        )?;
        if tensors.len() != reference.tensors.len() {
            return Err(Error::Checkpoint(format!(
                "encoder expects {} tensors, found {}",
                reference.tensors.len(),
                tensors.len()
            )));
        }
        for (i, (t, r)) in tensors.iter().zip(&reference.tensors).enumerate() {
            if t.shape() != r.shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor {} has shape {:?}, expected {:?}",
                    Self::names(&config)[i],
                    t.shape(),
                    r.shape()
                )));
            }
        }
        Ok(Self { config, tensors })
    }

    pub fn tensors(&self) -> &[Tensor<E>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<E>> {
        self.tensors.iter_mut().collect()
    }

    pub fn cast<F: Element>(&self) -> EncoderParams<F> {
        EncoderParams {
            config: self.config,
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
        }
    }

    /// Registers every tensor on the tape, as leaves when gradients are wanted.
    pub fn register(&self, tape: &mut Tape<E>, trainable: bool) -> EncoderVars {
        let vars = self
            .tensors
            .iter()
            .map(|t| {
                if trainable {
                    tape.leaf(t.clone())
                } else {
                    tape.constant(t.clone())
                }
            })
            .collect();
        EncoderVars {
            config: self.config,
            vars,
        }
    }

    pub fn validate_tokens(&self, tokens: &[u32]) -> Result<()> {
        if tokens.is_empty() {
            return Err(Error::contract("empty token sequence"));
        }
        if tokens.len() > self.config.max_len {
            return Err(Error::contract(format!(
                "sequence of {} tokens exceeds max_len {}",
                tokens.len(),
                self.config.max_len
            )));
        }
        if let Some(&t) = tokens.iter().find(|&&t| t as usize >= self.config.vocab_size) {
            return Err(Error::Vocabulary(format!(
                "token id {t} outside vocabulary of {}",
                self.config.vocab_size
            )));
        }
        Ok(())
    }
}

/// Tape handles for one registration of [`EncoderParams`].
#[derive(Clone, Debug)]
pub struct EncoderVars {
    config: EncoderConfig,
    vars: Vec<Var>,
}

impl EncoderVars {
    /// Wraps handles already on a tape, in [`EncoderParams::names`] order.
    pub fn from_vars(config: EncoderConfig, vars: Vec<Var>) -> Result<Self> {
        let want = EncoderParams::<f32>::names(&config).len();
        if vars.len() != want {
            return Err(Error::contract(format!("{} encoder vars, expected {want}", vars.len())));
        }
        Ok(Self { config, vars })
    }

    pub fn all(&self) -> &[Var] {
        &self.vars
    }

    fn layer(&self, l: usize, which: usize) -> Var {
        self.vars[LAYER_BASE + l * PER_LAYER + which]
    }

    pub fn mlm_weight(&self) -> Var {
        self.vars[LAYER_BASE + self.config.n_layers * PER_LAYER]
    }

    pub fn mlm_bias(&self) -> Var {
        self.vars[LAYER_BASE + self.config.n_layers * PER_LAYER + 1]
    }

    fn affine_norm<E: Element>(&self, tape: &mut Tape<E>, x: Var, gain: Var, bias: Var) -> Result<Var> {
        let n = tape.layer_norm_rows(x)?;
        let n = tape.mul_row(n, gain)?;
        tape.add_row(n, bias)
    }

    fn dense<E: Element>(&self, tape: &mut Tape<E>, x: Var, w: Var, b: Var) -> Result<Var> {
        let y = tape.matmul(x, w)?;
        tape.add_row(y, b)
    }

    /// Final-layer hidden states `[n × d]` for one (already validated) sequence.
    pub fn encode<E: Element>(&self, tape: &mut Tape<E>, tokens: &[u32]) -> Result<Var> {
        let ids: Vec<usize> = tokens.iter().map(|&t| t as usize).collect();
        let positions: Vec<usize> = (0..ids.len()).collect();
        let tok = tape.gather_rows(self.vars[TOK_EMB], &ids)?;
        let pos = tape.gather_rows(self.vars[POS_EMB], &positions)?;
        let x = tape.add(tok, pos)?;
        let mut x = self.affine_norm(tape, x, self.vars[EMB_GAIN], self.vars[EMB_BIAS])?;

        let d = self.config.d_model;
        let heads = self.config.n_heads;
        let head_dim = d / heads;
        let score_scale = 1.0 / (head_dim as f64).sqrt();
        for l in 0..self.config.n_layers {
            let q = self.dense(tape, x, self.layer(l, WQ), self.layer(l, BQ))?;
            let k = self.dense(tape, x, self.layer(l, WK), self.layer(l, BK))?;
            let v = self.dense(tape, x, self.layer(l, WV), self.layer(l, BV))?;
            let mut head_out = Vec::with_capacity(heads);
            for h in 0..heads {
                let qh = tape.slice_cols(q, h * head_dim, head_dim)?;
                let kh = tape.slice_cols(k, h * head_dim, head_dim)?;
                let vh = tape.slice_cols(v, h * head_dim, head_dim)?;
                let kt = tape.transpose(kh)?;
                let scores = tape.matmul(qh, kt)?;
                let scores = tape.scale(scores, score_scale)?;
                let attn = tape.softmax_rows(scores)?;
                head_out.push(tape.matmul(attn, vh)?);
            }
            let merged = if heads == 1 {
                head_out[0]
            } else {
                tape.concat_cols(&head_out)?
            };
            let attn_out = self.dense(tape, merged, self.layer(l, WO), self.layer(l, BO))?;
            let res = tape.add(x, attn_out)?;
            x = self.affine_norm(tape, res, self.layer(l, LN1_GAIN), self.layer(l, LN1_BIAS))?;

            let hidden = self.dense(tape, x, self.layer(l, W_FF1), self.layer(l, B_FF1))?;
            let hidden = tape.gelu(hidden)?;
            let ff = self.dense(tape, hidden, self.layer(l, W_FF2), self.layer(l, B_FF2))?;
            let res = tape.add(x, ff)?;
            x = self.affine_norm(tape, res, self.layer(l, LN2_GAIN), self.layer(l, LN2_BIAS))?;
        }
        Ok(x)
    }

    /// MLM logits `[rows × V]` for stacked hidden rows `[rows × d]`.
    pub fn mlm_logits<E: Element>(&self, tape: &mut Tape<E>, hidden: Var) -> Result<Var> {
        self.dense(tape, hidden, self.mlm_weight(), self.mlm_bias())
    }
}
