//! Grouping autoencoder: `d → h (ReLU) → g (softmax) → h (ReLU) → d`.
//!
//! The softmax layer is the bottleneck distribution `H`; its argmax gives the
//! latent group of each example.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{Adam, AdamConfig, Element, Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoencoderConfig {
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_groups")]
    pub groups: usize,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_ae_lr")]
    pub learning_rate: f64,
}

fn default_hidden() -> usize {
    128
}

fn default_groups() -> usize {
    6
}

fn default_batch() -> usize {
    64
}

fn default_ae_lr() -> f64 {
    1e-3
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self {
            hidden: default_hidden(),
            groups: default_groups(),
            batch: default_batch(),
            learning_rate: default_ae_lr(),
        }
    }
}

impl AutoencoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.groups == 0 {
            return Err(Error::Config("autoencoder hidden size and group count must be positive".into()));
        }
        if self.batch < 2 {
            return Err(Error::Config("autoencoder batch must hold at least two rows".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("autoencoder learning rate must be positive".into()));
        }
        Ok(())
    }
}

pub const AE_TENSOR_NAMES: [&str; 8] = [
    "ae.encode.in.weight",
    "ae.encode.in.bias",
    "ae.encode.bottleneck.weight",
    "ae.encode.bottleneck.bias",
    "ae.decode.in.weight",
    "ae.decode.in.bias",
    "ae.decode.out.weight",
    "ae.decode.out.bias",
];

#[derive(Clone, Debug)]
pub struct AutoencoderState {
    config: AutoencoderConfig,
    input_dim: usize,
    tensors: Vec<Tensor<f32>>,
    optimizer: Adam<f32>,
}

/// Tape handles for one registration of the autoencoder parameters.
#[derive(Clone, Debug)]
pub struct AutoencoderVars {
    vars: Vec<Var>,
}

impl AutoencoderVars {
    /// Wraps handles already on a tape, in [`AE_TENSOR_NAMES`] order.
    pub fn from_vars(vars: Vec<Var>) -> Result<Self> {
        if vars.len() != AE_TENSOR_NAMES.len() {
            return Err(Error::contract(format!("{} autoencoder vars, expected 8", vars.len())));
        }
        Ok(Self { vars })
    }

    pub fn all(&self) -> &[Var] {
        &self.vars
    }

    /// Returns `(H, R)`: bottleneck distribution `[b × g]` and reconstruction
    /// logits `[b × d]`.
    pub fn forward<E: Element>(&self, tape: &mut Tape<E>, x: Var) -> Result<(Var, Var)> {
        let v = &self.vars;
        let h1 = tape.matmul(x, v[0])?;
        let h1 = tape.add_row(h1, v[1])?;
        let h1 = tape.relu(h1)?;
        let z = tape.matmul(h1, v[2])?;
        let z = tape.add_row(z, v[3])?;
        let h = tape.softmax_rows(z)?;
        let h2 = tape.matmul(h, v[4])?;
        let h2 = tape.add_row(h2, v[5])?;
        let h2 = tape.relu(h2)?;
        let r = tape.matmul(h2, v[6])?;
        let r = tape.add_row(r, v[7])?;
        Ok((h, r))
    }
}

fn init_weight<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Tensor<f32> {
    let mut data = Vec::with_capacity(rows * cols);
    while data.len() < rows * cols {
        let z: f64 = StandardNormal.sample(rng);
        if z.abs() <= 2.0 {
            data.push((z * 0.02) as f32);
        }
    }
    Tensor::new([rows, cols], data).expect("sized above")
}

impl AutoencoderState {
    pub fn init<R: Rng>(config: AutoencoderConfig, input_dim: usize, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let (d, h, g) = (input_dim, config.hidden, config.groups);
        let tensors = vec![
            init_weight(rng, d, h),
            Tensor::zeros([h]),
            init_weight(rng, h, g),
            Tensor::zeros([g]),
            init_weight(rng, g, h),
            Tensor::zeros([h]),
            init_weight(rng, h, d),
            Tensor::zeros([d]),
        ];
        Ok(Self {
            config,
            input_dim,
            tensors,
            optimizer: Adam::new(AdamConfig::with_lr(config.learning_rate)),
        })
    }

    pub fn from_tensors(config: AutoencoderConfig, input_dim: usize, tensors: Vec<Tensor<f32>>) -> Result<Self> {
        let mut reference = Self::init(config, input_dim, &mut crate::seed::rng_for(0, crate::seed::Stream::AutoencoderInit))?;
        if tensors.len() != reference.tensors.len()
            || tensors.iter().zip(&reference.tensors).any(|(a, b)| a.shape() != b.shape())
        {
            return Err(Error::Checkpoint("autoencoder tensors do not match its configuration".into()));
        }
        reference.tensors = tensors;
        Ok(reference)
    }

    pub fn config(&self) -> &AutoencoderConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn tensors(&self) -> &[Tensor<f32>] {
        &self.tensors
    }

    pub fn optimizer_steps(&self) -> u64 {
        self.optimizer.steps()
    }

    pub fn register(&self, tape: &mut Tape<f32>, trainable: bool) -> AutoencoderVars {
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
        AutoencoderVars { vars }
    }

    fn check_input(&self, x: &Tensor<f32>) -> Result<()> {
        if x.shape().len() != 2 || x.cols() != self.input_dim {
            return Err(Error::dim(
                "ae_forward",
                format!("input {:?} for autoencoder of width {}", x.shape(), self.input_dim),
            ));
        }
        Ok(())
    }

    /// Inference-only forward pass.
    pub fn forward(&self, x: &Tensor<f32>) -> Result<(Tensor<f32>, Tensor<f32>)> {
        self.check_input(x)?;
        let mut tape = Tape::new();
        let vars = self.register(&mut tape, false);
        let xv = tape.constant(x.clone());
        let (h, r) = vars.forward(&mut tape, xv)?;
        Ok((tape.value(h).clone(), tape.value(r).clone()))
    }

    /// Applies gradients computed for the vars returned by [`Self::register`].
    pub(crate) fn apply(&mut self, grads: &[Option<&Tensor<f32>>]) -> Result<()> {
        let mut params: Vec<&mut Tensor<f32>> = self.tensors.iter_mut().collect();
        self.optimizer.step(&mut params, grads)
    }

    pub(crate) fn validate_input(&self, x: &Tensor<f32>) -> Result<()> {
        self.check_input(x)
    }
}

/// Latent group per row: argmax, lowest index on ties.
pub fn assign_latent_groups(h: &Tensor<f32>) -> Vec<usize> {
    (0..h.rows())
        .map(|i| {
            let row = h.row(i);
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}
