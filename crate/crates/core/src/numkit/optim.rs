use serde::{Deserialize, Serialize};

use super::tensor::{Element, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_lr() -> f64 {
    1e-4
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_eps() -> f64 {
    1e-8
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self::with_lr(default_lr())
    }
}

/// Adam moments for an ordered list of parameters.
#[derive(Clone, Debug)]
pub struct Adam<E: Element = f32> {
    config: AdamConfig,
    first: Vec<Tensor<E>>,
    second: Vec<Tensor<E>>,
    step: u64,
}

impl<E: Element> Adam<E> {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            first: Vec::new(),
            second: Vec::new(),
            step: 0,
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update in place. `grads[i]` pairs with `params[i]`; a
    /// missing gradient is treated as zero.
    pub fn step(&mut self, params: &mut [&mut Tensor<E>], grads: &[Option<&Tensor<E>>]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::dim(
                "optimizer_step",
                format!("{} params vs {} grads", params.len(), grads.len()),
            ));
        }
        if self.first.is_empty() {
            self.first = params.iter().map(|p| Tensor::zeros(p.shape().to_vec())).collect();
            self.second = self.first.clone();
        }
        if self.first.len() != params.len() {
            return Err(Error::dim(
                "optimizer_step",
                format!("state tracks {} params, got {}", self.first.len(), params.len()),
            ));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != self.first[i].shape() || g.is_some_and(|g| g.shape() != p.shape()) {
                return Err(Error::dim(
                    "optimizer_step",
                    format!("parameter {i} shape {:?} does not match its state or gradient", p.shape()),
                ));
            }
        }

        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        let (b1, b2) = (E::of(beta1), E::of(beta2));
        let (one_b1, one_b2) = (E::of(1.0 - beta1), E::of(1.0 - beta2));

        for (i, p) in params.iter_mut().enumerate() {
            let m = self.first[i].data_mut();
            let v = self.second[i].data_mut();
            let g = grads[i].map(|g| g.data());
            for (j, w) in p.data_mut().iter_mut().enumerate() {
                let gj = g.map_or(E::zero(), |g| g[j]);
                m[j] = b1 * m[j] + one_b1 * gj;
                v[j] = b2 * v[j] + one_b2 * gj * gj;
                let m_hat = m[j].as_f64() / bc1;
                let v_hat = v[j].as_f64() / bc2;
                *w -= E::of(learning_rate * m_hat / (v_hat.sqrt() + eps));
            }
            if !p.is_finite() {
                return Err(Error::Numeric("optimizer_step"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut adam = Adam::<f32>::new(AdamConfig::with_lr(0.1));
        let mut p = Tensor::vector(vec![1.0, -2.0]);
        let g = Tensor::zeros([2]);
        adam.step(&mut [&mut p], &[Some(&g)]).unwrap();
        assert_eq!(p.data(), &[1.0, -2.0]);
        assert_eq!(adam.steps(), 1);
    }

    #[test]
    fn one_step_descends_on_square() {
        let mut adam = Adam::<f32>::new(AdamConfig::with_lr(0.1));
        let mut p = Tensor::vector(vec![1.0]);
        let g = Tensor::vector(vec![2.0 * p.data()[0]]);
        adam.step(&mut [&mut p], &[Some(&g)]).unwrap();
        assert!(p.data()[0].abs() < 1.0);
    }

    #[test]
    fn identical_inputs_get_identical_updates() {
        let mut adam = Adam::<f32>::new(AdamConfig::with_lr(0.01));
        let mut a = Tensor::vector(vec![0.3, 0.3]);
        let mut b = Tensor::vector(vec![0.3, 0.3]);
        let g = Tensor::vector(vec![0.5, 0.5]);
        for _ in 0..3 {
            adam.step(&mut [&mut a, &mut b], &[Some(&g), Some(&g)]).unwrap();
        }
        assert_eq!(a, b);
        assert_eq!(a.data()[0], a.data()[1]);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut adam = Adam::<f32>::new(AdamConfig::with_lr(0.01));
        let mut p = Tensor::vector(vec![0.0; 3]);
        let g = Tensor::vector(vec![0.0; 2]);
        assert!(matches!(
            adam.step(&mut [&mut p], &[Some(&g)]),
            Err(Error::Dimension { .. })
        ));
    }
}
