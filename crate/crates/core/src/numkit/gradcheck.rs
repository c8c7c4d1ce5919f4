//! Central finite-difference checks for graphs built on a [`Tape`].
//!
//! Graphs are evaluated in `f64` so that the difference quotient is not
//! dominated by rounding; the analytic side comes from the same tape code
//! used in training.

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct GradCheck {
    /// Largest relative error seen over all checked coordinates.
    pub max_rel_error: f64,
    /// (input, flat index) where the largest error occurred.
    pub worst: (usize, usize),
    pub checked: usize,
}

/// Relative error with a small absolute floor so coordinates whose true
/// derivative is zero do not divide by zero.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(1e-6);
    (analytic - numeric).abs() / scale
}

/// Compares the tape's gradient of `build(inputs)` against central
/// differences with step `eps` on every coordinate of every input.
pub fn check<F>(inputs: &[Tensor<f64>], eps: f64, build: F) -> Result<GradCheck>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    let eval = |xs: &[Tensor<f64>]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = xs.iter().map(|x| tape.leaf(x.clone())).collect();
        let out = build(&mut tape, &vars)?;
        Ok(tape.value(out).item())
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|x| tape.leaf(x.clone())).collect();
    let out = build(&mut tape, &vars)?;
    let grads = tape.backward(out)?;

    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst: (0, 0),
        checked: 0,
    };
    let mut probe: Vec<Tensor<f64>> = inputs.to_vec();
    for (k, v) in vars.iter().enumerate() {
        let analytic = grads
            .get(*v)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(inputs[k].shape().to_vec()));
        for j in 0..inputs[k].len() {
            let orig = inputs[k].data()[j];
            probe[k].data_mut()[j] = orig + eps;
            let up = eval(&probe)?;
            probe[k].data_mut()[j] = orig - eps;
            let down = eval(&probe)?;
            probe[k].data_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let err = relative_error(analytic.data()[j], numeric);
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = (k, j);
            }
            report.checked += 1;
        }
    }
    Ok(report)
}
