use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::OVERALL;
use crate::error::{Error, Result};
use crate::model::{sentence_embedding, EncoderParams};
use crate::numkit::cosine;

/// Two target sentence sets and two attribute sentence sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeatTest {
    pub targets_x: Vec<Vec<u32>>,
    pub targets_y: Vec<Vec<u32>>,
    pub attrs_a: Vec<Vec<u32>>,
    pub attrs_b: Vec<Vec<u32>>,
    pub demographic: String,
}

impl SeatTest {
    pub fn validate(&self) -> Result<()> {
        if self.targets_x.is_empty() || self.targets_y.is_empty() || self.attrs_a.is_empty() || self.attrs_b.is_empty() {
            return Err(Error::contract("seat test sets must all be non-empty"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeatResult {
    /// Signed effect size; 0 when degenerate.
    pub effect: f64,
    /// Zero spread in association, or an all-zero embedding.
    pub degenerate: bool,
}

impl SeatResult {
    const DEGENERATE: SeatResult = SeatResult {
        effect: 0.0,
        degenerate: true,
    };
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn association(w: &[f32], a: &[Vec<f32>], b: &[Vec<f32>]) -> Option<f64> {
    let ca = a.iter().map(|x| cosine(w, x)).collect::<Option<Vec<_>>>()?;
    let cb = b.iter().map(|x| cosine(w, x)).collect::<Option<Vec<_>>>()?;
    Some(mean(&ca) - mean(&cb))
}

/// Effect size on fixed embeddings, standardized by the sample standard
/// deviation of the associations over `X ∪ Y`.
pub fn effect_size(x: &[Vec<f32>], y: &[Vec<f32>], a: &[Vec<f32>], b: &[Vec<f32>]) -> Result<SeatResult> {
    if x.is_empty() || y.is_empty() || a.is_empty() || b.is_empty() {
        return Err(Error::contract("seat test sets must all be non-empty"));
    }
    let Some(sx) = x.iter().map(|w| association(w, a, b)).collect::<Option<Vec<_>>>() else {
        return Ok(SeatResult::DEGENERATE);
    };
    let Some(sy) = y.iter().map(|w| association(w, a, b)).collect::<Option<Vec<_>>>() else {
        return Ok(SeatResult::DEGENERATE);
    };
    let all: Vec<f64> = sx.iter().chain(&sy).copied().collect();
    if all.len() < 2 {
        return Ok(SeatResult::DEGENERATE);
    }
    let m = mean(&all);
    let var = all.iter().map(|s| (s - m) * (s - m)).sum::<f64>() / (all.len() - 1) as f64;
    let sd = var.sqrt();
    if sd == 0.0 || !sd.is_finite() {
        return Ok(SeatResult::DEGENERATE);
    }
    Ok(SeatResult {
        effect: (mean(&sx) - mean(&sy)) / sd,
        degenerate: false,
    })
}

fn embed_all(params: &EncoderParams, sentences: &[Vec<u32>]) -> Result<Vec<Vec<f32>>> {
    sentences.iter().map(|s| sentence_embedding(params, s)).collect()
}

pub fn seat_effect_size(params: &EncoderParams, test: &SeatTest) -> Result<SeatResult> {
    test.validate()?;
    effect_size(
        &embed_all(params, &test.targets_x)?,
        &embed_all(params, &test.targets_y)?,
        &embed_all(params, &test.attrs_a)?,
        &embed_all(params, &test.attrs_b)?,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeatSummary {
    /// Mean `|d|` over the demographic's tests.
    pub mean_abs_effect: f64,
    pub tests: usize,
    pub degenerate: usize,
}

fn summarize(results: &[SeatResult]) -> SeatSummary {
    SeatSummary {
        mean_abs_effect: results.iter().map(|r| r.effect.abs()).sum::<f64>() / results.len() as f64,
        tests: results.len(),
        degenerate: results.iter().filter(|r| r.degenerate).count(),
    }
}

/// Per-demographic summaries plus an `overall` entry.
pub fn seat_scores(params: &EncoderParams, tests: &[SeatTest]) -> Result<BTreeMap<String, SeatSummary>> {
    if tests.is_empty() {
        return Err(Error::contract("no seat tests to score"));
    }
    let results = tests
        .par_iter()
        .map(|t| seat_effect_size(params, t))
        .collect::<Result<Vec<_>>>()?;
    let mut by_demo: BTreeMap<&str, Vec<SeatResult>> = BTreeMap::new();
    for (t, r) in tests.iter().zip(&results) {
        by_demo.entry(&t.demographic).or_default().push(*r);
    }
    let mut out: BTreeMap<String, SeatSummary> =
        by_demo.into_iter().map(|(d, rs)| (d.to_string(), summarize(&rs))).collect();
    out.insert(OVERALL.to_string(), summarize(&results));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(x: &[f32]) -> Vec<f32> {
        x.to_vec()
    }

    #[test]
    fn direct_formula_on_two_sentence_sets() {
        let x = [v(&[1.0, 0.0]), v(&[0.8, 0.6])];
        let y = [v(&[0.0, 1.0]), v(&[0.6, 0.8])];
        let a = [v(&[1.0, 0.0])];
        let b = [v(&[0.0, 1.0])];
        // s(w) = w0 - w1 for unit vectors here
        let s = [1.0, 0.2, -1.0, -0.2];
        let m = s.iter().sum::<f64>() / 4.0;
        let sd = (s.iter().map(|t| (t - m) * (t - m)).sum::<f64>() / 3.0).sqrt();
        let want = ((1.0 + 0.2) / 2.0 - (-1.0 - 0.2) / 2.0) / sd;
        let got = effect_size(&x, &y, &a, &b).unwrap();
        assert!(!got.degenerate);
        assert_abs_diff_eq!(got.effect, want, epsilon = 1e-6);
    }

    #[test]
    fn identical_targets_give_zero() {
        let x = [v(&[1.0, 0.2]), v(&[0.3, 0.9])];
        let a = [v(&[1.0, 0.0])];
        let b = [v(&[0.0, 1.0])];
        assert_eq!(effect_size(&x, &x, &a, &b).unwrap().effect, 0.0);
    }

    #[test]
    fn swapping_attributes_negates() {
        let x = [v(&[1.0, 0.2]), v(&[0.3, 0.9])];
        let y = [v(&[0.1, 1.0]), v(&[0.7, 0.4])];
        let a = [v(&[1.0, 0.0]), v(&[0.9, 0.1])];
        let b = [v(&[0.0, 1.0])];
        let d1 = effect_size(&x, &y, &a, &b).unwrap().effect;
        let d2 = effect_size(&x, &y, &b, &a).unwrap().effect;
        assert_abs_diff_eq!(d1, -d2, epsilon = 1e-12);
    }

    #[test]
    fn zero_vectors_and_flat_associations_are_degenerate() {
        let z = [v(&[0.0, 0.0])];
        let a = [v(&[1.0, 0.0])];
        assert_eq!(effect_size(&z, &z, &a, &a).unwrap(), SeatResult::DEGENERATE);
        let x = [v(&[1.0, 0.0])];
        assert!(effect_size(&x, &x, &a, &a).unwrap().degenerate);
        assert!(effect_size(&[], &x, &a, &a).is_err());
    }
}
