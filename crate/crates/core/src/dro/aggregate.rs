//! Batch-loss aggregators.
//!
//! Each aggregator turns per-example losses into a scalar that is linear in
//! the losses given the selection it makes, so the result is described by one
//! coefficient per example. Unselected examples get a coefficient of exactly
//! zero and therefore no gradient.

use std::collections::VecDeque;

use serde::Serialize;

use super::config::{CvarReduce, GroupWeighting};
use crate::error::{Error, Result};
use crate::numkit::{Element, Tape, Tensor, Var};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupLoss {
    pub group: usize,
    pub count: usize,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct LossBreakdown {
    /// Scalar batch loss.
    pub value: f64,
    /// `∂value / ∂loss_i`.
    pub coefficients: Vec<f64>,
    /// Indices with a non-zero coefficient, ascending.
    pub selected: Vec<usize>,
    pub group_losses: Vec<GroupLoss>,
    /// The group whose loss became the batch loss, when one did.
    pub worst_group: Option<usize>,
    /// `(topic, threshold)` for each topic present in the batch.
    pub cvar_thresholds: Vec<(usize, f64)>,
}

impl LossBreakdown {
    fn from_coefficients(losses: &[f64], coefficients: Vec<f64>) -> Self {
        let value = losses.iter().zip(&coefficients).map(|(l, c)| l * c).sum();
        let selected = coefficients
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(i, _)| i)
            .collect();
        Self {
            value,
            coefficients,
            selected,
            ..Self::default()
        }
    }

    /// Records the scalar on `tape` as a function of the per-example loss node.
    pub fn attach<E: Element>(&self, tape: &mut Tape<E>, losses: Var) -> Result<Var> {
        let coeffs = Tensor::vector(self.coefficients.iter().map(|&c| E::of(c)).collect());
        tape.dot_const(losses, coeffs)
    }
}

fn check_losses(losses: &[f64]) -> Result<()> {
    if losses.is_empty() {
        return Err(Error::contract("empty batch"));
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numeric("aggregate"));
    }
    Ok(())
}

fn check_labels(losses: &[f64], labels: &[usize], num_labels: usize, what: &str) -> Result<()> {
    if labels.len() != losses.len() {
        return Err(Error::contract(format!(
            "{} {what} labels for {} losses",
            labels.len(),
            losses.len()
        )));
    }
    if let Some(&g) = labels.iter().find(|&&g| g >= num_labels) {
        return Err(Error::contract(format!("unknown {what} id {g} (only {num_labels} defined)")));
    }
    Ok(())
}

fn members(labels: &[usize], num_labels: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); num_labels];
    for (i, &g) in labels.iter().enumerate() {
        out[g].push(i);
    }
    out
}

/// Indices of the `k` largest losses among `idx`; ties go to the lower index.
fn top_k(losses: &[f64], idx: &[usize], k: usize) -> Vec<usize> {
    let mut order = idx.to_vec();
    order.sort_by(|&a, &b| losses[b].total_cmp(&losses[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

pub fn aggregate_erm(losses: &[f64]) -> Result<LossBreakdown> {
    check_losses(losses)?;
    let c = 1.0 / losses.len() as f64;
    Ok(LossBreakdown::from_coefficients(losses, vec![c; losses.len()]))
}

pub fn aggregate_group(
    losses: &[f64],
    groups: &[usize],
    num_groups: usize,
    weighting: GroupWeighting,
) -> Result<LossBreakdown> {
    check_losses(losses)?;
    check_labels(losses, groups, num_groups, "group")?;
    let b = losses.len() as f64;
    let by_group = members(groups, num_groups);
    let group_losses: Vec<GroupLoss> = by_group
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .map(|(g, m)| GroupLoss {
            group: g,
            count: m.len(),
            loss: m.iter().map(|&i| losses[i]).sum::<f64>() / m.len() as f64,
        })
        .collect();

    let mut coefficients = vec![0.0; losses.len()];
    let mut worst_group = None;
    match weighting {
        GroupWeighting::Frequency => {
            for gl in &group_losses {
                let c = (gl.count as f64 / b) / gl.count as f64;
                for &i in &by_group[gl.group] {
                    coefficients[i] = c;
                }
            }
        }
        GroupWeighting::Worst => {
            let worst = argmax_group(&group_losses);
            for &i in &by_group[worst.group] {
                coefficients[i] = 1.0 / worst.count as f64;
            }
            worst_group = Some(worst.group);
        }
    }
    let mut out = LossBreakdown::from_coefficients(losses, coefficients);
    out.group_losses = group_losses;
    out.worst_group = worst_group;
    Ok(out)
}

/// Highest loss; the lowest group id wins ties.
fn argmax_group(group_losses: &[GroupLoss]) -> &GroupLoss {
    let mut best = &group_losses[0];
    for gl in &group_losses[1..] {
        if gl.loss > best.loss {
            best = gl;
        }
    }
    best
}

/// Nearest-rank percentile: the `⌈α·n⌉`-th smallest value (1-based, clamped).
pub fn nearest_rank(values: &[f64], alpha: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((alpha * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Per-topic sliding windows of recent losses.
#[derive(Clone, Debug)]
pub struct CvarHistory {
    window: usize,
    buffers: Vec<VecDeque<f64>>,
}

impl CvarHistory {
    pub fn new(window: usize, num_topics: usize) -> Self {
        Self {
            window,
            buffers: vec![VecDeque::with_capacity(window); num_topics],
        }
    }

    fn push(&mut self, topic: usize, loss: f64) {
        let buf = &mut self.buffers[topic];
        if buf.len() == self.window {
            buf.pop_front();
        }
        buf.push_back(loss);
    }
}

pub fn aggregate_topic_cvar(
    losses: &[f64],
    topics: &[usize],
    num_topics: usize,
    alpha: f64,
    reduce: CvarReduce,
    mut history: Option<&mut CvarHistory>,
) -> Result<LossBreakdown> {
    check_losses(losses)?;
    check_labels(losses, topics, num_topics, "topic")?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::contract(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if let Some(h) = history.as_deref() {
        if h.buffers.len() != num_topics {
            return Err(Error::contract("cvar history was built for a different topic count"));
        }
    }
    let mut selected_mask = vec![false; losses.len()];
    let mut thresholds = Vec::new();
    for (t, idx) in members(topics, num_topics).iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let batch_losses: Vec<f64> = idx.iter().map(|&i| losses[i]).collect();
        let threshold = match history.as_deref_mut() {
            None => nearest_rank(&batch_losses, alpha),
            Some(h) => {
                for &l in &batch_losses {
                    h.push(t, l);
                }
                let window: Vec<f64> = h.buffers[t].iter().copied().collect();
                nearest_rank(&window, alpha)
            }
        };
        let mut any = false;
        for &i in idx {
            if losses[i] >= threshold {
                selected_mask[i] = true;
                any = true;
            }
        }
        if !any {
            // Only reachable with a history window: keep the topic's worst example.
            selected_mask[top_k(losses, idx, 1)[0]] = true;
        }
        thresholds.push((t, threshold));
    }
    let count = selected_mask.iter().filter(|&&s| s).count();
    let c = match reduce {
        CvarReduce::Mean => 1.0 / count as f64,
        CvarReduce::Sum => 1.0,
    };
    let coefficients = selected_mask.iter().map(|&s| if s { c } else { 0.0 }).collect();
    let mut out = LossBreakdown::from_coefficients(losses, coefficients);
    out.cvar_thresholds = thresholds;
    Ok(out)
}

pub fn aggregate_topk(losses: &[f64], k: usize) -> Result<LossBreakdown> {
    check_losses(losses)?;
    if k == 0 || k > losses.len() {
        return Err(Error::contract(format!("k = {k} outside 1..={}", losses.len())));
    }
    let all: Vec<usize> = (0..losses.len()).collect();
    let mut coefficients = vec![0.0; losses.len()];
    for i in top_k(losses, &all, k) {
        coefficients[i] = 1.0 / k as f64;
    }
    Ok(LossBreakdown::from_coefficients(losses, coefficients))
}

pub fn aggregate_topk_group(losses: &[f64], groups: &[usize], num_groups: usize, k: usize) -> Result<LossBreakdown> {
    check_losses(losses)?;
    check_labels(losses, groups, num_groups, "group")?;
    if k == 0 {
        return Err(Error::contract("k must be at least 1"));
    }
    let mut tops = Vec::new();
    let mut group_losses = Vec::new();
    for (g, idx) in members(groups, num_groups).iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let top = top_k(losses, idx, k.min(idx.len()));
        let loss = top.iter().map(|&i| losses[i]).sum::<f64>() / top.len() as f64;
        group_losses.push(GroupLoss {
            group: g,
            count: idx.len(),
            loss,
        });
        tops.push(top);
    }
    let worst = argmax_group(&group_losses).group;
    let pos = group_losses.iter().position(|gl| gl.group == worst).expect("present");
    let mut coefficients = vec![0.0; losses.len()];
    for &i in &tops[pos] {
        coefficients[i] = 1.0 / tops[pos].len() as f64;
    }
    let mut out = LossBreakdown::from_coefficients(losses, coefficients);
    out.group_losses = group_losses;
    out.worst_group = Some(worst);
    Ok(out)
}
