//! Brute-force reference implementations of the batch aggregators.
//!
//! Written directly from the definitions, without sharing any selection code
//! with the library: ranks are found by counting, percentiles by sorting.

pub struct Reference {
    pub value: f64,
    /// Indices that carry weight in the scalar.
    pub selected: Vec<usize>,
    pub worst_group: Option<usize>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Position of `i` in the descending order of `losses` restricted to `pool`,
/// with lower indices first among equal values.
fn rank_in(losses: &[f64], pool: &[usize], i: usize) -> usize {
    pool.iter()
        .filter(|&&j| losses[j] > losses[i] || (losses[j] == losses[i] && j < i))
        .count()
}

fn largest(losses: &[f64], pool: &[usize], k: usize) -> Vec<usize> {
    pool.iter().copied().filter(|&i| rank_in(losses, pool, i) < k).collect()
}

fn present_groups(groups: &[usize]) -> Vec<usize> {
    let mut g: Vec<usize> = groups.to_vec();
    g.sort_unstable();
    g.dedup();
    g
}

fn members(groups: &[usize], g: usize) -> Vec<usize> {
    (0..groups.len()).filter(|&i| groups[i] == g).collect()
}

/// First group (by id) attaining the maximum.
fn argmax(scores: &[(usize, f64)]) -> usize {
    let best = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    scores.iter().find(|s| s.1 == best).unwrap().0
}

pub fn erm(losses: &[f64]) -> Reference {
    Reference {
        value: mean(losses),
        selected: (0..losses.len()).collect(),
        worst_group: None,
    }
}

pub fn group_frequency(losses: &[f64], groups: &[usize]) -> Reference {
    let b = losses.len() as f64;
    let value = present_groups(groups)
        .into_iter()
        .map(|g| {
            let m: Vec<f64> = members(groups, g).iter().map(|&i| losses[i]).collect();
            m.len() as f64 / b * mean(&m)
        })
        .sum();
    Reference {
        value,
        selected: (0..losses.len()).collect(),
        worst_group: None,
    }
}

pub fn group_worst(losses: &[f64], groups: &[usize]) -> Reference {
    let scores: Vec<(usize, f64)> = present_groups(groups)
        .into_iter()
        .map(|g| (g, mean(&members(groups, g).iter().map(|&i| losses[i]).collect::<Vec<_>>())))
        .collect();
    let g = argmax(&scores);
    Reference {
        value: scores.iter().find(|s| s.0 == g).unwrap().1,
        selected: members(groups, g),
        worst_group: Some(g),
    }
}

/// The `⌈α·n⌉`-th smallest value.
pub fn percentile(values: &[f64], alpha: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((alpha * s.len() as f64).ceil() as usize).max(1).min(s.len());
    s[rank - 1]
}

pub fn topic_cvar(losses: &[f64], topics: &[usize], alpha: f64, sum: bool) -> Reference {
    let mut selected = Vec::new();
    for t in present_groups(topics) {
        let idx = members(topics, t);
        let vals: Vec<f64> = idx.iter().map(|&i| losses[i]).collect();
        let threshold = percentile(&vals, alpha);
        selected.extend(idx.into_iter().filter(|&i| losses[i] >= threshold));
    }
    selected.sort_unstable();
    let total: f64 = selected.iter().map(|&i| losses[i]).sum();
    Reference {
        value: if sum { total } else { total / selected.len() as f64 },
        selected,
        worst_group: None,
    }
}

pub fn topk(losses: &[f64], k: usize) -> Reference {
    let all: Vec<usize> = (0..losses.len()).collect();
    let selected = largest(losses, &all, k);
    Reference {
        value: mean(&selected.iter().map(|&i| losses[i]).collect::<Vec<_>>()),
        selected,
        worst_group: None,
    }
}

pub fn topk_group(losses: &[f64], groups: &[usize], k: usize) -> Reference {
    let per: Vec<(usize, Vec<usize>)> = present_groups(groups)
        .into_iter()
        .map(|g| {
            let idx = members(groups, g);
            let kk = k.min(idx.len());
            (g, largest(losses, &idx, kk))
        })
        .collect();
    let scores: Vec<(usize, f64)> = per
        .iter()
        .map(|(g, sel)| (*g, mean(&sel.iter().map(|&i| losses[i]).collect::<Vec<_>>())))
        .collect();
    let g = argmax(&scores);
    Reference {
        value: scores.iter().find(|s| s.0 == g).unwrap().1,
        selected: per.into_iter().find(|p| p.0 == g).unwrap().1,
        worst_group: Some(g),
    }
}

/// Row-wise argmax of a `[b × g]` row-major matrix, first index on ties.
pub fn row_argmax(data: &[f32], cols: usize) -> Vec<usize> {
    data.chunks(cols)
        .map(|row| {
            let best = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            row.iter().position(|&v| v == best).unwrap()
        })
        .collect()
}
