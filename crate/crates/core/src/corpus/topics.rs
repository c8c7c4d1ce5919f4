use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::error::{Error, Result};
use crate::model::{MASK_ID, PAD_ID};
use crate::seed::{rng_for, Stream};

const DOC_PRIOR: f64 = 0.1;
const WORD_PRIOR: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TopicMode {
    /// Topic = bias-type index.
    #[default]
    Labels,
    /// Collapsed Gibbs LDA over each sentence's visible words.
    Lda,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicConfig {
    #[serde(default)]
    pub mode: TopicMode,
    #[serde(default = "default_topics")]
    pub num_topics: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_chunk")]
    pub chunk_size: usize,
}

fn default_topics() -> usize {
    3
}

fn default_iterations() -> usize {
    350
}

fn default_chunk() -> usize {
    4000
}

impl Default for TopicConfig {
    fn default() -> Self {
        Self {
            mode: TopicMode::Labels,
            num_topics: default_topics(),
            iterations: default_iterations(),
            chunk_size: default_chunk(),
        }
    }
}

impl TopicConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mode == TopicMode::Lda {
            if self.num_topics < 2 {
                return Err(Error::Config(format!("lda needs at least 2 topics, got {}", self.num_topics)));
            }
            if self.chunk_size == 0 {
                return Err(Error::Config("chunk_size must be positive".into()));
            }
        }
        Ok(())
    }

    /// Number of distinct topic ids `assign_topics` can return for `corpus`.
    pub fn topic_count(&self, corpus: &Corpus) -> usize {
        match self.mode {
            TopicMode::Labels => corpus.table.num_types(),
            TopicMode::Lda => self.num_topics,
        }
    }
}

pub fn assign_topics(corpus: &Corpus, config: &TopicConfig, seed: u64) -> Result<Vec<usize>> {
    config.validate()?;
    match config.mode {
        TopicMode::Labels => Ok(corpus
            .examples
            .iter()
            .map(|e| corpus.table.index_of(&e.bias_type).expect("table built from the corpus"))
            .collect()),
        TopicMode::Lda => {
            if corpus.len() < config.num_topics {
                return Err(Error::contract(format!(
                    "lda with {} topics on a corpus of {} sentences",
                    config.num_topics,
                    corpus.len()
                )));
            }
            let docs: Vec<Vec<usize>> = corpus
                .examples
                .iter()
                .map(|e| {
                    e.tokens
                        .iter()
                        .filter(|&&t| t != MASK_ID && t != PAD_ID)
                        .map(|&t| t as usize)
                        .collect()
                })
                .collect();
            Ok(lda(&docs, corpus.vocab.len(), config, seed))
        }
    }
}

/// Chunks are swept in order; each gets `iterations` sweeps against the
/// shared word-topic counts.
fn lda(docs: &[Vec<usize>], vocab_size: usize, config: &TopicConfig, seed: u64) -> Vec<usize> {
    let k = config.num_topics;
    let mut rng = rng_for(seed, Stream::Topics);
    let mut word_topic = vec![0u32; vocab_size * k];
    let mut topic_total = vec![0u32; k];
    let mut doc_topic = vec![0u32; docs.len() * k];
    let mut z: Vec<Vec<usize>> = docs
        .iter()
        .enumerate()
        .map(|(d, words)| {
            words
                .iter()
                .map(|&w| {
                    let t = rng.gen_range(0..k);
                    word_topic[w * k + t] += 1;
                    topic_total[t] += 1;
                    doc_topic[d * k + t] += 1;
                    t
                })
                .collect()
        })
        .collect();

    let word_mass = vocab_size as f64 * WORD_PRIOR;
    let mut weights = vec![0.0f64; k];
    for start in (0..docs.len()).step_by(config.chunk_size) {
        let end = (start + config.chunk_size).min(docs.len());
        for _ in 0..config.iterations {
            for d in start..end {
                for (i, &w) in docs[d].iter().enumerate() {
                    let old = z[d][i];
                    word_topic[w * k + old] -= 1;
                    topic_total[old] -= 1;
                    doc_topic[d * k + old] -= 1;
                    let mut total = 0.0;
                    for t in 0..k {
                        total += (doc_topic[d * k + t] as f64 + DOC_PRIOR) * (word_topic[w * k + t] as f64 + WORD_PRIOR)
                            / (topic_total[t] as f64 + word_mass);
                        weights[t] = total;
                    }
                    let u = rng.gen::<f64>() * total;
                    let new = weights.iter().position(|&c| u < c).unwrap_or(k - 1);
                    z[d][i] = new;
                    word_topic[w * k + new] += 1;
                    topic_total[new] += 1;
                    doc_topic[d * k + new] += 1;
                }
            }
        }
    }

    (0..docs.len())
        .map(|d| {
            let row = &doc_topic[d * k..(d + 1) * k];
            let mut best = 0;
            for t in 1..k {
                if row[t] > row[best] {
                    best = t;
                }
            }
            best
        })
        .collect()
}
