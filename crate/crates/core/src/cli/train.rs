use std::io::Write;

use rand::seq::SliceRandom;

use super::{Checkpoint, CheckpointMeta, RunConfig};
use crate::corpus::{assign_topics, Corpus, CorpusSpec, Example};
use crate::dro::{inverse_frequency_weights, BatchMeta, BiasFrequencyTable, LossBreakdown, Objective};
use crate::error::{Error, Result};
use crate::model::{mlm_forward, AutoencoderState, EncoderParams};
use crate::numkit::{Adam, Tensor};
use crate::seed::{rng_for, Stream};

/// One line of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub step: u64,
    pub epoch: usize,
    pub batch_loss: Option<f64>,
    pub held_out_loss: Option<f64>,
    pub worst_group: Option<usize>,
}

pub fn log_csv(rows: &[LogRow]) -> String {
    fn opt<T: ToString>(v: Option<T>) -> String {
        v.map(|v| v.to_string()).unwrap_or_default()
    }
    let mut s = String::from("step,epoch,batch_loss,held_out_loss,worst_group\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.step,
            r.epoch,
            opt(r.batch_loss),
            opt(r.held_out_loss),
            opt(r.worst_group)
        ));
    }
    s
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<LogRow>,
    pub held_out_start: f64,
    pub held_out_end: f64,
    pub epochs_run: usize,
}

/// Deterministic train / held-out split of example indices.
pub fn split_indices(n: usize, held_out_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::Config(format!("corpus of {n} examples is too small to split")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_for(seed, Stream::Split));
    let held = ((n as f64 * held_out_fraction).round() as usize).clamp(1, n - 1);
    let train = idx.split_off(held);
    Ok((train, idx))
}

/// Mean per-example MLM loss, computed in chunks of `batch`.
pub fn mean_mlm_loss(params: &EncoderParams, examples: &[Example], batch: usize) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::contract("no examples to score"));
    }
    let mut total = 0.0;
    for chunk in examples.chunks(batch.max(1)) {
        total += mlm_forward(params, chunk)?.loss_values().iter().sum::<f64>();
    }
    Ok(total / examples.len() as f64)
}

fn trace_line(step: u64, kind: &str, b: &LossBreakdown) -> String {
    let thresholds: Vec<String> = b.cvar_thresholds.iter().map(|(t, v)| format!("{t}:{v}")).collect();
    format!(
        "step={step} kind={kind} loss={} worst_group={} selected={} cvar_thresholds={}",
        b.value,
        b.worst_group.map_or_else(|| "none".to_string(), |g| g.to_string()),
        b.selected.len(),
        if thresholds.is_empty() { "none".to_string() } else { thresholds.join(";") }
    )
}

/// Trains one seed of `config` on `corpus`.
pub fn train_run(
    config: &RunConfig,
    corpus: &Corpus,
    spec: Option<&CorpusSpec>,
    seed: u64,
    mut trace: Option<&mut dyn Write>,
) -> Result<TrainOutcome> {
    config.validate()?;
    if corpus.vocab.len() > config.model.vocab_size {
        return Err(Error::Config(format!(
            "corpus vocabulary has {} tokens but the model holds {}",
            corpus.vocab.len(),
            config.model.vocab_size
        )));
    }
    if let Some(ex) = corpus.examples.iter().find(|e| e.tokens.len() > config.model.max_len) {
        return Err(Error::Config(format!(
            "example {} has {} tokens, above max_len {}",
            ex.id,
            ex.tokens.len(),
            config.model.max_len
        )));
    }
    let (train_idx, held_idx) = split_indices(corpus.len(), config.held_out_fraction, seed)?;
    let held_out: Vec<Example> = held_idx.iter().map(|&i| corpus.examples[i].clone()).collect();
    let train_table =
        BiasFrequencyTable::from_types(train_idx.iter().map(|&i| corpus.examples[i].bias_type.as_str()));
    let groups: Vec<usize> = corpus
        .examples
        .iter()
        .map(|e| corpus.table.index_of(&e.bias_type).expect("table built from corpus"))
        .collect();
    let topics = assign_topics(corpus, &config.topics, seed)?;
    let num_topics = config.topics.topic_count(corpus);

    let mut params = EncoderParams::init(config.model, &mut rng_for(seed, Stream::EncoderInit))?;
    let autoencoder = if config.aggregator.kind.uses_autoencoder() {
        Some(AutoencoderState::init(
            config.autoencoder,
            config.model.d_model,
            &mut rng_for(seed, Stream::AutoencoderInit),
        )?)
    } else {
        None
    };
    let mut objective = Objective::new(config.aggregator, corpus.table.num_types(), num_topics, autoencoder)?;
    let mut adam = Adam::new(config.optimizer);
    let mut shuffle = rng_for(seed, Stream::Shuffle);

    let held_out_start = mean_mlm_loss(&params, &held_out, config.batch_size)?;
    let mut log = vec![LogRow {
        step: 0,
        epoch: 0,
        batch_loss: None,
        held_out_loss: Some(held_out_start),
        worst_group: None,
    }];
    let mut held_out_end = held_out_start;
    let mut best = held_out_start;
    let mut stale = 0;
    let mut step = 0u64;
    let mut epochs_run = 0;
    let mut order = train_idx;
    let kind = config.aggregator.kind.name();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<Example> = chunk.iter().map(|&i| corpus.examples[i].clone()).collect();
            let bias_groups: Vec<usize> = chunk.iter().map(|&i| groups[i]).collect();
            let batch_topics: Vec<usize> = chunk.iter().map(|&i| topics[i]).collect();
            let types: Vec<&str> = batch.iter().map(|e| e.bias_type.as_str()).collect();
            let weights = inverse_frequency_weights(&train_table, &types)?;

            let forward = mlm_forward(&params, &batch)?;
            let losses = forward.loss_values();
            let pooled: Tensor<f32> = forward.pooled_value().clone();
            let outcome = objective.step(
                &losses,
                &pooled,
                &BatchMeta {
                    bias_groups: &bias_groups,
                    topics: &batch_topics,
                    weights: &weights,
                },
            )?;
            let mut tape = forward.tape;
            let loss = outcome.breakdown.attach(&mut tape, forward.losses)?;
            let grads = tape.backward(loss)?;
            let g: Vec<Option<&Tensor<f32>>> = forward.params.all().iter().map(|&v| grads.get(v)).collect();
            adam.step(&mut params.tensors_mut(), &g)?;
            step += 1;

            if let Some(w) = trace.as_mut() {
                writeln!(w, "{}", trace_line(step, kind, &outcome.breakdown))
                    .map_err(|e| Error::io("trace", e))?;
            }
            log.push(LogRow {
                step,
                epoch,
                batch_loss: Some(outcome.breakdown.value),
                held_out_loss: None,
                worst_group: outcome.breakdown.worst_group,
            });
        }
        epochs_run = epoch;
        held_out_end = mean_mlm_loss(&params, &held_out, config.batch_size)?;
        if let Some(last) = log.last_mut() {
            last.held_out_loss = Some(held_out_end);
        }
        log::info!("seed {seed} epoch {epoch}: held-out loss {held_out_end:.4}");
        if held_out_end < best {
            best = held_out_end;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }

    let meta = CheckpointMeta {
        config: config.clone(),
        seed,
        step,
        vocab: corpus.vocab.tokens().to_vec(),
        corpus_spec: spec.cloned(),
    };
    let checkpoint = Checkpoint::new(&params, objective.autoencoder(), meta);
    Ok(TrainOutcome {
        checkpoint,
        log,
        held_out_start,
        held_out_end,
        epochs_run,
    })
}
