//! Suites shared by the integration tests and the acceptance runner. Each
//! returns a short summary on success and a description of the first
//! mismatch on failure.

use std::collections::BTreeMap;

use drobias::corpus::Example;
use drobias::dro::{
    aggregate_erm, aggregate_group, aggregate_topic_cvar, aggregate_topk, aggregate_topk_group, ae_diversity_loss,
    ae_recon_loss, inverse_frequency_weights, robustdebias_step, AggregatorConfig, AggregatorKind, BatchMeta,
    BiasFrequencyTable, CvarHistory, CvarReduce, DiversityLoss, GroupWeighting, LossBreakdown, Objective,
};
use drobias::model::{mlm_forward, mlm_losses, AutoencoderVars, EncoderParams, EncoderVars, AE_TENSOR_NAMES};
use drobias::numkit::gradcheck::check;
use drobias::numkit::{Tape, Tensor, Var};
use rand::seq::SliceRandom;
use rand::Rng;

use super::fixtures::{random_batch, random_tensor, rescaled, rng, small_autoencoder, small_corpus, toy_encoder, Batch};
use super::oracle::{self, Reference};
use super::ORACLE_TOL;

fn agree(what: &str, seed: u64, got: &LossBreakdown, want: &Reference) -> Result<(), String> {
    if (got.value - want.value).abs() > ORACLE_TOL {
        return Err(format!("{what} batch {seed}: value {} vs reference {}", got.value, want.value));
    }
    if got.selected != want.selected {
        return Err(format!(
            "{what} batch {seed}: selected {:?} vs reference {:?}",
            got.selected, want.selected
        ));
    }
    if want.worst_group.is_some() && got.worst_group != want.worst_group {
        return Err(format!(
            "{what} batch {seed}: worst group {:?} vs reference {:?}",
            got.worst_group, want.worst_group
        ));
    }
    Ok(())
}

fn err(e: drobias::Error) -> String {
    e.to_string()
}

/// Reference for the sliding-window CVaR variant, keeping every loss seen.
struct WindowReference {
    window: usize,
    seen: Vec<Vec<f64>>,
}

impl WindowReference {
    fn step(&mut self, losses: &[f64], topics: &[usize], alpha: f64) -> Reference {
        let mut selected = Vec::new();
        let mut present: Vec<usize> = topics.to_vec();
        present.sort_unstable();
        present.dedup();
        for t in present {
            let idx: Vec<usize> = (0..losses.len()).filter(|&i| topics[i] == t).collect();
            self.seen[t].extend(idx.iter().map(|&i| losses[i]));
            let start = self.seen[t].len().saturating_sub(self.window);
            let threshold = oracle::percentile(&self.seen[t][start..], alpha);
            let mut chosen: Vec<usize> = idx.iter().copied().filter(|&i| losses[i] >= threshold).collect();
            if chosen.is_empty() {
                chosen = oracle::topk(&idx.iter().map(|&i| losses[i]).collect::<Vec<_>>(), 1)
                    .selected
                    .into_iter()
                    .map(|j| idx[j])
                    .collect();
            }
            selected.extend(chosen);
        }
        selected.sort_unstable();
        let value = selected.iter().map(|&i| losses[i]).sum::<f64>() / selected.len() as f64;
        Reference {
            value,
            selected,
            worst_group: None,
        }
    }
}

fn latent_reference(
    batch: &Batch,
    ae: &drobias::model::AutoencoderState,
    weights: Option<&[f64]>,
    cfg: &AggregatorConfig,
) -> Result<(Reference, Vec<usize>), String> {
    let mut trained = ae.clone();
    drobias::dro::train_ae_step(&mut trained, &batch.pooled, weights, cfg.beta, cfg.diversity_sign).map_err(err)?;
    let groups = if trained.optimizer_steps() <= cfg.warmup_steps {
        vec![0; batch.losses.len()]
    } else {
        let (h, _) = trained.forward(&batch.pooled).map_err(err)?;
        oracle::row_argmax(h.data(), h.cols())
    };
    let k = cfg.k.min(batch.losses.len());
    Ok((oracle::topk_group(&batch.losses, &groups, k), groups))
}

/// All seven aggregators against the brute-force references on `batches`
/// random batches each.
pub fn oracle_suite(batches: u64) -> Result<String, String> {
    let alpha = 0.8;
    let mut history = CvarHistory::new(32, 8);
    let mut window_ref = WindowReference {
        window: 32,
        seen: vec![Vec::new(); 8],
    };
    let mut latent: Vec<(AggregatorKind, drobias::model::AutoencoderState)> = [AggregatorKind::TopkAe, AggregatorKind::Robustdebias]
        .into_iter()
        .map(|k| (k, small_autoencoder(7)))
        .collect();
    let mut checked = 0usize;
    for seed in 0..batches {
        let b = random_batch(seed, 64, 8);
        let (l, g, n) = (&b.losses, &b.groups, b.num_groups);
        let mut r = rng(10_000 + seed);

        agree("erm", seed, &aggregate_erm(l).map_err(err)?, &oracle::erm(l))?;
        agree(
            "group/frequency",
            seed,
            &aggregate_group(l, g, n, GroupWeighting::Frequency).map_err(err)?,
            &oracle::group_frequency(l, g),
        )?;
        agree(
            "group/worst",
            seed,
            &aggregate_group(l, g, n, GroupWeighting::Worst).map_err(err)?,
            &oracle::group_worst(l, g),
        )?;
        for (reduce, sum) in [(CvarReduce::Mean, false), (CvarReduce::Sum, true)] {
            agree(
                "topic_cvar",
                seed,
                &aggregate_topic_cvar(l, g, n, alpha, reduce, None).map_err(err)?,
                &oracle::topic_cvar(l, g, alpha, sum),
            )?;
        }
        let mut topics8 = g.clone();
        topics8.iter_mut().for_each(|t| *t %= 8);
        agree(
            "topic_cvar/window",
            seed,
            &aggregate_topic_cvar(l, &topics8, 8, alpha, CvarReduce::Mean, Some(&mut history)).map_err(err)?,
            &window_ref.step(l, &topics8, alpha),
        )?;
        let k = r.gen_range(1..=l.len());
        agree("topk", seed, &aggregate_topk(l, k).map_err(err)?, &oracle::topk(l, k))?;
        let k = r.gen_range(1..=8);
        agree(
            "topk_group",
            seed,
            &aggregate_topk_group(l, g, n, k).map_err(err)?,
            &oracle::topk_group(l, g, k),
        )?;

        for (kind, ae) in latent.iter_mut() {
            let mut cfg = AggregatorConfig::new(*kind);
            cfg.k = r.gen_range(1..=8);
            cfg.warmup_steps = 20;
            let weights: Option<Vec<f64>> = (*kind == AggregatorKind::Robustdebias).then(|| {
                let names: Vec<String> = g.iter().map(|x| format!("type{x}")).collect();
                let mut counts = BTreeMap::new();
                for name in &names {
                    counts.entry(name.clone()).or_insert_with(|| r.gen_range(1..50u64));
                }
                let table = BiasFrequencyTable::from_counts(counts).unwrap();
                inverse_frequency_weights(&table, &names).unwrap()
            });
            let (want, want_groups) = latent_reference(&b, ae, weights.as_deref(), &cfg)?;
            let (got, _, groups) =
                robustdebias_step(l, &b.pooled, &b.pooled, weights.as_deref(), ae, &cfg).map_err(err)?;
            if groups != want_groups {
                return Err(format!("{kind} batch {seed}: latent groups differ from the reference"));
            }
            agree(kind.name(), seed, &got, &want)?;
        }
        checked += 1;
    }
    Ok(format!("{checked} batches x 7 aggregators agree with the references"))
}

fn same(what: &str, seed: u64, a: &LossBreakdown, b: &LossBreakdown) -> Result<(), String> {
    if (a.value - b.value).abs() > ORACLE_TOL {
        return Err(format!("{what} batch {seed}: {} vs {}", a.value, b.value));
    }
    let worst = a
        .coefficients
        .iter()
        .zip(&b.coefficients)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    if worst > ORACLE_TOL {
        return Err(format!("{what} batch {seed}: coefficients differ by {worst}"));
    }
    Ok(())
}

/// Limits in which one aggregator reduces to another.
pub fn collapse_suite(batches: u64) -> Result<String, String> {
    let mut rd = ae_objective(AggregatorKind::Robustdebias);
    let mut tae = ae_objective(AggregatorKind::TopkAe);
    let table = BiasFrequencyTable::from_counts((0..8).map(|g| (format!("type{g}"), 40)).collect()).unwrap();
    for seed in 0..batches {
        let b = random_batch(50_000 + seed, 64, 8);
        let (l, g, n) = (&b.losses, &b.groups, b.num_groups);
        let erm = aggregate_erm(l).map_err(err)?;
        same("topk(k=b) vs erm", seed, &aggregate_topk(l, l.len()).map_err(err)?, &erm)?;
        let one = vec![0; l.len()];
        for k in [1, 3, 6] {
            let k = k.min(l.len());
            same(
                "topk_group(one group) vs topk",
                seed,
                &aggregate_topk_group(l, &one, 1, k).map_err(err)?,
                &aggregate_topk(l, k).map_err(err)?,
            )?;
        }
        same(
            "cvar(alpha->0) vs erm",
            seed,
            &aggregate_topic_cvar(l, g, n, 1e-9, CvarReduce::Mean, None).map_err(err)?,
            &erm,
        )?;
        same(
            "group(frequency) vs erm",
            seed,
            &aggregate_group(l, g, n, GroupWeighting::Frequency).map_err(err)?,
            &erm,
        )?;
        let names: Vec<String> = g.iter().map(|x| format!("type{x}")).collect();
        let weights = inverse_frequency_weights(&table, &names).map_err(err)?;
        let meta = BatchMeta {
            bias_groups: g,
            topics: g,
            weights: &weights,
        };
        let a = rd.step(l, &b.pooled, &meta).map_err(err)?;
        let c = tae.step(l, &b.pooled, &meta).map_err(err)?;
        same("robustdebias vs topk_ae (uniform counts)", seed, &a.breakdown, &c.breakdown)?;
        if a.latent_groups != c.latent_groups {
            return Err(format!("robustdebias vs topk_ae batch {seed}: latent groups differ"));
        }
    }
    Ok(format!("5 collapse laws hold on {batches} batches"))
}

fn ae_objective(kind: AggregatorKind) -> Objective {
    let mut cfg = AggregatorConfig::new(kind);
    cfg.warmup_steps = 5;
    Objective::new(cfg, 8, 8, Some(small_autoencoder(3))).unwrap()
}

/// Largest relative error of each gradient check, by name.
pub fn gradient_suite() -> Result<Vec<(String, f64)>, String> {
    const EPS: f64 = 1e-3;
    const TOL: f64 = 1e-4;
    let mut r = rng(99);
    let mut out = Vec::new();
    let mut run = |name: &str, inputs: Vec<Tensor<f64>>, f: &dyn Fn(&mut Tape<f64>, &[Var]) -> drobias::Result<Var>| {
        let res = check(&inputs, EPS, f).map_err(|e| format!("{name}: {e}"))?;
        if res.checked == 0 || res.max_rel_error > TOL {
            return Err(format!(
                "{name}: relative error {:.3e} at {:?} ({} coordinates)",
                res.max_rel_error, res.worst, res.checked
            ));
        }
        out.push((name.to_string(), res.max_rel_error));
        Ok(())
    };
    // Contract every op's output against fixed weights to get a scalar.
    fn project(t: &mut Tape<f64>, v: Var, seed: u64) -> drobias::Result<Var> {
        let shape = t.value(v).shape().to_vec();
        let w = random_tensor(&mut rng(seed), &shape, 1.0);
        t.dot_const(v, w)
    }
    let m34 = random_tensor(&mut r, &[3, 4], 1.0);
    let m45 = random_tensor(&mut r, &[4, 5], 1.0);
    let m34b = random_tensor(&mut r, &[3, 4], 1.0);
    let row4 = random_tensor(&mut r, &[1, 4], 1.0);
    // Keep ReLU inputs away from the kink.
    let kinkless = Tensor::new([3, 4], m34.data().iter().map(|&x| if x.abs() < 0.1 { x + 0.3 } else { x }).collect()).unwrap();

    run("matmul", vec![m34.clone(), m45.clone()], &|t, v| {
        let y = t.matmul(v[0], v[1])?;
        project(t, y, 1)
    })?;
    run("transpose", vec![m34.clone()], &|t, v| {
        let y = t.transpose(v[0])?;
        project(t, y, 2)
    })?;
    run("add", vec![m34.clone(), m34b.clone()], &|t, v| {
        let y = t.add(v[0], v[1])?;
        project(t, y, 3)
    })?;
    run("mul", vec![m34.clone(), m34b.clone()], &|t, v| {
        let y = t.mul(v[0], v[1])?;
        project(t, y, 4)
    })?;
    run("add_row", vec![m34.clone(), row4.clone()], &|t, v| {
        let y = t.add_row(v[0], v[1])?;
        project(t, y, 5)
    })?;
    run("mul_row", vec![m34.clone(), row4.clone()], &|t, v| {
        let y = t.mul_row(v[0], v[1])?;
        project(t, y, 6)
    })?;
    run("scale", vec![m34.clone()], &|t, v| {
        let y = t.scale(v[0], -1.7)?;
        project(t, y, 7)
    })?;
    run("relu", vec![kinkless], &|t, v| {
        let y = t.relu(v[0])?;
        project(t, y, 8)
    })?;
    run("gelu", vec![m34.clone()], &|t, v| {
        let y = t.gelu(v[0])?;
        project(t, y, 9)
    })?;
    run("softmax_rows", vec![m34.clone()], &|t, v| {
        let y = t.softmax_rows(v[0])?;
        project(t, y, 10)
    })?;
    run("log_softmax_rows", vec![m34.clone()], &|t, v| {
        let y = t.log_softmax_rows(v[0])?;
        project(t, y, 11)
    })?;
    run("layer_norm_rows", vec![m34.clone()], &|t, v| {
        let y = t.layer_norm_rows(v[0])?;
        project(t, y, 12)
    })?;
    run("slice_cols", vec![m34.clone()], &|t, v| {
        let y = t.slice_cols(v[0], 1, 2)?;
        project(t, y, 13)
    })?;
    run("concat_cols", vec![m34.clone(), m34b.clone()], &|t, v| {
        let y = t.concat_cols(&[v[0], v[1]])?;
        project(t, y, 14)
    })?;
    run("concat_rows", vec![m34.clone(), row4.clone()], &|t, v| {
        let y = t.concat_rows(&[v[0], v[1]])?;
        project(t, y, 15)
    })?;
    run("gather_rows", vec![m34.clone()], &|t, v| {
        let y = t.gather_rows(v[0], &[2, 0, 2, 1])?;
        project(t, y, 16)
    })?;
    run("mean_rows", vec![m34.clone()], &|t, v| {
        let y = t.mean_rows(v[0])?;
        project(t, y, 17)
    })?;
    run("pick", vec![m34.clone()], &|t, v| {
        let y = t.pick(v[0], &[3, 0, 1])?;
        project(t, y, 18)
    })?;
    run("sum_all", vec![m34.clone()], &|t, v| {
        let y = t.mul(v[0], v[0])?;
        t.sum_all(y)
    })?;
    run("mean_all", vec![m34.clone()], &|t, v| {
        let y = t.mul(v[0], v[0])?;
        t.mean_all(y)
    })?;
    run("dot_const", vec![m34.clone()], &|t, v| project(t, v[0], 19))?;
    run("pairwise_kl_mean", vec![m34.clone()], &|t, v| {
        let h = t.softmax_rows(v[0])?;
        t.pairwise_kl_mean(h)
    })?;

    // Full masked-LM loss in f64, every parameter tensor checked.
    let (corpus, _) = small_corpus(5);
    let base = toy_encoder(&corpus, 5);
    let params = rescaled(&base, 0.5, 6);
    let batch: Vec<Example> = corpus.examples[..2].to_vec();
    let config = *params.config();
    run("mlm_loss", params.tensors().to_vec(), &move |t, v| {
        let vars = EncoderVars::from_vars(config, v.to_vec())?;
        let (losses, _) = mlm_losses(t, &vars, &batch)?;
        t.dot_const(losses, Tensor::vector(vec![0.7, 0.3]))
    })?;

    // Autoencoder reconstruction and diversity losses.
    let (b, d, hdim, g) = (4, 5, 6, 3);
    let shapes = [[d, hdim], [1, hdim], [hdim, g], [1, g], [g, hdim], [1, hdim], [hdim, d], [1, d]];
    assert_eq!(shapes.len(), AE_TENSOR_NAMES.len());
    let ae_params: Vec<Tensor<f64>> = shapes.iter().map(|s| random_tensor(&mut r, s, 0.8)).collect();
    let x = random_tensor(&mut r, &[b, d], 1.5);
    let xc = x.clone();
    run("ae_recon_loss", ae_params.clone(), &move |t, v| {
        let vars = AutoencoderVars::from_vars(v.to_vec())?;
        let xv = t.constant(xc.clone());
        let (_, recon) = vars.forward(t, xv)?;
        ae_recon_loss(t, &xc, recon, Some(&[1.0, 0.5, 2.0, 1.5]))
    })?;
    run("ae_diversity_loss", ae_params, &move |t, v| {
        let vars = AutoencoderVars::from_vars(v.to_vec())?;
        let xv = t.constant(x.clone());
        let (h, _) = vars.forward(t, xv)?;
        match ae_diversity_loss(t, h)? {
            DiversityLoss::Value(v) => Ok(v),
            DiversityLoss::Degenerate => panic!("four rows are never degenerate"),
        }
    })?;
    Ok(out)
}

fn theta_gradients(params: &EncoderParams, batch: &[Example], coefficients: &[f64]) -> Result<(Vec<Tensor<f32>>, Tensor<f32>), String> {
    let fwd = mlm_forward(params, batch).map_err(err)?;
    let mut tape = fwd.tape;
    let coeffs = Tensor::vector(coefficients.iter().map(|&c| c as f32).collect());
    let scalar = tape.dot_const(fwd.losses, coeffs).map_err(err)?;
    let grads = tape.backward(scalar).map_err(err)?;
    let upstream = grads.get(fwd.losses).cloned().ok_or("no gradient reached the losses")?;
    let theta = fwd
        .params
        .all()
        .iter()
        .zip(params.tensors())
        .map(|(v, t)| grads.get(*v).cloned().unwrap_or_else(|| Tensor::zeros(t.shape().to_vec())))
        .collect();
    Ok((theta, upstream))
}

/// For each selecting aggregator: unselected examples receive exactly zero
/// upstream gradient, and replacing them by other sentences leaves the
/// parameter gradient bit-for-bit unchanged.
pub fn routing_suite() -> Result<String, String> {
    let (corpus, _) = small_corpus(11);
    let params: EncoderParams = rescaled(&toy_encoder(&corpus, 11), 0.3, 11).cast();
    let table = BiasFrequencyTable::from_types(corpus.examples.iter().map(|e| e.bias_type.as_str()));
    let type_ids: BTreeMap<&str, usize> = table.types().enumerate().map(|(i, t)| (t, i)).collect();
    let mut r = rng(12);
    let mut checked = 0;
    for kind in [
        AggregatorKind::Topk,
        AggregatorKind::TopkGroup,
        AggregatorKind::TopicCvar,
        AggregatorKind::Robustdebias,
    ] {
        let mut cfg = AggregatorConfig::new(kind);
        cfg.k = 4;
        cfg.warmup_steps = 0;
        let ae = kind.uses_autoencoder().then(|| {
            drobias::model::AutoencoderState::init(
                drobias::model::AutoencoderConfig::default(),
                params.config().d_model,
                &mut rng(13),
            )
            .unwrap()
        });
        let mut objective = Objective::new(cfg, table.num_types(), 3, ae).map_err(err)?;
        for trial in 0..3 {
            let mut pool = corpus.examples.clone();
            pool.shuffle(&mut r);
            let (batch, spare) = pool.split_at(16);
            let groups: Vec<usize> = batch.iter().map(|e| type_ids[e.bias_type.as_str()]).collect();
            let topics: Vec<usize> = batch.iter().map(|e| e.id as usize % 3).collect();
            let weights = inverse_frequency_weights(&table, &batch.iter().map(|e| e.bias_type.clone()).collect::<Vec<_>>())
                .map_err(err)?;
            let fwd = mlm_forward(&params, batch).map_err(err)?;
            let losses = fwd.loss_values();
            let pooled = fwd.pooled_value().clone();
            let step = objective
                .step(
                    &losses,
                    &pooled,
                    &BatchMeta {
                        bias_groups: &groups,
                        topics: &topics,
                        weights: &weights,
                    },
                )
                .map_err(err)?;
            let c = &step.breakdown.coefficients;
            let unselected: Vec<usize> = (0..batch.len()).filter(|&i| c[i] == 0.0).collect();
            if unselected.is_empty() || step.breakdown.selected.is_empty() {
                return Err(format!("{kind} trial {trial}: selection is trivial"));
            }
            let (theta, upstream) = theta_gradients(&params, batch, c)?;
            for &i in &unselected {
                if upstream.data()[i] != 0.0 {
                    return Err(format!("{kind} trial {trial}: unselected example {i} has upstream gradient"));
                }
            }
            let mut swapped = batch.to_vec();
            for (slot, &i) in unselected.iter().enumerate() {
                swapped[i] = spare[slot].clone();
            }
            let (theta_swapped, _) = theta_gradients(&params, &swapped, c)?;
            if theta != theta_swapped {
                return Err(format!("{kind} trial {trial}: unselected examples changed the parameter gradient"));
            }
            let mut touched = batch.to_vec();
            let s = step.breakdown.selected[0];
            touched[s] = spare[spare.len() - 1].clone();
            let (theta_touched, _) = theta_gradients(&params, &touched, c)?;
            if theta == theta_touched {
                return Err(format!("{kind} trial {trial}: a selected example had no effect on the gradient"));
            }
            if let Some(latent) = &step.latent_groups {
                let plain = aggregate_topk_group(&losses, latent, 6, cfg.k.min(batch.len())).map_err(err)?;
                if plain.coefficients != *c {
                    return Err(format!("{kind} trial {trial}: latent selection is not topk_group over its groups"));
                }
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} batches over 4 aggregators route gradient only through selected examples"))
}

/// Two published (LMS, SS, ICAT) triples. The second ICAT sits on a rounding
/// boundary of its two-decimal inputs, so it is checked against the interval
/// of ICAT values those inputs can stand for.
pub fn icat_identity() -> Result<String, String> {
    let first = drobias::eval::icat(85.35, 52.25);
    if format!("{first:.2}") != "81.51" {
        return Err(format!("icat(85.35, 52.25) = {first:.4}, expected 81.51"));
    }
    let second = drobias::eval::icat(83.78, 59.15);
    let h = 0.005;
    let lo = drobias::eval::icat(83.78 - h, 59.15 + h);
    let hi = drobias::eval::icat(83.78 + h, 59.15 - h);
    if !(lo <= 68.44 && 68.44 <= hi) {
        return Err(format!("68.44 outside [{lo:.4}, {hi:.4}]"));
    }
    Ok(format!(
        "81.51 exact ({first:.5}); 68.44 within [{lo:.3}, {hi:.3}] (rounded inputs give {second:.5})"
    ))
}

/// Scores of an all-zero model on the synthetic suites: exactly 50 for SS and
/// CrowS, and every SEAT test degenerate or zero.
pub fn uniform_fixed_points() -> Result<String, String> {
    use drobias::cli::{train_run, Checkpoint, RunConfig};
    use drobias::eval::{build_synthetic_suites, evaluate, EvalReport, Metric, Suite, OVERALL};
    use drobias::model::InitScheme;

    let (corpus, spec) = small_corpus(21);
    let mut config = RunConfig::default();
    config.epochs = 0;
    config.model.init = InitScheme::Zeros;
    config.model.vocab_size = corpus.vocab.len();
    let outcome = train_run(&config, &corpus, Some(&spec), 0, None).map_err(err)?;
    let ckpt = Checkpoint::from_bytes(&outcome.checkpoint.to_bytes().map_err(err)?).map_err(err)?;
    let params = ckpt.encoder().map_err(err)?;
    let suites = build_synthetic_suites(&spec).map_err(err)?;
    let report = evaluate(&params, &suites, Suite::All, EvalReport::new("uniform", 0)).map_err(err)?;
    for demo in report.demographics() {
        for metric in [Metric::Ss, Metric::Crows] {
            let v = report.value(demo, metric).ok_or(format!("{demo}: no {metric}"))?;
            if v != 50.0 {
                return Err(format!("{demo} {metric} = {v}, expected exactly 50"));
            }
        }
    }
    let seat = drobias::eval::seat_scores(&params, &suites.seat).map_err(err)?;
    let all = &seat[OVERALL];
    if all.mean_abs_effect != 0.0 || all.degenerate != all.tests {
        return Err(format!(
            "seat: mean |d| {} with {} of {} degenerate",
            all.mean_abs_effect, all.degenerate, all.tests
        ));
    }
    Ok(format!(
        "SS 50, CrowS 50 over {} and {} items; {} of {} SEAT tests degenerate with |d| 0",
        suites.stereoset.len(),
        suites.crows.len(),
        all.degenerate,
        all.tests
    ))
}
