//! Run configuration, checkpoints, the training loop and the
//! `gen-corpus` / `train` / `eval` / `compare` commands.

mod checkpoint;
mod config;
mod train;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use checkpoint::{Checkpoint, CheckpointMeta, MAGIC, VERSION};
pub use config::{CorpusSource, RunConfig};
pub use train::{log_csv, mean_mlm_loss, split_indices, train_run, LogRow, TrainOutcome};

use crate::corpus::{apply_split_preset, generate, load_jsonl, write_jsonl, Corpus, CorpusSpec, SplitPreset, Vocab};
use crate::dro::AggregatorKind;
use crate::error::{Error, Result};
use crate::eval::{
    build_synthetic_suites, compare_table, evaluate, load_crows, load_seat, load_stereoset, with_eval_pool, EvalReport,
    Metric, Suite, Suites,
};

/// `dir/stem.suffix` for a file `dir/stem.ext`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug)]
pub struct GenCorpusArgs {
    pub preset: Option<SplitPreset>,
    pub spec: Option<PathBuf>,
    pub scale: f64,
    pub stereotype_strength: f64,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

/// Resolves the corpus spec a `gen-corpus` invocation describes.
pub fn corpus_spec_for(args: &GenCorpusArgs) -> Result<CorpusSpec> {
    let mut spec = match (&args.preset, &args.spec) {
        (Some(p), None) => {
            let counts = apply_split_preset(*p, args.scale)?;
            CorpusSpec::synthetic(&counts, args.stereotype_strength, 0)
        }
        (None, Some(path)) => read_json(path)?,
        _ => return Err(Error::Config("give exactly one of --preset or --spec".into())),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    Ok(spec)
}

/// Writes the corpus JSONL plus `.vocab`, `.freq.json` and `.spec.json`
/// sidecars. Returns the number of examples.
pub fn cmd_gen_corpus(args: &GenCorpusArgs) -> Result<usize> {
    let spec = corpus_spec_for(args)?;
    let corpus = generate(&spec)?.corpus;
    write_jsonl(&args.out, &corpus)?;
    corpus.vocab.save(&sidecar(&args.out, "vocab"))?;
    write(&sidecar(&args.out, "freq.json"), serde_json::to_string_pretty(&corpus.table)?)?;
    write(&sidecar(&args.out, "spec.json"), serde_json::to_string_pretty(&spec)?)?;
    Ok(corpus.len())
}

/// Loads a JSONL corpus with its vocabulary and spec sidecars when present.
pub fn load_corpus_files(path: &Path) -> Result<(Corpus, Option<CorpusSpec>)> {
    let vocab_path = sidecar(path, "vocab");
    let vocab = if vocab_path.exists() { Some(Vocab::load(&vocab_path)?) } else { None };
    let corpus = load_jsonl(path, vocab)?;
    let spec_path = sidecar(path, "spec.json");
    let spec = if spec_path.exists() { Some(read_json(&spec_path)?) } else { None };
    Ok((corpus, spec))
}

pub fn resolve_corpus(source: &CorpusSource) -> Result<(Corpus, Option<CorpusSpec>)> {
    match source {
        CorpusSource::Preset {
            preset,
            scale,
            stereotype_strength,
            seed,
        } => {
            let spec = CorpusSpec::synthetic(&apply_split_preset(*preset, *scale)?, *stereotype_strength, *seed);
            let corpus = generate(&spec)?.corpus;
            Ok((corpus, Some(spec)))
        }
        CorpusSource::Jsonl { path } => load_corpus_files(path),
    }
}

/// Per-seed checkpoints of one `train` invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: AggregatorKind,
    pub seeds: Vec<u64>,
    /// Checkpoint file names relative to the manifest.
    pub checkpoints: Vec<String>,
}

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug)]
pub struct TrainArgs {
    pub corpus: Option<PathBuf>,
    pub dro: Option<AggregatorKind>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub trace: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedSummary {
    pub seed: u64,
    pub checkpoint: PathBuf,
    pub held_out_start: f64,
    pub held_out_end: f64,
    pub epochs_run: usize,
}

/// Trains every configured seed, writing `seed<N>.ckpt`, `seed<N>.log.csv`,
/// optional `seed<N>.trace` and a manifest into `out`.
pub fn cmd_train(args: &TrainArgs) -> Result<Vec<SeedSummary>> {
    let mut config = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(kind) = args.dro {
        config.aggregator.kind = kind;
    }
    if let Some(path) = &args.corpus {
        config.corpus = Some(CorpusSource::Jsonl { path: path.clone() });
    }
    config.validate()?;
    let source = config
        .corpus
        .clone()
        .ok_or_else(|| Error::Config("no corpus: pass --corpus or set `corpus` in the config".into()))?;
    let (corpus, spec) = resolve_corpus(&source)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;

    let mut summaries = Vec::new();
    let mut names = Vec::new();
    for &seed in &config.seeds {
        let mut trace_buf = Vec::new();
        let outcome = train_run(
            &config,
            &corpus,
            spec.as_ref(),
            seed,
            args.trace.then_some(&mut trace_buf as &mut dyn std::io::Write),
        )?;
        let name = format!("seed{seed}.ckpt");
        let path = args.out.join(&name);
        outcome.checkpoint.save(&path)?;
        write(&args.out.join(format!("seed{seed}.log.csv")), log_csv(&outcome.log))?;
        if args.trace {
            write(&args.out.join(format!("seed{seed}.trace")), &trace_buf)?;
        }
        summaries.push(SeedSummary {
            seed,
            checkpoint: path,
            held_out_start: outcome.held_out_start,
            held_out_end: outcome.held_out_end,
            epochs_run: outcome.epochs_run,
        });
        names.push(name);
    }
    let manifest = Manifest {
        kind: config.aggregator.kind,
        seeds: config.seeds.clone(),
        checkpoints: names,
    };
    write(&args.out.join(MANIFEST), serde_json::to_string_pretty(&manifest)?)?;
    Ok(summaries)
}

/// Suites for `ckpt`: external files when `bench` is given (a file for a
/// single suite, a directory of `stereoset.json`, `seat.json` and
/// `crows.json` for `all`), otherwise built from the training corpus spec.
pub fn suites_for(ckpt: &Checkpoint, suite: Suite, bench: Option<&Path>) -> Result<Suites> {
    let Some(bench) = bench else {
        let spec = ckpt.meta.corpus_spec.as_ref().ok_or_else(|| {
            Error::Config("checkpoint has no synthetic corpus spec; pass --bench with benchmark files".into())
        })?;
        return build_synthetic_suites(spec);
    };
    let vocab = ckpt.vocab()?;
    let file = |name: &str| -> PathBuf {
        if suite == Suite::All {
            bench.join(name)
        } else {
            bench.to_path_buf()
        }
    };
    let mut suites = Suites::default();
    if suite.includes(Suite::Stereoset) {
        suites.stereoset = load_stereoset(&file("stereoset.json"), &vocab)?;
    }
    if suite.includes(Suite::Seat) {
        suites.seat = load_seat(&file("seat.json"), &vocab)?;
    }
    if suite.includes(Suite::Crows) {
        suites.crows = load_crows(&file("crows.json"), &vocab)?;
    }
    Ok(suites)
}

pub fn eval_checkpoint(ckpt: &Checkpoint, name: &str, suite: Suite, bench: Option<&Path>) -> Result<EvalReport> {
    let params = ckpt.encoder()?;
    let suites = suites_for(ckpt, suite, bench)?;
    with_eval_pool(|| evaluate(&params, &suites, suite, EvalReport::new(name, ckpt.meta.seed)))
}

#[derive(Clone, Debug)]
pub struct EvalArgs {
    pub ckpt: PathBuf,
    pub suite: Suite,
    pub bench: Option<PathBuf>,
    pub out: PathBuf,
}

/// Writes the report CSV to `out` and its markdown mirror next to it.
pub fn cmd_eval(args: &EvalArgs) -> Result<EvalReport> {
    let ckpt = Checkpoint::load(&args.ckpt)?;
    let report = eval_checkpoint(&ckpt, &args.ckpt.display().to_string(), args.suite, args.bench.as_deref())?;
    write(&args.out, report.to_csv())?;
    write(&args.out.with_extension("md"), report.to_markdown())?;
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct CompareArgs {
    /// Checkpoint files, or `manifest.json` files whose seeds are averaged.
    pub ckpts: Vec<PathBuf>,
    pub suite: Suite,
    pub bench: Option<PathBuf>,
    pub out: PathBuf,
}

fn checkpoints_of(path: &Path) -> Result<Vec<Checkpoint>> {
    if path.file_name().is_some_and(|n| n == MANIFEST) {
        let manifest: Manifest = read_json(path)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        manifest.checkpoints.iter().map(|c| Checkpoint::load(&dir.join(c))).collect()
    } else {
        Ok(vec![Checkpoint::load(path)?])
    }
}

/// Overall metrics averaged over `ckpts`.
pub fn mean_overall(ckpts: &[Checkpoint], name: &str, suite: Suite, bench: Option<&Path>) -> Result<BTreeMap<Metric, f64>> {
    let mut sums: BTreeMap<Metric, f64> = BTreeMap::new();
    for c in ckpts {
        for (m, v) in eval_checkpoint(c, name, suite, bench)?.overall() {
            *sums.entry(m).or_default() += v;
        }
    }
    Ok(sums.into_iter().map(|(m, v)| (m, v / ckpts.len() as f64)).collect())
}

/// Writes a markdown table comparing the given checkpoints or seed groups.
pub fn cmd_compare(args: &CompareArgs) -> Result<String> {
    if args.ckpts.len() < 2 {
        return Err(Error::Config("compare needs at least two checkpoints".into()));
    }
    let groups = args.ckpts.iter().map(|p| checkpoints_of(p)).collect::<Result<Vec<_>>>()?;
    let vocab = &groups[0][0].meta.vocab;
    if groups.iter().flatten().any(|c| &c.meta.vocab != vocab) {
        return Err(Error::contract("checkpoints were trained on different vocabularies"));
    }
    let mut rows = Vec::new();
    for (path, ckpts) in args.ckpts.iter().zip(&groups) {
        let name = path.display().to_string();
        rows.push((name.clone(), mean_overall(ckpts, &name, args.suite, args.bench.as_deref())?));
    }
    let table = compare_table(&rows);
    write(&args.out, &table)?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_names() {
        assert_eq!(sidecar(Path::new("d/corpus.jsonl"), "vocab"), PathBuf::from("d/corpus.vocab"));
        assert_eq!(sidecar(Path::new("corpus"), "spec.json"), PathBuf::from("corpus.spec.json"));
    }

    #[test]
    fn gen_corpus_needs_one_source() {
        let args = GenCorpusArgs {
            preset: None,
            spec: None,
            scale: 1.0,
            stereotype_strength: 0.9,
            seed: None,
            out: PathBuf::from("x.jsonl"),
        };
        assert!(matches!(corpus_spec_for(&args), Err(Error::Config(_))));
    }

    #[test]
    fn three_bias_thousandth_has_157_examples() {
        let dir = tempfile::tempdir().unwrap();
        let args = GenCorpusArgs {
            preset: Some(SplitPreset::ThreeBias),
            spec: None,
            scale: 0.001,
            stereotype_strength: 0.9,
            seed: Some(1),
            out: dir.path().join("c.jsonl"),
        };
        assert_eq!(cmd_gen_corpus(&args).unwrap(), 157);
        let (corpus, spec) = load_corpus_files(&args.out).unwrap();
        assert_eq!(corpus.len(), 157);
        assert_eq!(spec.unwrap().seed, 1);
    }
}
