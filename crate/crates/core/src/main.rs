use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use drobias::cli::{
    cmd_compare, cmd_eval, cmd_gen_corpus, cmd_train, CompareArgs, EvalArgs, GenCorpusArgs, TrainArgs,
};
use drobias::corpus::SplitPreset;
use drobias::dro::AggregatorKind;
use drobias::eval::Suite;

#[derive(Parser)]
#[command(name = "drobias", version, about = "Robust debiasing objectives for small masked-token encoders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic planted-bias corpus.
    GenCorpus {
        #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
        preset: Option<SplitPreset>,
        /// JSON corpus spec.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 0.9)]
        strength: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Output JSONL path; sidecars are written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one checkpoint per configured seed.
    Train {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        dro: Option<AggregatorKind>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Write per-step diagnostics to seed<N>.trace.
        #[arg(long)]
        trace: bool,
    },
    /// Score a checkpoint on the bias suites.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value = "all")]
        suite: Suite,
        /// Benchmark JSON file, or a directory of them for `--suite all`.
        #[arg(long)]
        bench: Option<PathBuf>,
        /// Report CSV path; a markdown copy goes next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate overall metrics of several checkpoints or seed manifests.
    Compare {
        #[arg(long, num_args = 2.., required = true)]
        ckpts: Vec<PathBuf>,
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long)]
        bench: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> drobias::Result<()> {
    match cli.command {
        Command::GenCorpus {
            preset,
            spec,
            scale,
            strength,
            seed,
            out,
        } => {
            let n = cmd_gen_corpus(&GenCorpusArgs {
                preset,
                spec,
                scale,
                stereotype_strength: strength,
                seed,
                out: out.clone(),
            })?;
            println!("wrote {n} examples to {}", out.display());
        }
        Command::Train {
            corpus,
            dro,
            config,
            out,
            trace,
        } => {
            for s in cmd_train(&TrainArgs {
                corpus,
                dro,
                config,
                out,
                trace,
            })? {
                println!(
                    "seed {}: {} epochs, held-out loss {:.4} -> {:.4}, {}",
                    s.seed,
                    s.epochs_run,
                    s.held_out_start,
                    s.held_out_end,
                    s.checkpoint.display()
                );
            }
        }
        Command::Eval { ckpt, suite, bench, out } => {
            let report = cmd_eval(&EvalArgs { ckpt, suite, bench, out })?;
            print!("{}", report.to_markdown());
        }
        Command::Compare {
            ckpts,
            suite,
            bench,
            out,
        } => {
            print!("{}", cmd_compare(&CompareArgs { ckpts, suite, bench, out })?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
