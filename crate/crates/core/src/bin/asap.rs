use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use asap::corpus::{load_pool, Language};
use asap::harness::{
    build_client, compare_runs, run_ablation, run_completion, run_summarization, score_files, write_score_csv,
    ExperimentConfig, Report, Task, Variant,
};
use asap::metrics::Metric;
use asap::retrieval::{Bm25Index, Bm25Params, TokenizerConfig};

#[derive(Parser)]
#[command(name = "asap", version, about = "Fact-augmented few-shot prompting for code summarization and completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a BM25 snapshot over an exemplar pool.
    Index {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        language: Language,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.2)]
        k1: f64,
        #[arg(long, default_value_t = 0.75)]
        b: f64,
        /// Index whole tokens only, without camelCase / snake_case parts.
        #[arg(long)]
        no_subtokens: bool,
    },
    /// Run a code summarization experiment.
    Summarize(RunArgs),
    /// Run a line completion experiment.
    Complete(RunArgs),
    /// Run component ablations.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        task: Option<Task>,
        /// Comma-separated variants, e.g. `all,-repo,-id,-dfg`. The first is
        /// the reference the others are tested against.
        #[arg(long, value_delimiter = ',')]
        variants: Vec<String>,
    },
    /// Score a predictions file against references.
    Score {
        #[arg(long, default_value = "summarize")]
        task: Task,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        references: PathBuf,
        /// Per-sample scores.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Aggregate scores; printed to stdout when absent.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Paired significance tests between two runs' records.
    Compare {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        treatment: PathBuf,
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<Metric>,
        /// Written as JSON; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; task defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Config override as `key.path=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Shorthand for `--set output_dir=...`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self, task: Task) -> Result<ExperimentConfig> {
        let mut overrides = self.overrides.clone();
        if let Some(out) = &self.out {
            overrides.push(format!("output_dir={}", out.display()));
        }
        ExperimentConfig::load(self.config.as_deref(), task, &overrides).context("loading config")
    }
}

fn print_report(report: &Report) {
    println!(
        "{} samples: {} ok, {} failed, {} skipped",
        report.samples, report.completed, report.failed, report.skipped
    );
    for (m, v) in &report.aggregates {
        println!("  {:<8} {v:.2}", m.as_str());
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
}

fn write_or_print(path: Option<&PathBuf>, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Index { pool, language, out, k1, b, no_subtokens } => {
            let pool = load_pool(&pool, language)?;
            let index =
                Bm25Index::build(&pool, Bm25Params { k1, b }, TokenizerConfig { split_subtokens: !no_subtokens })?;
            index.save(&out)?;
            println!("indexed {} documents into {}", index.len(), out.display());
        }
        Command::Summarize(args) => {
            let config = args.load(Task::Summarize)?;
            let client = build_client(&config)?;
            let (_, report) = run_summarization(&config, &client)?;
            print_report(&report);
        }
        Command::Complete(args) => {
            let config = args.load(Task::Complete)?;
            let client = build_client(&config)?;
            let (_, report) = run_completion(&config, &client)?;
            print_report(&report);
        }
        Command::Ablate { run, task, variants } => {
            let config = run.load(task.unwrap_or_default())?;
            let variants = if variants.is_empty() {
                Variant::defaults()
            } else {
                variants.iter().map(|v| v.parse()).collect::<asap::Result<_>>()?
            };
            let client = build_client(&config)?;
            let report = run_ablation(&config, &variants, &client)?;
            for row in &report.rows {
                let scores: Vec<String> =
                    row.aggregates.iter().map(|(m, v)| format!("{}={v:.2}", m.as_str())).collect();
                println!("{:<10} {}", row.variant.label, scores.join(" "));
            }
            for c in &report.comparisons {
                match (&c.result, c.adjusted_p) {
                    (Some(r), Some(adj)) => println!(
                        "{} > {} on {}: p={:.4} adjusted={adj:.4}",
                        c.treatment,
                        c.baseline,
                        c.metric.as_str(),
                        r.p_value
                    ),
                    _ => println!(
                        "{} > {} on {}: {}",
                        c.treatment,
                        c.baseline,
                        c.metric.as_str(),
                        c.error.as_deref().unwrap_or("no result")
                    ),
                }
            }
        }
        Command::Score { task, predictions, references, csv, json } => {
            let (rows, aggregates) = score_files(task, &predictions, &references)?;
            if rows.is_empty() {
                bail!("{} has no predictions", predictions.display());
            }
            if let Some(csv) = &csv {
                write_score_csv(csv, &rows)?;
            }
            write_or_print(json.as_ref(), &aggregates)?;
        }
        Command::Compare { baseline, treatment, metrics, out } => {
            let report = compare_runs(&baseline, &treatment, &metrics)?;
            write_or_print(out.as_ref(), &report)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
