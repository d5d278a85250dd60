//! Command-line front end. [`cli_main`] returns the process exit code:
//! 0 success, 2 usage or config error, 3 data error, 4 numeric failure.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::RngCore;
use serde::Serialize;

use crate::augment::{cooccurrence_augment, sample_negatives, sample_walks, stream_rng};
use crate::checkpoint::{Checkpoint, FORMAT_VERSION};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::graph::{build_csr, read_edge_list, write_edge_list, Pair};
use crate::harness::{
    evaluate_runs_on, evaluate_scores, train_prepared, Dataset, EvalNegatives, EvalReport, Prepared, RunMetrics,
    SplitMetrics,
};
use crate::heuristics::{score_pairs, HeuristicKind};

#[derive(Debug, Parser)]
#[command(
    name = "gidn",
    about = "Graph diffusion link prediction",
    disable_version_flag = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one seed, save a checkpoint and its test metrics.
    Train(TrainArgs),
    /// Train every configured seed (or score a checkpoint) and aggregate test metrics.
    Eval(EvalArgs),
    /// Score pairs with a classical heuristic.
    Heuristic(HeuristicArgs),
    /// Sample random walks and report co-occurrence augmentation.
    Walks(WalksArgs),
    /// Print version information.
    Version,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override a config value, e.g. `--set train.epochs=5` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        RunConfig::load(&self.config, &self.overrides)
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
    /// Metrics JSON path; defaults to the checkpoint path with `.metrics.json`.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated seeds replacing `eval.seeds`.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Score this checkpoint instead of training.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Metrics JSON path; printed to stdout when absent.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HeuristicArgs {
    /// cn, aa, rpr[:alpha] or simrank[:c:iters].
    #[arg(long)]
    kind: String,
    /// Pairs to score, one `u v` per line; treated as positives in the report.
    #[arg(long)]
    pairs: PathBuf,
    /// Graph edge list.
    #[arg(long, conflicts_with_all = ["splits", "config"])]
    graph: Option<PathBuf>,
    /// Split directory; its `train.tsv` is the graph.
    #[arg(long, conflicts_with = "config")]
    splits: Option<PathBuf>,
    /// Run configuration; `data.splits/train.tsv` is the graph.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Negative pairs ranked against every positive; sampled when absent.
    #[arg(long)]
    negatives: Option<PathBuf>,
    /// Sampled negatives per positive.
    #[arg(long, default_value_t = 10)]
    q: usize,
    #[arg(long, default_value_t = 0x5eed)]
    negative_seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "10,50,100")]
    hits_k: Vec<usize>,
    /// Per-pair scores as TSV; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report JSON path.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct WalksArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 10)]
    walk_length: usize,
    #[arg(long, default_value_t = 5)]
    walks_per_node: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write one walk per line, space-separated node ids.
    #[arg(long)]
    dump_walks: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    window: usize,
    #[arg(long, default_value_t = 3)]
    tau: usize,
    /// Write the co-occurrence edges that would be added.
    #[arg(long)]
    added_out: Option<PathBuf>,
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the exit code. Diagnostics go to stderr.
pub fn cli_main(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Heuristic(a) => heuristic_cmd(a),
        Command::Walks(a) => walks_cmd(a),
        Command::Version => {
            println!(
                "gidn {} (checkpoint format {FORMAT_VERSION})",
                env!("CARGO_PKG_VERSION")
            );
            Ok(())
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run_metrics(seed: u64, m: SplitMetrics) -> RunMetrics {
    RunMetrics {
        seed,
        hits: m.hits,
        mrr: m.mrr,
        auc: m.auc,
    }
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let config = a.config.load()?;
    let dataset = Dataset::load(&config)?;
    let start = std::time::Instant::now();
    let prepared = Prepared::new(&config, &dataset)?;
    let outcome = train_prepared(&prepared, a.seed)?;
    for l in &outcome.log {
        match &l.valid {
            Some(m) => eprintln!(
                "epoch {:4}  loss {:.6}  valid auc {:.4}  mrr {:.4}",
                l.epoch, l.train_loss, m.auc, m.mrr
            ),
            None => eprintln!("epoch {:4}  loss {:.6}", l.epoch, l.train_loss),
        }
    }
    let test = prepared.evaluate_test(&outcome.params)?;
    let runtime = config.eval.record_runtime.then(|| start.elapsed().as_secs_f64());

    Checkpoint {
        model: outcome.model,
        run_config: Some(config.to_toml()?),
        seed: Some(a.seed),
        params: outcome.params,
        rng: outcome.rng,
    }
    .save(&a.out)?;
    let report = EvalReport::from_runs(config.hash(), vec![run_metrics(a.seed, test)], runtime);
    let metrics = a.metrics.unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".metrics.json");
        p.into()
    });
    report.write(&metrics)?;
    eprintln!(
        "best epoch {}; checkpoint {}; metrics {}",
        outcome.best_epoch,
        a.out.display(),
        metrics.display()
    );
    Ok(())
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let mut config = a.config.load()?;
    if let Some(seeds) = a.seeds {
        config.eval.seeds = seeds;
        config.validate()?;
    }
    let dataset = Dataset::load(&config)?;
    let report = match &a.checkpoint {
        None => evaluate_runs_on(&config, &dataset)?,
        Some(path) => {
            let start = std::time::Instant::now();
            let ckpt = Checkpoint::load(path)?;
            let prepared = Prepared::new(&config, &dataset)?;
            if ckpt.model != prepared.model {
                return Err(Error::Config(format!(
                    "checkpoint {} was trained with a different model configuration",
                    path.display()
                )));
            }
            let test = prepared.evaluate_test(&ckpt.params)?;
            let runtime = config.eval.record_runtime.then(|| start.elapsed().as_secs_f64());
            EvalReport::from_runs(config.hash(), vec![run_metrics(ckpt.seed.unwrap_or(0), test)], runtime)
        }
    };
    match &a.metrics {
        Some(path) => report.write(path)?,
        None => print!("{}", report.to_json()),
    }
    for (name, ms) in &report.aggregate {
        let flag = if report.n_runs == 1 { "  (n=1)" } else { "" };
        eprintln!("{name:>10}  {:.4} ± {:.4}{flag}", ms.mean, ms.std);
    }
    Ok(())
}

#[derive(Serialize)]
struct HeuristicReport<'a> {
    heuristic: String,
    n_pos: usize,
    n_neg: usize,
    #[serde(flatten)]
    metrics: &'a SplitMetrics,
}

fn heuristic_cmd(a: HeuristicArgs) -> Result<()> {
    let kind: HeuristicKind = a.kind.parse()?;
    let graph_path = match (&a.graph, &a.splits, &a.config) {
        (Some(g), _, _) => g.clone(),
        (_, Some(dir), _) => dir.join("train.tsv"),
        (_, _, Some(cfg)) => {
            let config = RunConfig::load(cfg, &[])?;
            let dir = config
                .data
                .splits
                .ok_or_else(|| Error::Config("config has no data.splits".into()))?;
            dir.join("train.tsv")
        }
        _ => return Err(Error::Usage("one of --graph, --splits or --config is required".into())),
    };
    let graph_list = read_edge_list(&graph_path)?;
    let pairs = read_edge_list(&a.pairs)?;
    let fixed_neg = a.negatives.as_deref().map(read_edge_list).transpose()?;
    if pairs.edges.is_empty() {
        return Err(Error::Data(format!("{}: no pairs", a.pairs.display())));
    }
    let n = [Some(&graph_list), Some(&pairs), fixed_neg.as_ref()]
        .into_iter()
        .flatten()
        .map(|l| l.declared_nodes.unwrap_or(0).max(l.num_nodes))
        .max()
        .unwrap_or(0);
    let graph = build_csr(n, &graph_list.edges)?;

    let negatives = match fixed_neg {
        Some(list) => EvalNegatives::Shared(list.edges),
        None => {
            let seed = stream_rng(a.negative_seed, 1).next_u64();
            let exclude: HashSet<Pair> = HashSet::new();
            EvalNegatives::PerPositive {
                pairs: sample_negatives(&graph, &pairs.edges, a.q, seed, &exclude)?,
                q: a.q,
            }
        }
    };
    let pos = score_pairs(&graph, kind, &pairs.edges)?;
    let neg = score_pairs(&graph, kind, negatives.pairs())?;
    let metrics = evaluate_scores(&pos, &neg, &negatives, &a.hits_k)?;

    let mut tsv = String::from("u\tv\tlabel\tscore\n");
    for (&(u, v), s) in pairs.edges.iter().zip(&pos) {
        let _ = writeln!(tsv, "{u}\t{v}\t1\t{s}");
    }
    for (&(u, v), s) in negatives.pairs().iter().zip(&neg) {
        let _ = writeln!(tsv, "{u}\t{v}\t0\t{s}");
    }
    match &a.out {
        Some(path) => write_text(path, &tsv)?,
        None => print!("{tsv}"),
    }

    let report = HeuristicReport {
        heuristic: kind.to_string(),
        n_pos: pos.len(),
        n_neg: neg.len(),
        metrics: &metrics,
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    if let Some(path) = &a.metrics {
        write_text(path, &json)?;
    }
    eprintln!("{kind}: {} positives, {} negatives", pos.len(), neg.len());
    for (k, h) in &metrics.hits {
        eprintln!("  hits@{k:<4} {h:.4}");
    }
    eprintln!("  mrr      {:.4}\n  auc      {:.4}", metrics.mrr, metrics.auc);
    Ok(())
}

fn walks_cmd(a: WalksArgs) -> Result<()> {
    let list = read_edge_list(&a.graph)?;
    let n = list.declared_nodes.unwrap_or(0).max(list.num_nodes);
    let graph = build_csr(n, &list.edges)?;
    let walks = sample_walks(&graph, a.walk_length, a.walks_per_node, a.seed)?;
    if let Some(path) = &a.dump_walks {
        walks.dump(path)?;
    }
    let added = cooccurrence_augment(&graph, &walks, a.window, a.tau)?;
    if let Some(path) = &a.added_out {
        write_edge_list(path, Some(n), &added)?;
    }
    println!(
        "{} walks of length {} over {} nodes / {} edges; {} co-occurrence edges (window {}, tau {})",
        walks.walks.len(),
        a.walk_length,
        n,
        graph.num_edges(),
        added.len(),
        a.window,
        a.tau
    );
    Ok(())
}
