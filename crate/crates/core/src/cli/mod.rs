//! The `cnlu` command line: train, eval, prune, distill, compare, flips and
//! bench. Every command writes its artifacts and one manifest into `--out`.

mod compare;
mod manifest;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::bench::{benchmark, DEFAULT_WARMUP};
use crate::data::{load_dataset, load_word_vectors, random_embeddings, synth, DatasetSplits, EncodedSplits};
use crate::distill::{distill_curve, DistillConfig};
use crate::error::{Error, Result};
use crate::metrics::{flip_analysis, RunMetrics};
use crate::model::{evaluate, load_checkpoint, save_checkpoint, train, DevMetric, JointModel, ModelConfig, TaskMode, TrainConfig};
use crate::pruning::{
    prune_iterative, prune_one_shot, read_curve, write_curve, Norm, PruneData, PruneMode, PruneSchedule, SparsityCurvePoint,
};
use crate::tensor::AdamConfig;

pub use compare::{CompareRow, Comparison};
pub use manifest::{sha256_file, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "cnlu", version, about = "Convolutional joint intent/slot model: train, prune, distill, benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model from scratch.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Score a checkpoint on one split.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "test", value_parser = ["train", "dev", "test"])]
        split: String,
    },
    /// Prune a checkpoint one-shot or iteratively.
    Prune {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainFlags,
        #[arg(long, default_value = "iterative")]
        mode: PruneMode,
        /// Fraction of the original filters to remove.
        #[arg(long)]
        target: f64,
        /// Fraction of the original filters removed per iterative step.
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        #[arg(long, default_value = "l2")]
        norm: Norm,
        #[arg(long, default_value_t = 0.5)]
        dropout: f64,
    },
    /// Distil a checkpoint into narrower students.
    Distill {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainFlags,
        /// Compression rates to train students for.
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.4,0.6,0.8,0.9,0.95,0.99")]
        rates: Vec<f64>,
        /// Train a single student of this width instead of `--rates`.
        #[arg(long)]
        filters: Option<usize>,
        #[arg(long, default_value_t = 2.0)]
        temperature: f64,
        #[arg(long, default_value_t = 0.5)]
        hard_weight: f64,
        #[arg(long, default_value_t = 0.5)]
        dropout: f64,
    },
    /// Merge a pruning curve and a distillation curve into one table.
    Compare {
        #[arg(long)]
        pruned: PathBuf,
        #[arg(long)]
        distilled: PathBuf,
        /// Curve file whose 0% point anchors the deltas (e.g. from `eval`).
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Row grid; defaults to the union of both curves.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// List predictions that flip between two checkpoints.
    Flips {
        #[command(flatten)]
        common: Common,
        /// The second checkpoint (e.g. the pruned model).
        #[arg(long)]
        other: PathBuf,
    },
    /// Measure batch-1 latency over the test split.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_WARMUP)]
        warmup: usize,
    },
}

#[derive(Clone, Debug, Args)]
pub struct Common {
    /// Dataset root with train/, dev/ and test/ split directories.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Use the built-in synthetic corpus instead of `--data`.
    #[arg(long, conflicts_with = "data")]
    pub synthetic: bool,
    /// Word vectors, one `token v1 .. vd` line each.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub max_len: usize,
}

#[derive(Clone, Debug, Args)]
pub struct ModelFlags {
    #[arg(long, default_value = "joint")]
    pub task: TaskMode,
    /// Intent share of the joint loss.
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
    #[arg(long, default_value_t = 300)]
    pub filters: usize,
    #[arg(long, default_value_t = 5)]
    pub kernel: usize,
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
    #[arg(long, default_value_t = 1)]
    pub min_count: usize,
}

#[derive(Clone, Debug, Args)]
pub struct TrainFlags {
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f32,
    /// Dev quantity for checkpoint selection: intent, slot or sum.
    #[arg(long, default_value = "sum", value_parser = ["intent", "slot", "sum"])]
    pub dev_metric: String,
}

impl TrainFlags {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            adam: AdamConfig {
                lr: self.lr,
                ..AdamConfig::default()
            },
            batch_size: self.batch,
            max_epochs: self.epochs,
            patience: self.patience,
            seed,
            dev_metric: match self.dev_metric.as_str() {
                "intent" => DevMetric::IntentAccuracy,
                "slot" => DevMetric::SlotF1,
                _ => DevMetric::Sum,
            },
        }
    }

    fn record(&self, m: &mut RunManifest) {
        m.set("epochs", self.epochs);
        m.set("patience", self.patience);
        m.set("batch_size", self.batch);
        m.set("lr", self.lr);
        m.set("dev_metric", &self.dev_metric);
    }
}

impl clap::ValueEnum for TaskMode {
    fn value_variants<'a>() -> &'a [Self] {
        &[TaskMode::Joint, TaskMode::Intent, TaskMode::Slot]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            TaskMode::Joint => "joint",
            TaskMode::Intent => "intent",
            TaskMode::Slot => "slot",
        }))
    }
}

impl clap::ValueEnum for PruneMode {
    fn value_variants<'a>() -> &'a [Self] {
        &[PruneMode::Iterative, PruneMode::OneShot]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            PruneMode::Iterative => "iterative",
            PruneMode::OneShot => "one-shot",
        }))
    }
}

impl clap::ValueEnum for Norm {
    fn value_variants<'a>() -> &'a [Self] {
        &[Norm::L2, Norm::L1]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
        }))
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli, argv: &[String]) -> Result<()> {
    match cli.command {
        Command::Train { common, model, train } => cmd_train(&common, &model, &train, argv),
        Command::Eval { common, split } => cmd_eval(&common, &split, argv),
        Command::Prune {
            common,
            train,
            mode,
            target,
            step,
            norm,
            dropout,
        } => {
            let retrain = train.config(common.seed);
            let schedule = match mode {
                PruneMode::OneShot => PruneSchedule::one_shot(norm, target),
                PruneMode::Iterative => PruneSchedule::iterative(norm, step, target, retrain),
            };
            cmd_prune(&common, &train, &schedule, dropout, argv)
        }
        Command::Distill {
            common,
            train,
            rates,
            filters,
            temperature,
            hard_weight,
            dropout,
        } => cmd_distill(&common, &train, &rates, filters, temperature, hard_weight, dropout, argv),
        Command::Compare {
            pruned,
            distilled,
            baseline,
            grid,
            out,
        } => cmd_compare(&pruned, &distilled, baseline.as_deref(), grid.as_deref(), &out, argv),
        Command::Flips { common, other } => cmd_flips(&common, &other, argv),
        Command::Bench { common, warmup } => cmd_bench(&common, warmup, argv),
    }
}

fn load_splits(common: &Common, manifest: &mut RunManifest) -> Result<DatasetSplits> {
    manifest.set("max_len", common.max_len);
    manifest.set("seed", common.seed);
    if common.synthetic {
        let cfg = synth::SynthConfig::default();
        manifest.set(
            "data",
            format!(
                "synthetic(train={},dev={},test={},seed={},filler_rate={})",
                cfg.train, cfg.dev, cfg.test, cfg.seed, cfg.filler_rate
            ),
        );
        return Ok(synth::generate(&cfg));
    }
    let root = common
        .data
        .as_ref()
        .ok_or_else(|| Error::Config("--data DIR (or --synthetic) is required".into()))?;
    manifest.set("data", root.display());
    manifest.checksum_dataset(root)?;
    load_dataset(root)
}

fn require_checkpoint<'a>(common: &'a Common, manifest: &mut RunManifest) -> Result<&'a Path> {
    let path = common
        .checkpoint
        .as_deref()
        .ok_or_else(|| Error::Config("--checkpoint FILE is required".into()))?;
    manifest.set("checkpoint", path.display());
    manifest.set("sha256:checkpoint", sha256_file(path)?);
    Ok(path)
}

/// Loads a checkpoint with runtime settings and encodes the data with its maps.
fn load_model_and_data(common: &Common, dropout: f64, manifest: &mut RunManifest) -> Result<(JointModel, EncodedSplits)> {
    let path = require_checkpoint(common, manifest)?;
    let mut model = load_checkpoint(path)?;
    model.set_runtime(dropout, common.max_len)?;
    let splits = load_splits(common, manifest)?;
    let data = EncodedSplits::with_maps(&splits, model.vocab().clone(), model.labels().clone(), common.max_len)?;
    Ok((model, data))
}

fn out_dir(out: &Path) -> Result<&Path> {
    fs::create_dir_all(out)?;
    Ok(out)
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{:.2}", x * 100.0))
}

fn metrics_tsv(split: &str, m: &RunMetrics) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |x| format!("{x:.6}"));
    format!(
        "split\tintent_acc\tslot_precision\tslot_recall\tslot_f1\tparams\n{split}\t{}\t{}\t{}\t{}\t{}\n",
        opt(m.intent_accuracy),
        opt(m.slot.map(|s| s.precision)),
        opt(m.slot.map(|s| s.recall)),
        opt(m.slot_f1()),
        m.params
    )
}

fn finish(manifest: &RunManifest, dir: &Path) -> Result<()> {
    let path = manifest.write(dir)?;
    println!("manifest: {}", path.display());
    Ok(())
}

fn cmd_train(common: &Common, flags: &ModelFlags, train_flags: &TrainFlags, argv: &[String]) -> Result<()> {
    let mut manifest = RunManifest::new("train", argv);
    let dir = out_dir(&common.out)?;
    let splits = load_splits(common, &mut manifest)?;
    let data = EncodedSplits::prepare(&splits, flags.min_count, common.max_len)?;
    if data.truncated > 0 {
        log::warn!("{} utterances truncated to {} tokens", data.truncated, common.max_len);
    }
    let embeddings = match &common.vectors {
        Some(path) => {
            let (table, coverage) = load_word_vectors(path, &data.vocab, flags.dim, common.seed)?;
            manifest.set("vectors", path.display());
            manifest.set("vector_coverage", format!("{:.4}", coverage.fraction()));
            log::info!("word vectors cover {:.1}% of the vocabulary", coverage.fraction() * 100.0);
            table
        }
        None => {
            log::warn!("no --vectors given; using seeded random embeddings");
            manifest.set("vectors", "random");
            random_embeddings(data.vocab.len(), flags.dim, common.seed)
        }
    };
    let config = ModelConfig {
        embed_dim: flags.dim,
        num_filters: flags.filters,
        kernel_size: flags.kernel,
        dropout: flags.dropout,
        alpha: flags.alpha,
        max_seq_len: common.max_len,
        task: flags.task,
    };
    for (k, v) in [
        ("task", config.task.to_string()),
        ("alpha", config.alpha.to_string()),
        ("filters", config.num_filters.to_string()),
        ("kernel", config.kernel_size.to_string()),
        ("dim", config.embed_dim.to_string()),
        ("dropout", config.dropout.to_string()),
        ("min_count", flags.min_count.to_string()),
        ("vocab_size", data.vocab.len().to_string()),
        ("intents", data.labels.num_intents().to_string()),
        ("slots", data.labels.num_slots().to_string()),
    ] {
        manifest.set(k, v);
    }
    train_flags.record(&mut manifest);

    let model = JointModel::new(config, Arc::new(embeddings), data.vocab.clone(), data.labels.clone(), common.seed)?;
    let outcome = train(model, &data.train, &data.dev, &train_flags.config(common.seed))?;
    let test = evaluate(&outcome.model, &data.test)?.metrics;

    let ckpt = dir.join("model.ckpt");
    save_checkpoint(&outcome.model, &ckpt)?;
    let mut history = String::from("epoch\ttrain_loss\tdev_intent_acc\tdev_slot_f1\tdev_score\timproved\n");
    for r in &outcome.history {
        history.push_str(&format!(
            "{}\t{:.6}\t{}\t{}\t{:.6}\t{}\n",
            r.epoch,
            r.train_loss,
            r.dev.intent_accuracy.map_or("-".into(), |v| format!("{v:.6}")),
            r.dev.slot_f1().map_or("-".into(), |v| format!("{v:.6}")),
            r.dev_score,
            r.improved
        ));
    }
    fs::write(dir.join("history.tsv"), history)?;
    fs::write(dir.join("metrics.tsv"), metrics_tsv("test", &test))?;
    manifest.set("best_epoch", outcome.best_epoch);
    manifest.set("params", test.params);
    for name in ["model.ckpt", "history.tsv", "metrics.tsv"] {
        manifest.output(dir.join(name));
    }
    println!(
        "best epoch {}: test intent {} slot f1 {} params {}",
        outcome.best_epoch,
        pct(test.intent_accuracy),
        pct(test.slot_f1()),
        test.params
    );
    println!("checkpoint: {}", ckpt.display());
    finish(&manifest, dir)
}

fn cmd_eval(common: &Common, split: &str, argv: &[String]) -> Result<()> {
    let mut manifest = RunManifest::new("eval", argv);
    let dir = out_dir(&common.out)?;
    let (model, data) = load_model_and_data(common, 0.0, &mut manifest)?;
    manifest.set("split", split);
    let examples = match split {
        "train" => &data.train,
        "dev" => &data.dev,
        _ => &data.test,
    };
    let m = evaluate(&model, examples)?.metrics;
    fs::write(dir.join("metrics.tsv"), metrics_tsv(split, &m))?;
    let point = SparsityCurvePoint {
        filters_remaining: model.num_filters(),
        params: m.params,
        compression_rate: 0.0,
        intent_accuracy: m.intent_accuracy,
        slot_f1: m.slot_f1(),
        checkpoint: common.checkpoint.clone(),
    };
    write_curve(dir.join("baseline_curve.tsv"), &[point])?;
    manifest.output(dir.join("metrics.tsv"));
    manifest.output(dir.join("baseline_curve.tsv"));
    println!("{split}: intent {} slot f1 {} params {}", pct(m.intent_accuracy), pct(m.slot_f1()), m.params);
    finish(&manifest, dir)
}

fn cmd_prune(common: &Common, train_flags: &TrainFlags, schedule: &PruneSchedule, dropout: f64, argv: &[String]) -> Result<()> {
    let mut manifest = RunManifest::new("prune", argv);
    schedule.validate()?;
    let dir = out_dir(&common.out)?;
    manifest.set("mode", schedule.mode);
    manifest.set("norm", schedule.norm);
    manifest.set("target", schedule.target_sparsity);
    manifest.set("dropout", dropout);
    let (model, data) = load_model_and_data(common, dropout, &mut manifest)?;
    let split = PruneData {
        train: &data.train,
        dev: &data.dev,
        test: &data.test,
    };
    let curve = match schedule.mode {
        PruneMode::OneShot => {
            let pruned = prune_one_shot(&model, schedule)?;
            let m = evaluate(&pruned, &data.test)?.metrics;
            let path = dir.join(format!("pruned_{}.ckpt", pruned.num_filters()));
            save_checkpoint(&pruned, &path)?;
            vec![SparsityCurvePoint {
                filters_remaining: pruned.num_filters(),
                params: m.params,
                compression_rate: 1.0 - pruned.num_filters() as f64 / model.num_filters() as f64,
                intent_accuracy: m.intent_accuracy,
                slot_f1: m.slot_f1(),
                checkpoint: Some(path),
            }]
        }
        PruneMode::Iterative => {
            manifest.set("step", schedule.step_fraction);
            train_flags.record(&mut manifest);
            let outcome = prune_iterative(&model, split, schedule, Some(dir))?;
            for s in &outcome.diverged_steps {
                manifest.set("diverged_step", s);
            }
            outcome.curve
        }
    };
    for p in &curve {
        if let Some(c) = &p.checkpoint {
            manifest.output(c.clone());
        }
        println!(
            "{:>4} filters ({:>5.1}%): params {:>7} intent {} slot f1 {}",
            p.filters_remaining,
            p.compression_rate * 100.0,
            p.params,
            pct(p.intent_accuracy),
            pct(p.slot_f1)
        );
    }
    let curve_path = dir.join("prune_curve.tsv");
    write_curve(&curve_path, &curve)?;
    manifest.output(curve_path);
    finish(&manifest, dir)
}

#[allow(clippy::too_many_arguments)]
fn cmd_distill(
    common: &Common,
    train_flags: &TrainFlags,
    rates: &[f64],
    filters: Option<usize>,
    temperature: f64,
    hard_weight: f64,
    dropout: f64,
    argv: &[String],
) -> Result<()> {
    let mut manifest = RunManifest::new("distill", argv);
    let dir = out_dir(&common.out)?;
    let (teacher, data) = load_model_and_data(common, dropout, &mut manifest)?;
    let c = teacher.num_filters();
    let rates: Vec<f64> = match filters {
        Some(f) => vec![1.0 - f as f64 / c as f64],
        None => rates.to_vec(),
    };
    if let Some(bad) = rates.iter().find(|r| !(0.0..1.0).contains(*r)) {
        return Err(Error::Config(format!("compression rate {bad} must lie in [0, 1)")));
    }
    let base = DistillConfig {
        temperature,
        hard_weight,
        ..DistillConfig::new(c, train_flags.config(common.seed))
    };
    base.validate(c)?;
    manifest.set("temperature", temperature);
    manifest.set("hard_weight", hard_weight);
    manifest.set("dropout", dropout);
    manifest.set("rates", rates.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
    train_flags.record(&mut manifest);

    let split = PruneData {
        train: &data.train,
        dev: &data.dev,
        test: &data.test,
    };
    let curve = distill_curve(&teacher, &rates, &base, split, Some(dir))?;
    for p in &curve {
        println!(
            "{:>4} filters ({:>5.1}%): params {:>7} intent {} slot f1 {}",
            p.filters_remaining,
            p.compression_rate * 100.0,
            p.params,
            pct(p.intent_accuracy),
            pct(p.slot_f1)
        );
        if let Some(c) = &p.checkpoint {
            manifest.output(c.clone());
        }
    }
    let path = dir.join("distill_curve.tsv");
    write_curve(&path, &curve)?;
    manifest.output(path);
    finish(&manifest, dir)
}

fn cmd_compare(
    pruned: &Path,
    distilled: &Path,
    baseline: Option<&Path>,
    grid: Option<&[f64]>,
    out: &Path,
    argv: &[String],
) -> Result<()> {
    let mut manifest = RunManifest::new("compare", argv);
    let dir = out_dir(out)?;
    for (k, p) in [("pruned", pruned), ("distilled", distilled)] {
        manifest.set(k, p.display());
        manifest.set(&format!("sha256:{k}"), sha256_file(p)?);
    }
    let p = read_curve(pruned)?;
    let d = read_curve(distilled)?;
    let base = match baseline {
        Some(path) => {
            manifest.set("baseline", path.display());
            let curve = read_curve(path)?;
            let zero = curve.into_iter().find(|p| p.compression_rate.abs() < 1e-9);
            if zero.is_none() {
                log::warn!("{} has no 0% point", path.display());
            }
            zero
        }
        None => None,
    };
    let cmp = Comparison::build(&p, &d, base.as_ref(), grid);
    for w in &cmp.warnings {
        log::warn!("grid mismatch: {w}");
    }
    let table = cmp.to_table();
    fs::write(dir.join("compare.tsv"), cmp.to_tsv())?;
    fs::write(dir.join("compare_table.txt"), &table)?;
    manifest.output(dir.join("compare.tsv"));
    manifest.output(dir.join("compare_table.txt"));
    print!("{table}");
    finish(&manifest, dir)
}

fn cmd_flips(common: &Common, other: &Path, argv: &[String]) -> Result<()> {
    let mut manifest = RunManifest::new("flips", argv);
    let dir = out_dir(&common.out)?;
    let (before, data) = load_model_and_data(common, 0.0, &mut manifest)?;
    manifest.set("other", other.display());
    manifest.set("sha256:other", sha256_file(other)?);
    let mut after = load_checkpoint(other)?;
    after.set_runtime(0.0, common.max_len)?;
    if before.vocab() != after.vocab() {
        return Err(Error::Config("checkpoints use different vocabularies".into()));
    }
    let report = flip_analysis(&before, &after, &data.test)?;
    let (records, summary) = (dir.join("flips.tsv"), dir.join("flips_summary.tsv"));
    report.write(&records, &summary)?;
    manifest.output(records);
    manifest.output(summary);
    print!("{}", report.summary());
    finish(&manifest, dir)
}

fn cmd_bench(common: &Common, warmup: usize, argv: &[String]) -> Result<()> {
    let mut manifest = RunManifest::new("bench", argv);
    let dir = out_dir(&common.out)?;
    let (model, data) = load_model_and_data(common, 0.0, &mut manifest)?;
    manifest.set("warmup", warmup);
    let report = benchmark(&model, &data.test, warmup)?;
    manifest.set("hardware", &report.hardware);
    let path = dir.join("latency.tsv");
    fs::write(&path, report.to_tsv())?;
    manifest.output(path);
    println!(
        "{:.4} ms/sample (std {:.4}) over {} samples after {} warmup passes, batch 1, {} filters",
        report.mean_ms,
        report.std_ms,
        report.samples,
        report.warmup,
        model.num_filters()
    );
    finish(&manifest, dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["cnlu", "no-such-command"]), 2);
        assert_eq!(run(["cnlu", "prune", "--target", "0.5", "--mode", "sideways"]), 2);
    }

    #[test]
    fn missing_data_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(run(["cnlu", "train", "--out", out]), 2);
        assert_eq!(run(["cnlu", "bench", "--synthetic", "--out", out]), 2);
    }

    #[test]
    fn target_of_one_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let code = run(["cnlu", "prune", "--synthetic", "--target", "1.0", "--out", out]);
        assert_eq!(code, 2);
    }
}
