//! Structured magnitude pruning of convolution filters.
//!
//! Removing filter `c` deletes row `c` of the conv weight and bias and the
//! matching input row of every head, so the pruned model is simply a
//! narrower dense model.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::EncodedExample;
use crate::error::{Error, Result};
use crate::model::{evaluate, save_checkpoint, train, Head, JointModel, TrainConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Norm {
    L1,
    #[default]
    L2,
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            other => Err(Error::Config(format!("unknown norm {other:?} (expected l1 or l2)"))),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PruneMode {
    OneShot,
    Iterative,
}

impl FromStr for PruneMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-shot" | "oneshot" => Ok(PruneMode::OneShot),
            "iterative" => Ok(PruneMode::Iterative),
            other => Err(Error::Config(format!("unknown pruning mode {other:?}"))),
        }
    }
}

impl fmt::Display for PruneMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PruneMode::OneShot => "one-shot",
            PruneMode::Iterative => "iterative",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PruneSchedule {
    pub norm: Norm,
    pub mode: PruneMode,
    /// Fraction of the original filter count removed per iteration.
    pub step_fraction: f64,
    pub target_sparsity: f64,
    /// Re-training between iterative steps; ignored in one-shot mode.
    pub retrain: Option<TrainConfig>,
}

impl PruneSchedule {
    pub fn one_shot(norm: Norm, target_sparsity: f64) -> Self {
        Self {
            norm,
            mode: PruneMode::OneShot,
            step_fraction: target_sparsity.max(f64::MIN_POSITIVE),
            target_sparsity,
            retrain: None,
        }
    }

    pub fn iterative(norm: Norm, step_fraction: f64, target_sparsity: f64, retrain: TrainConfig) -> Self {
        Self {
            norm,
            mode: PruneMode::Iterative,
            step_fraction,
            target_sparsity,
            retrain: Some(retrain),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.target_sparsity) {
            return Err(Error::Config(format!("target sparsity {} must lie in [0, 1)", self.target_sparsity)));
        }
        if self.mode == PruneMode::Iterative {
            if !(self.step_fraction > 0.0 && self.step_fraction <= self.target_sparsity) {
                return Err(Error::Config(format!(
                    "step fraction {} must lie in (0, target sparsity {}]",
                    self.step_fraction, self.target_sparsity
                )));
            }
            if self.retrain.is_none() {
                return Err(Error::Config("iterative pruning needs a retraining config".into()));
            }
        }
        Ok(())
    }

    /// Filters left once the target is reached.
    pub fn final_filters(&self, original: usize) -> usize {
        final_filters(original, self.target_sparsity)
    }

    /// Filter counts after each iterative step, ending at the target.
    pub fn filter_counts(&self, original: usize) -> Vec<usize> {
        let end = self.final_filters(original);
        if self.mode == PruneMode::OneShot {
            return if end < original { vec![end] } else { Vec::new() };
        }
        let step = ((self.step_fraction * original as f64).round() as usize).max(1);
        let mut counts = Vec::new();
        let mut c = original;
        while c > end {
            c = c.saturating_sub(step).max(end);
            counts.push(c);
        }
        counts
    }
}

/// `ceil((1 - sparsity) * original)`, never below one filter.
pub fn final_filters(original: usize, sparsity: f64) -> usize {
    // The epsilon stops 0.7 * 300 = 210.00000000000003 rounding up to 211.
    let keep = ((1.0 - sparsity) * original as f64 - 1e-9).ceil();
    (keep.max(1.0) as usize).min(original)
}

/// Per-filter norm over all `k * d` weights; biases are not ranked.
pub fn filter_norms(model: &JointModel, norm: Norm) -> Vec<f64> {
    let w = model.conv_weight();
    (0..w.rows())
        .map(|c| {
            let row = w.row(c);
            match norm {
                Norm::L1 => row.iter().map(|&x| (x as f64).abs()).sum(),
                Norm::L2 => row.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt(),
            }
        })
        .collect()
}

/// A copy of `model` without the filters in `remove`, and without the
/// matching head input rows.
pub fn splice_filters(model: &JointModel, remove: &[usize]) -> Result<JointModel> {
    let c = model.num_filters();
    let mut mask = vec![false; c];
    for &i in remove {
        if i >= c {
            return Err(Error::Index { index: i, bound: c });
        }
        mask[i] = true;
    }
    let removed = mask.iter().filter(|&&m| m).count();
    if removed == c {
        return Err(Error::DegenerateModel(format!("cannot remove all {c} filters")));
    }
    if removed == 0 {
        return Ok(model.clone());
    }
    let head = |h: Option<&Head>| {
        h.map(|h| Head {
            weight: h.weight.drop_rows(&mask),
            bias: h.bias.clone(),
        })
    };
    let mut config = *model.config();
    config.num_filters = c - removed;
    JointModel::from_parts(
        config,
        model.embeddings().clone(),
        model.conv_weight().drop_rows(&mask),
        model.conv_bias().drop_rows(&mask),
        head(model.intent_head()),
        head(model.slot_head()),
        model.vocab().clone(),
        model.labels().clone(),
    )
}

/// Indices of the `count` lowest-norm filters; equal norms go by index.
pub fn lowest_filters(norms: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&a, &b| norms[a].total_cmp(&norms[b]).then(a.cmp(&b)));
    order.truncate(count);
    order.sort_unstable();
    order
}

/// Removes the `count` lowest-norm filters.
pub fn prune_step(model: &JointModel, norm: Norm, count: usize) -> Result<JointModel> {
    let c = model.num_filters();
    if count >= c {
        return Err(Error::DegenerateModel(format!("cannot remove {count} of {c} filters")));
    }
    splice_filters(model, &lowest_filters(&filter_norms(model, norm), count))
}

/// Prunes straight to the target filter count without retraining.
pub fn prune_one_shot(model: &JointModel, schedule: &PruneSchedule) -> Result<JointModel> {
    schedule.validate()?;
    let c = model.num_filters();
    prune_step(model, schedule.norm, c - schedule.final_filters(c))
}

/// One point of a compression curve.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsityCurvePoint {
    pub filters_remaining: usize,
    pub params: usize,
    /// Fraction of the original filters removed.
    pub compression_rate: f64,
    pub intent_accuracy: Option<f64>,
    pub slot_f1: Option<f64>,
    pub checkpoint: Option<PathBuf>,
}

/// Splits passed to the iterative loop.
#[derive(Clone, Copy, Debug)]
pub struct PruneData<'a> {
    pub train: &'a [EncodedExample],
    pub dev: &'a [EncodedExample],
    pub test: &'a [EncodedExample],
}

#[derive(Clone, Debug)]
pub struct IterativeOutcome {
    pub curve: Vec<SparsityCurvePoint>,
    pub model: JointModel,
    /// Steps whose retraining diverged and fell back to the last good weights.
    pub diverged_steps: Vec<usize>,
}

/// Alternates pruning steps with retraining to early-stopping convergence,
/// evaluating on the test split after each step. When `checkpoint_dir` is
/// given, every step's model is saved there.
pub fn prune_iterative(
    model: &JointModel,
    data: PruneData<'_>,
    schedule: &PruneSchedule,
    checkpoint_dir: Option<&Path>,
) -> Result<IterativeOutcome> {
    schedule.validate()?;
    let retrain = schedule
        .retrain
        .ok_or_else(|| Error::Config("iterative pruning needs a retraining config".into()))?;
    let original = model.num_filters();
    let mut current = model.clone();
    let mut curve = Vec::new();
    let mut diverged_steps = Vec::new();

    for (step, target) in schedule.filter_counts(original).into_iter().enumerate() {
        let pruned = prune_step(&current, schedule.norm, current.num_filters() - target)?;
        current = match train(pruned, data.train, data.dev, &retrain) {
            Ok(outcome) => outcome.model,
            Err(Error::Diverged { epoch, last_good }) => {
                log::warn!("retraining at {target} filters diverged in epoch {epoch}; keeping last good weights");
                diverged_steps.push(step);
                *last_good
            }
            Err(e) => return Err(e),
        };
        let metrics = evaluate(&current, data.test)?.metrics;
        let checkpoint = match checkpoint_dir {
            Some(dir) => {
                let path = dir.join(format!("pruned_{target}.ckpt"));
                save_checkpoint(&current, &path)?;
                Some(path)
            }
            None => None,
        };
        log::info!(
            "{target} filters: intent {:?} slot f1 {:?}",
            metrics.intent_accuracy,
            metrics.slot_f1()
        );
        curve.push(SparsityCurvePoint {
            filters_remaining: target,
            params: current.count_params(false),
            compression_rate: 1.0 - target as f64 / original as f64,
            intent_accuracy: metrics.intent_accuracy,
            slot_f1: metrics.slot_f1(),
            checkpoint,
        });
    }
    Ok(IterativeOutcome {
        curve,
        model: current,
        diverged_steps,
    })
}

/// Header of the curve record file.
pub const CURVE_HEADER: &str = "filters\tparams\tcompression_rate\tintent_acc\tslot_f1\tcheckpoint_path";

fn opt_field(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6}"))
}

pub fn curve_to_tsv(points: &[SparsityCurvePoint]) -> String {
    let mut s = String::from(CURVE_HEADER);
    s.push('\n');
    for p in points {
        s.push_str(&format!(
            "{}\t{}\t{:.6}\t{}\t{}\t{}\n",
            p.filters_remaining,
            p.params,
            p.compression_rate,
            opt_field(p.intent_accuracy),
            opt_field(p.slot_f1),
            p.checkpoint.as_ref().map_or_else(|| "-".into(), |c| c.display().to_string()),
        ));
    }
    s
}

pub fn write_curve(path: impl AsRef<Path>, points: &[SparsityCurvePoint]) -> Result<()> {
    fs::write(path, curve_to_tsv(points))?;
    Ok(())
}

pub fn read_curve(path: impl AsRef<Path>) -> Result<Vec<SparsityCurvePoint>> {
    let path = path.as_ref();
    parse_curve(&fs::read_to_string(path)?, path)
}

pub fn parse_curve(text: &str, path: &Path) -> Result<Vec<SparsityCurvePoint>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == CURVE_HEADER => {}
        _ => return Err(Error::format(path, 1, "missing curve header")),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::format(path, i + 1, msg);
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(bad("expected 6 tab-separated fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("malformed number"));
        let opt = |s: &str| if s == "-" { Ok(None) } else { num(s).map(Some) };
        out.push(SparsityCurvePoint {
            filters_remaining: f[0].parse().map_err(|_| bad("malformed filter count"))?,
            params: f[1].parse().map_err(|_| bad("malformed parameter count"))?,
            compression_rate: num(f[2])?,
            intent_accuracy: opt(f[3])?,
            slot_f1: opt(f[4])?,
            checkpoint: (f[5] != "-").then(|| PathBuf::from(f[5])),
        });
    }
    Ok(out)
}
