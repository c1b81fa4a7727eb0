//! Knowledge distillation into a narrower student of the same family.

use std::path::Path;

use crate::data::EncodedExample;
use crate::error::{Error, Result};
use crate::metrics::RunMetrics;
use crate::model::train::{train_with, Objective};
use crate::model::{evaluate, save_checkpoint, JointModel, LogitVars, TrainConfig};
use crate::pruning::{final_filters, PruneData, SparsityCurvePoint};
use crate::tensor::{ops, GradTape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistillConfig {
    pub temperature: f64,
    /// Weight of the hard-label cross-entropy; the soft term gets the rest.
    pub hard_weight: f64,
    pub student_filters: usize,
    pub train: TrainConfig,
    /// Seed for the student's initial weights.
    pub init_seed: u64,
}

impl DistillConfig {
    pub fn new(student_filters: usize, train: TrainConfig) -> Self {
        Self {
            temperature: 2.0,
            hard_weight: 0.5,
            student_filters,
            train,
            init_seed: train.seed,
        }
    }

    pub fn validate(&self, teacher_filters: usize) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!("temperature {} must be positive", self.temperature)));
        }
        if !(0.0..=1.0).contains(&self.hard_weight) {
            return Err(Error::Config(format!("hard-label weight {} must lie in [0, 1]", self.hard_weight)));
        }
        if self.student_filters == 0 || self.student_filters > teacher_filters {
            return Err(Error::Config(format!(
                "student filters {} must lie in [1, {teacher_filters}]",
                self.student_filters
            )));
        }
        self.train.validate()
    }
}

/// Student width that removes `rate` of the teacher's filters, rounded the
/// same way as the pruning schedule so the two curves line up.
pub fn student_filters_for_rate(teacher_filters: usize, rate: f64) -> usize {
    final_filters(teacher_filters, rate)
}

/// `hard_weight * xent(student, target) + (1 - hard_weight) * T^2 *
/// KL(softmax(teacher / T) || softmax(student / T))` for one logit vector.
pub fn kd_loss(student: &[f64], teacher: &[f64], temperature: f64, target: usize, hard_weight: f64) -> Result<f64> {
    if student.len() != teacher.len() {
        return Err(Error::dim("kd_loss", "classes", student.len(), teacher.len()));
    }
    if student.is_empty() {
        return Err(Error::EmptySequence("kd_loss"));
    }
    if target >= student.len() {
        return Err(Error::Label(format!("target class {target} out of range for {} classes", student.len())));
    }
    if !(temperature > 0.0) {
        return Err(Error::Config(format!("temperature {temperature} must be positive")));
    }
    Ok(ops::kd_row(student, teacher, temperature, target, hard_weight, None))
}

struct TeacherLogits {
    intent: Option<Tensor>,
    slot: Option<Tensor>,
}

struct Distillation {
    teacher: Vec<TeacherLogits>,
    temperature: f32,
    hard_weight: f32,
}

impl Objective for Distillation {
    fn loss(
        &self,
        model: &JointModel,
        tape: &mut GradTape<f32>,
        logits: &LogitVars,
        example: &EncodedExample,
        index: usize,
    ) -> Result<Var> {
        let t = &self.teacher[index];
        let intent = match (logits.intent, &t.intent) {
            (Some(l), Some(tl)) => Some(tape.distill(l, tl, &[example.intent], self.temperature, self.hard_weight)?),
            _ => None,
        };
        let slot = match (logits.slot, &t.slot) {
            (Some(l), Some(tl)) => Some(tape.distill(l, tl, example.valid_slots(), self.temperature, self.hard_weight)?),
            _ => None,
        };
        Ok(match (intent, slot) {
            (Some(i), Some(s)) => {
                let a = model.config().alpha as f32;
                tape.weighted_sum(i, a, s, 1.0 - a)
            }
            (Some(v), None) | (None, Some(v)) => v,
            (None, None) => return Err(Error::Config("teacher and student share no task head".into())),
        })
    }
}

/// Trains a freshly initialised student against the frozen teacher's
/// logits and evaluates it on the test split.
pub fn distill(teacher: &JointModel, config: &DistillConfig, data: PruneData<'_>) -> Result<(JointModel, RunMetrics)> {
    config.validate(teacher.num_filters())?;
    let mut student_cfg = *teacher.config();
    student_cfg.num_filters = config.student_filters;
    let student = JointModel::new(
        student_cfg,
        teacher.embeddings().clone(),
        teacher.vocab().clone(),
        teacher.labels().clone(),
        config.init_seed,
    )?;

    let mut rng = rand::rng();
    let teacher_logits = data
        .train
        .iter()
        .map(|ex| {
            // Eval mode never draws from the rng.
            let out = teacher.forward(ex, false, &mut rng)?;
            Ok(TeacherLogits {
                intent: out.intent_logits,
                slot: out.slot_logits,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let objective = Distillation {
        teacher: teacher_logits,
        temperature: config.temperature as f32,
        hard_weight: config.hard_weight as f32,
    };
    let outcome = train_with(student, data.train, data.dev, &config.train, &objective)?;
    let metrics = evaluate(&outcome.model, data.test)?.metrics;
    Ok((outcome.model, metrics))
}

/// One distilled student per compression rate, as curve points.
pub fn distill_curve(
    teacher: &JointModel,
    rates: &[f64],
    base: &DistillConfig,
    data: PruneData<'_>,
    checkpoint_dir: Option<&Path>,
) -> Result<Vec<SparsityCurvePoint>> {
    let c = teacher.num_filters();
    let mut points = Vec::with_capacity(rates.len());
    for &rate in rates {
        let filters = student_filters_for_rate(c, rate);
        let config = DistillConfig {
            student_filters: filters,
            ..*base
        };
        let (student, metrics) = distill(teacher, &config, data)?;
        let checkpoint = match checkpoint_dir {
            Some(dir) => {
                let path = dir.join(format!("student_{filters}.ckpt"));
                save_checkpoint(&student, &path)?;
                Some(path)
            }
            None => None,
        };
        points.push(SparsityCurvePoint {
            filters_remaining: filters,
            params: metrics.params,
            compression_rate: 1.0 - filters as f64 / c as f64,
            intent_accuracy: metrics.intent_accuracy,
            slot_f1: metrics.slot_f1(),
            checkpoint,
        });
    }
    Ok(points)
}
