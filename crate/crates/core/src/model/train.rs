use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{InferenceScratch, JointModel, LogitVars, ParamVars};
use crate::data::EncodedExample;
use crate::error::{Error, Result};
use crate::metrics::{intent_accuracy, slot_f1, RunMetrics};
use crate::tensor::{AdamConfig, AdamState, GradTape, Var};

/// Quantity maximised on the dev split for checkpoint selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DevMetric {
    IntentAccuracy,
    SlotF1,
    /// Intent accuracy plus slot F1; a missing task contributes 0.
    Sum,
}

impl DevMetric {
    pub fn score(self, m: &RunMetrics) -> f64 {
        let intent = m.intent_accuracy.unwrap_or(0.0);
        let slot = m.slot_f1().unwrap_or(0.0);
        match self {
            DevMetric::IntentAccuracy => intent,
            DevMetric::SlotF1 => slot,
            DevMetric::Sum => intent + slot,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub dev_metric: DevMetric,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            adam: AdamConfig::default(),
            batch_size: 32,
            max_epochs: 50,
            patience: 5,
            seed: 1,
            dev_metric: DevMetric::Sum,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.patience == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch_size, patience and max_epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev: RunMetrics,
    pub dev_score: f64,
    pub improved: bool,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// The checkpoint with the best dev score.
    pub model: JointModel,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

/// Predictions plus metrics for one split.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub intent_preds: Option<Vec<usize>>,
    pub slot_preds: Option<Vec<Vec<usize>>>,
    pub metrics: RunMetrics,
}

/// Eval-mode predictions for every example.
pub fn predict_all(model: &JointModel, examples: &[EncodedExample]) -> Result<(Option<Vec<usize>>, Option<Vec<Vec<usize>>>)> {
    let mut scratch = InferenceScratch::new(model);
    let has_intent = model.intent_head.is_some();
    let has_slot = model.slot_head.is_some();
    let mut intents = Vec::with_capacity(if has_intent { examples.len() } else { 0 });
    let mut slots = Vec::with_capacity(if has_slot { examples.len() } else { 0 });
    for ex in examples {
        let p = model.predict(ex, &mut scratch)?;
        if let Some(i) = p.intent() {
            intents.push(i);
        }
        if let Some(s) = p.slots() {
            slots.push(s);
        }
    }
    Ok((has_intent.then_some(intents), has_slot.then_some(slots)))
}

pub fn evaluate(model: &JointModel, examples: &[EncodedExample]) -> Result<Evaluation> {
    if examples.is_empty() {
        return Err(Error::Data("cannot evaluate on an empty split".into()));
    }
    let (intent_preds, slot_preds) = predict_all(model, examples)?;
    let labels = model.labels();
    let intent_accuracy = intent_preds
        .as_ref()
        .map(|p| {
            let gold: Vec<usize> = examples.iter().map(|e| e.intent).collect();
            intent_accuracy(p, &gold)
        })
        .transpose()?;
    let slot = slot_preds
        .as_ref()
        .map(|preds| {
            let to_tags = |ids: &[usize]| ids.iter().map(|&i| labels.slot(i)).collect::<Vec<_>>();
            let pred: Vec<Vec<&str>> = preds.iter().map(|p| to_tags(p)).collect();
            let gold: Vec<Vec<&str>> = examples.iter().map(|e| to_tags(e.valid_slots())).collect();
            slot_f1(&pred, &gold)
        })
        .transpose()?;
    Ok(Evaluation {
        intent_preds,
        slot_preds,
        metrics: RunMetrics {
            intent_accuracy,
            slot,
            params: model.count_params(false),
            latency_ms: None,
        },
    })
}

/// Per-example training objective.
pub(crate) trait Objective {
    fn loss(
        &self,
        model: &JointModel,
        tape: &mut GradTape<f32>,
        logits: &LogitVars,
        example: &EncodedExample,
        index: usize,
    ) -> Result<Var>;
}

/// Cross-entropy on the gold labels, alpha-weighted across the two tasks.
pub(crate) struct Supervised;

impl Objective for Supervised {
    fn loss(
        &self,
        model: &JointModel,
        tape: &mut GradTape<f32>,
        logits: &LogitVars,
        example: &EncodedExample,
        _index: usize,
    ) -> Result<Var> {
        model.loss_vars(tape, logits, example)
    }
}

/// Mini-batch Adam with per-epoch dev evaluation and early stopping.
/// Returns the best dev checkpoint.
pub fn train(model: JointModel, train: &[EncodedExample], dev: &[EncodedExample], config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(model, train, dev, config, &Supervised)
}

pub(crate) fn train_with(
    mut model: JointModel,
    train: &[EncodedExample],
    dev: &[EncodedExample],
    config: &TrainConfig,
    objective: &dyn Objective,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train.is_empty() || dev.is_empty() {
        return Err(Error::Data("training needs non-empty train and dev splits".into()));
    }
    let shapes = model.trainable_shapes();
    let shape_refs: Vec<&[usize]> = shapes.iter().map(Vec::as_slice).collect();
    let mut adam = AdamState::new(config.adam, &shape_refs);
    let mut order_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut best: Option<(usize, JointModel)> = None;
    let mut stopper = EarlyStopping::new(config.patience);
    let mut history = Vec::new();

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut order_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let batch_loss = match train_batch(&mut model, &mut adam, train, batch, objective, &mut dropout_rng) {
                Ok(l) => l,
                Err(Error::Numeric { .. }) => {
                    let last_good = best.map(|(_, m)| m).unwrap_or(model);
                    return Err(Error::Diverged {
                        epoch,
                        last_good: Box::new(last_good),
                    });
                }
                Err(e) => return Err(e),
            };
            loss_sum += batch_loss * batch.len() as f64;
        }

        let dev_metrics = evaluate(&model, dev)?.metrics;
        let score = config.dev_metric.score(&dev_metrics);
        let step = stopper.update(score);
        let improved = step == StopStep::Improved;
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            dev: dev_metrics,
            dev_score: score,
            improved,
        });
        log::info!(
            "epoch {epoch}: loss {:.4} dev {:.4}{}",
            loss_sum / train.len() as f64,
            score,
            if improved { " *" } else { "" }
        );
        match step {
            StopStep::Improved => best = Some((epoch, model.clone())),
            StopStep::Stale => {}
            StopStep::Stop => break,
        }
    }

    let (best_epoch, model) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        model,
        best_epoch,
        history,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum StopStep {
    Improved,
    Stale,
    Stop,
}

/// Stops after `patience` consecutive epochs without a strictly better score.
#[derive(Debug)]
struct EarlyStopping {
    patience: usize,
    best: Option<f64>,
    stale: usize,
}

impl EarlyStopping {
    fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            stale: 0,
        }
    }

    fn update(&mut self, score: f64) -> StopStep {
        if self.best.is_none_or(|b| score > b) {
            self.best = Some(score);
            self.stale = 0;
            return StopStep::Improved;
        }
        self.stale += 1;
        if self.stale >= self.patience {
            StopStep::Stop
        } else {
            StopStep::Stale
        }
    }
}

/// One optimizer step on the mean loss of `batch`. Returns that mean.
fn train_batch(
    model: &mut JointModel,
    adam: &mut AdamState,
    data: &[EncodedExample],
    batch: &[usize],
    objective: &dyn Objective,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut tape = GradTape::<f32>::new();
    let params: ParamVars = model.push_params(&mut tape);
    let weight = 1.0 / batch.len() as f32;
    let mut total: Option<Var> = None;
    for &i in batch {
        let logits = model.forward_vars(&mut tape, &params, &model.embeddings, &data[i], true, rng)?;
        let loss = objective.loss(model, &mut tape, &logits, &data[i], i)?;
        total = Some(match total {
            None => tape.weighted_sum(loss, weight, loss, 0.0),
            Some(acc) => tape.weighted_sum(acc, 1.0, loss, weight),
        });
    }
    let total = total.expect("batches are non-empty");
    let value = tape.value(total).scalar_value();
    if !value.is_finite() {
        return Err(Error::Numeric {
            pass: "training batch loss".into(),
        });
    }
    let grads = tape.backward(total)?;

    let mut vars = vec![params.conv_w, params.conv_b];
    for (w, b) in [params.intent, params.slot].into_iter().flatten() {
        vars.push(w);
        vars.push(b);
    }
    let grad_tensors: Vec<_> = vars.iter().map(|&v| grads.of(&tape, v)).collect();
    if grad_tensors.iter().any(|g| !g.all_finite()) {
        return Err(Error::Numeric {
            pass: "training gradients".into(),
        });
    }
    let grad_refs: Vec<_> = grad_tensors.iter().collect();
    let mut targets = model.trainable_mut();
    adam.step(&mut targets, &grad_refs)?;
    Ok(value as f64)
}
