//! The single-layer convolutional joint model.
//!
//! An utterance is embedded with frozen word vectors, convolved with `C`
//! filters of odd width `k`, and read out by two heads: the intent head
//! consumes the max-over-time pooled features, the slot head consumes the
//! per-position features. Slot and joint models pad centrally so every
//! token gets exactly one feature vector; intent-only models skip the
//! padding.

mod checkpoint;
mod infer;
pub(crate) mod train;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{EncodedExample, LabelMaps, Vocabulary};
use crate::error::{Error, Result};
use crate::tensor::{GradTape, Real, Tensor, Var};

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use infer::{InferenceScratch, Prediction};
pub use train::{evaluate, predict_all, train, DevMetric, EpochRecord, Evaluation, TrainConfig, TrainOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TaskMode {
    Intent,
    Slot,
    Joint,
}

impl TaskMode {
    pub fn has_intent(self) -> bool {
        matches!(self, TaskMode::Intent | TaskMode::Joint)
    }

    pub fn has_slot(self) -> bool {
        matches!(self, TaskMode::Slot | TaskMode::Joint)
    }

    /// Whether the input is centre-padded before the convolution.
    pub fn pads(self) -> bool {
        self.has_slot()
    }

    pub(crate) fn code(self) -> u32 {
        match self {
            TaskMode::Intent => 0,
            TaskMode::Slot => 1,
            TaskMode::Joint => 2,
        }
    }

    pub(crate) fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(TaskMode::Intent),
            1 => Ok(TaskMode::Slot),
            2 => Ok(TaskMode::Joint),
            other => Err(Error::Checkpoint(format!("unknown task mode {other}"))),
        }
    }
}

impl fmt::Display for TaskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskMode::Intent => "intent",
            TaskMode::Slot => "slot",
            TaskMode::Joint => "joint",
        })
    }
}

impl FromStr for TaskMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intent" => Ok(TaskMode::Intent),
            "slot" => Ok(TaskMode::Slot),
            "joint" => Ok(TaskMode::Joint),
            other => Err(Error::Config(format!("unknown task {other:?} (expected intent, slot or joint)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub num_filters: usize,
    pub kernel_size: usize,
    pub dropout: f64,
    /// Weight of the intent loss in the joint objective.
    pub alpha: f64,
    pub max_seq_len: usize,
    pub task: TaskMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embed_dim: 100,
            num_filters: 300,
            kernel_size: 5,
            dropout: 0.5,
            alpha: 0.2,
            max_seq_len: 50,
            task: TaskMode::Joint,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kernel_size.is_multiple_of(2) {
            return Err(Error::Config(format!("kernel size must be odd, got {}", self.kernel_size)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must be in [0, 1], got {}", self.alpha)));
        }
        crate::tensor::ops::check_dropout(self.dropout)?;
        if self.embed_dim == 0 || self.num_filters == 0 || self.max_seq_len == 0 {
            return Err(Error::Config("embed_dim, num_filters and max_seq_len must be at least 1".into()));
        }
        if self.max_seq_len < self.kernel_size {
            return Err(Error::Config(format!(
                "max_seq_len {} is shorter than the kernel ({})",
                self.max_seq_len, self.kernel_size
            )));
        }
        Ok(())
    }
}

/// Closed-form parameter count of the conv layer and the heads present in
/// `task`; embeddings are added only when `vocab_size` is given.
pub fn param_count(
    filters: usize,
    kernel: usize,
    dim: usize,
    intents: usize,
    slots: usize,
    task: TaskMode,
    vocab_size: Option<usize>,
) -> usize {
    let conv = filters * kernel * dim + filters;
    let intent = if task.has_intent() { filters * intents + intents } else { 0 };
    let slot = if task.has_slot() { filters * slots + slots } else { 0 };
    conv + intent + slot + vocab_size.map_or(0, |v| v * dim)
}

/// A linear read-out `[C, out]` plus bias.
#[derive(Clone, Debug, PartialEq)]
pub struct Head {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Head {
    fn init(rng: &mut ChaCha8Rng, input: usize, output: usize) -> Self {
        let bound = 1.0 / (input as f32).sqrt();
        Self {
            weight: Tensor::from_fn(&[input, output], |_| rng.random_range(-bound..bound)),
            bias: Tensor::from_fn(&[output], |_| rng.random_range(-bound..bound)),
        }
    }

    pub fn outputs(&self) -> usize {
        self.bias.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointModel {
    pub(crate) config: ModelConfig,
    pub(crate) embeddings: Arc<Tensor>,
    pub(crate) conv_weight: Tensor,
    pub(crate) conv_bias: Tensor,
    pub(crate) intent_head: Option<Head>,
    pub(crate) slot_head: Option<Head>,
    pub(crate) labels: Arc<LabelMaps>,
    pub(crate) vocab: Arc<Vocabulary>,
}

/// Logits of one forward pass; absent heads yield `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardOutput {
    pub intent_logits: Option<Tensor>,
    pub slot_logits: Option<Tensor>,
}

/// Tape handles of the trainable tensors.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ParamVars {
    pub conv_w: Var,
    pub conv_b: Var,
    pub intent: Option<(Var, Var)>,
    pub slot: Option<(Var, Var)>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct LogitVars {
    pub intent: Option<Var>,
    pub slot: Option<Var>,
}

impl JointModel {
    /// Random initialisation around a frozen embedding table.
    pub fn new(
        config: ModelConfig,
        embeddings: Arc<Tensor>,
        vocab: Arc<Vocabulary>,
        labels: Arc<LabelMaps>,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if embeddings.rank() != 2 || embeddings.cols() != config.embed_dim {
            return Err(Error::dim("JointModel", "embedding width", config.embed_dim, embeddings.cols()));
        }
        if embeddings.rows() != vocab.len() {
            return Err(Error::dim("JointModel", "embedding rows", vocab.len(), embeddings.rows()));
        }
        if labels.num_intents() == 0 || labels.num_slots() == 0 {
            return Err(Error::Label("label maps must contain at least one intent and one slot tag".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (c, k, d) = (config.num_filters, config.kernel_size, config.embed_dim);
        let bound = 1.0 / ((k * d) as f32).sqrt();
        let conv_weight = Tensor::from_fn(&[c, k, d], |_| rng.random_range(-bound..bound));
        let conv_bias = Tensor::from_fn(&[c], |_| rng.random_range(-bound..bound));
        let intent_head = config
            .task
            .has_intent()
            .then(|| Head::init(&mut rng, c, labels.num_intents()));
        let slot_head = config
            .task
            .has_slot()
            .then(|| Head::init(&mut rng, c, labels.num_slots()));
        Ok(Self {
            config,
            embeddings,
            conv_weight,
            conv_bias,
            intent_head,
            slot_head,
            labels,
            vocab,
        })
    }

    /// Assembles a model from explicit tensors, checking every shape.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        config: ModelConfig,
        embeddings: Arc<Tensor>,
        conv_weight: Tensor,
        conv_bias: Tensor,
        intent_head: Option<Head>,
        slot_head: Option<Head>,
        vocab: Arc<Vocabulary>,
        labels: Arc<LabelMaps>,
    ) -> Result<Self> {
        config.validate()?;
        let (c, k, d) = (config.num_filters, config.kernel_size, config.embed_dim);
        if conv_weight.shape() != [c, k, d] {
            return Err(Error::dim("JointModel", "conv weight elements", c * k * d, conv_weight.len()));
        }
        if conv_bias.len() != c {
            return Err(Error::dim("JointModel", "conv bias", c, conv_bias.len()));
        }
        if embeddings.rank() != 2 || embeddings.cols() != d {
            return Err(Error::dim("JointModel", "embedding width", d, embeddings.cols()));
        }
        if embeddings.rows() != vocab.len() {
            return Err(Error::dim("JointModel", "embedding rows", vocab.len(), embeddings.rows()));
        }
        let check_head = |head: &Option<Head>, present: bool, outputs: usize, name: &'static str| -> Result<()> {
            match (head, present) {
                (Some(h), true) => {
                    if h.weight.shape() != [c, outputs] {
                        return Err(Error::dim("JointModel", name, c * outputs, h.weight.len()));
                    }
                    if h.bias.len() != outputs {
                        return Err(Error::dim("JointModel", name, outputs, h.bias.len()));
                    }
                    Ok(())
                }
                (None, false) => Ok(()),
                _ => Err(Error::Config(format!("{name} presence does not match task {}", config.task))),
            }
        };
        check_head(&intent_head, config.task.has_intent(), labels.num_intents(), "intent head")?;
        check_head(&slot_head, config.task.has_slot(), labels.num_slots(), "slot head")?;
        Ok(Self {
            config,
            embeddings,
            conv_weight,
            conv_bias,
            intent_head,
            slot_head,
            labels,
            vocab,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Dropout and sequence length are not stored in checkpoints; this
    /// replaces them after loading.
    pub fn set_runtime(&mut self, dropout: f64, max_seq_len: usize) -> Result<()> {
        let mut cfg = self.config;
        cfg.dropout = dropout;
        cfg.max_seq_len = max_seq_len;
        cfg.validate()?;
        self.config = cfg;
        Ok(())
    }

    pub fn num_filters(&self) -> usize {
        self.config.num_filters
    }

    pub fn embeddings(&self) -> &Arc<Tensor> {
        &self.embeddings
    }

    pub fn conv_weight(&self) -> &Tensor {
        &self.conv_weight
    }

    pub fn conv_bias(&self) -> &Tensor {
        &self.conv_bias
    }

    pub fn intent_head(&self) -> Option<&Head> {
        self.intent_head.as_ref()
    }

    pub fn slot_head(&self) -> Option<&Head> {
        self.slot_head.as_ref()
    }

    pub fn labels(&self) -> &Arc<LabelMaps> {
        &self.labels
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn count_params(&self, include_embeddings: bool) -> usize {
        param_count(
            self.config.num_filters,
            self.config.kernel_size,
            self.config.embed_dim,
            self.labels.num_intents(),
            self.labels.num_slots(),
            self.config.task,
            include_embeddings.then(|| self.vocab.len()),
        )
    }

    pub(crate) fn trainable_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.conv_weight, &mut self.conv_bias];
        for head in [self.intent_head.as_mut(), self.slot_head.as_mut()].into_iter().flatten() {
            out.push(&mut head.weight);
            out.push(&mut head.bias);
        }
        out
    }

    pub(crate) fn trainable_shapes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![self.conv_weight.shape().to_vec(), self.conv_bias.shape().to_vec()];
        for head in [self.intent_head.as_ref(), self.slot_head.as_ref()].into_iter().flatten() {
            out.push(head.weight.shape().to_vec());
            out.push(head.bias.shape().to_vec());
        }
        out
    }

    /// Trainable tensors in a fixed order: conv weight, conv bias, then
    /// weight and bias of each present head (intent before slot).
    pub fn trainable_tensors(&self) -> Vec<&Tensor> {
        let mut out = vec![&self.conv_weight, &self.conv_bias];
        for head in [self.intent_head.as_ref(), self.slot_head.as_ref()].into_iter().flatten() {
            out.push(&head.weight);
            out.push(&head.bias);
        }
        out
    }

    /// Eval-mode loss graph for one example, reading the trainable tensors
    /// from `params` (ordered as [`JointModel::trainable_tensors`]) and the
    /// embeddings from `embeddings`. Lets callers differentiate the full
    /// model at any precision.
    pub fn loss_graph<T: Real>(
        &self,
        tape: &mut GradTape<T>,
        params: &[Var],
        embeddings: &Tensor<T>,
        example: &EncodedExample,
    ) -> Result<Var> {
        let expected = self.trainable_tensors().len();
        if params.len() != expected {
            return Err(Error::dim("loss_graph", "parameter tensors", expected, params.len()));
        }
        let mut rest = params[2..].chunks(2).map(|p| (p[0], p[1]));
        let vars = ParamVars {
            conv_w: params[0],
            conv_b: params[1],
            intent: self.intent_head.as_ref().and_then(|_| rest.next()),
            slot: self.slot_head.as_ref().and_then(|_| rest.next()),
        };
        let logits = self.forward_vars(tape, &vars, embeddings, example, false, &mut rand::rng())?;
        self.loss_vars(tape, &logits, example)
    }

    /// Records the trainable tensors on a tape, cast to `T`.
    pub(crate) fn push_params<T: Real>(&self, tape: &mut GradTape<T>) -> ParamVars {
        let conv_w = tape.param(self.conv_weight.cast());
        let conv_b = tape.param(self.conv_bias.cast());
        let intent = self
            .intent_head
            .as_ref()
            .map(|h| (tape.param(h.weight.cast()), tape.param(h.bias.cast())));
        let slot = self
            .slot_head
            .as_ref()
            .map(|h| (tape.param(h.weight.cast()), tape.param(h.bias.cast())));
        ParamVars {
            conv_w,
            conv_b,
            intent,
            slot,
        }
    }

    fn check_example(&self, example: &EncodedExample) -> Result<()> {
        if example.valid_len == 0 {
            return Err(Error::EmptySequence("forward"));
        }
        if example.valid_len > self.config.max_seq_len || example.valid_len > example.tokens.len() {
            return Err(Error::Truncation {
                valid_len: example.valid_len,
                max_seq_len: self.config.max_seq_len.min(example.tokens.len()),
            });
        }
        Ok(())
    }

    /// Token ids fed to the convolution: the valid prefix, extended with
    /// padding up to the kernel width for unpadded intent-only models.
    pub(crate) fn conv_tokens<'a>(&self, example: &'a EncodedExample) -> Result<&'a [usize]> {
        self.check_example(example)?;
        if self.config.task.pads() {
            Ok(example.valid_tokens())
        } else {
            let n = example.valid_len.max(self.config.kernel_size);
            if n > example.tokens.len() {
                return Err(Error::dim("forward", "padded length", n, example.tokens.len()));
            }
            Ok(&example.tokens[..n])
        }
    }

    /// Builds the forward graph for one example on `tape`.
    pub(crate) fn forward_vars<T: Real, R: Rng + ?Sized>(
        &self,
        tape: &mut GradTape<T>,
        params: &ParamVars,
        embeddings: &Tensor<T>,
        example: &EncodedExample,
        training: bool,
        rng: &mut R,
    ) -> Result<LogitVars> {
        let tokens = self.conv_tokens(example)?;
        let x = tape.constant(embed(tokens, embeddings)?);
        let x = if self.config.task.pads() {
            tape.pad_centered(x, self.config.kernel_size)?
        } else {
            x
        };
        let features = tape.conv1d(x, params.conv_w, params.conv_b)?;
        let p = self.config.dropout;

        let intent = match params.intent {
            Some((w, b)) => {
                // Features only exist for the valid prefix (plus kernel-width
                // padding when unpadded), so every row takes part in the max.
                let pool_len = tape.value(features).rows();
                let pooled = tape.max_over_time(features, pool_len)?;
                let dropped = tape.dropout(pooled, p, training, rng)?;
                Some(tape.linear(dropped, w, b)?)
            }
            None => None,
        };
        let slot = match params.slot {
            Some((w, b)) => {
                let dropped = tape.dropout(features, p, training, rng)?;
                Some(tape.linear(dropped, w, b)?)
            }
            None => None,
        };
        Ok(LogitVars { intent, slot })
    }

    /// Adds the task loss for one example: `alpha * intent + (1 - alpha) * slot`
    /// for joint models, the single task loss otherwise.
    pub(crate) fn loss_vars<T: Real>(
        &self,
        tape: &mut GradTape<T>,
        logits: &LogitVars,
        example: &EncodedExample,
    ) -> Result<Var> {
        let intent = logits
            .intent
            .map(|l| tape.cross_entropy(l, &[example.intent]))
            .transpose()?;
        let slot = logits
            .slot
            .map(|l| tape.cross_entropy(l, example.valid_slots()))
            .transpose()?;
        Ok(match (intent, slot) {
            (Some(i), Some(s)) => {
                let a = T::lit(self.config.alpha);
                tape.weighted_sum(i, a, s, T::one() - a)
            }
            (Some(i), None) => i,
            (None, Some(s)) => s,
            (None, None) => unreachable!("a model always has at least one head"),
        })
    }

    /// Forward pass through the tape machinery; see [`JointModel::predict`]
    /// for the allocation-free inference path.
    pub fn forward<R: Rng + ?Sized>(&self, example: &EncodedExample, training: bool, rng: &mut R) -> Result<ForwardOutput> {
        let mut tape = GradTape::<f32>::new();
        let params = self.push_params(&mut tape);
        let vars = self.forward_vars(&mut tape, &params, &self.embeddings, example, training, rng)?;
        Ok(ForwardOutput {
            intent_logits: vars.intent.map(|v| tape.value(v).clone()),
            slot_logits: vars.slot.map(|v| tape.value(v).clone()),
        })
    }
}

/// Row lookup into the embedding table.
pub fn embed<T: Real>(tokens: &[usize], embeddings: &Tensor<T>) -> Result<Tensor<T>> {
    if tokens.is_empty() {
        return Err(Error::EmptySequence("embed"));
    }
    let (v, d) = (embeddings.rows(), embeddings.cols());
    let mut data = Vec::with_capacity(tokens.len() * d);
    for &id in tokens {
        if id >= v {
            return Err(Error::Vocabulary { id, size: v });
        }
        data.extend_from_slice(embeddings.row(id));
    }
    Tensor::new(vec![tokens.len(), d], data)
}

/// `alpha * intent + (1 - alpha) * slot`.
pub fn joint_loss(intent_loss: f64, slot_loss: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha must be in [0, 1], got {alpha}")));
    }
    if !intent_loss.is_finite() {
        return Err(Error::Numeric { pass: "intent loss".into() });
    }
    if !slot_loss.is_finite() {
        return Err(Error::Numeric { pass: "slot loss".into() });
    }
    Ok(alpha * intent_loss + (1.0 - alpha) * slot_loss)
}
