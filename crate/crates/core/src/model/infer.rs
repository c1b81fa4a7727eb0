use super::JointModel;
use crate::data::EncodedExample;
use crate::error::{Error, Result};
use crate::tensor::ops;

/// Preallocated buffers for batch-1 inference with one model shape.
#[derive(Clone, Debug)]
pub struct InferenceScratch {
    filters: usize,
    input: Vec<f32>,
    features: Vec<f32>,
    pooled: Vec<f32>,
    argmax: Vec<usize>,
    intent_logits: Vec<f32>,
    slot_logits: Vec<f32>,
}

impl InferenceScratch {
    pub fn new(model: &JointModel) -> Self {
        let cfg = &model.config;
        let (c, k, d, n) = (cfg.num_filters, cfg.kernel_size, cfg.embed_dim, cfg.max_seq_len);
        Self {
            filters: c,
            input: vec![0.0; (n + k - 1) * d],
            features: vec![0.0; n * c],
            pooled: vec![0.0; c],
            argmax: vec![0; c],
            intent_logits: vec![0.0; model.intent_head.as_ref().map_or(0, |h| h.outputs())],
            slot_logits: vec![0.0; n * model.slot_head.as_ref().map_or(0, |h| h.outputs())],
        }
    }

    /// Total reserved capacity, for checking that inference never grows it.
    pub fn capacity(&self) -> usize {
        self.input.capacity()
            + self.features.capacity()
            + self.pooled.capacity()
            + self.argmax.capacity()
            + self.intent_logits.capacity()
            + self.slot_logits.capacity()
    }
}

/// Borrowed view of one inference result.
#[derive(Debug)]
pub struct Prediction<'a> {
    pub intent_logits: Option<&'a [f32]>,
    /// Row-major `[valid_len, S]`.
    pub slot_logits: Option<&'a [f32]>,
    pub valid_len: usize,
    pub num_slots: usize,
}

impl Prediction<'_> {
    pub fn intent(&self) -> Option<usize> {
        self.intent_logits.map(argmax)
    }

    pub fn slot_at(&self, t: usize) -> Option<usize> {
        self.slot_logits
            .map(|l| argmax(&l[t * self.num_slots..(t + 1) * self.num_slots]))
    }

    pub fn slots(&self) -> Option<Vec<usize>> {
        self.slot_logits.map(|l| l.chunks(self.num_slots).map(argmax).collect())
    }
}

/// Index of the largest value; the first one wins ties.
pub(crate) fn argmax(xs: &[f32]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

impl JointModel {
    /// Eval-mode forward pass into preallocated buffers; no heap allocation.
    pub fn predict<'s>(&self, example: &EncodedExample, scratch: &'s mut InferenceScratch) -> Result<Prediction<'s>> {
        let cfg = &self.config;
        if scratch.filters != cfg.num_filters {
            return Err(Error::dim("predict", "scratch filters", cfg.num_filters, scratch.filters));
        }
        let tokens = self.conv_tokens(example)?;
        let (c, k, d) = (cfg.num_filters, cfg.kernel_size, cfg.embed_dim);
        let pad = if cfg.task.pads() { (k - 1) / 2 } else { 0 };
        let padded_len = tokens.len() + 2 * pad;
        let vocab_size = self.embeddings.rows();

        let input = &mut scratch.input[..padded_len * d];
        input[..pad * d].fill(0.0);
        input[(pad + tokens.len()) * d..].fill(0.0);
        for (i, &id) in tokens.iter().enumerate() {
            if id >= vocab_size {
                return Err(Error::Vocabulary { id, size: vocab_size });
            }
            input[(pad + i) * d..(pad + i + 1) * d].copy_from_slice(self.embeddings.row(id));
        }

        let out_len = padded_len - k + 1;
        let features = &mut scratch.features[..out_len * c];
        ops::conv1d_raw(
            input,
            d,
            self.conv_weight.data(),
            self.conv_bias.data(),
            c,
            k,
            out_len,
            features,
        );

        let intent_logits = match &self.intent_head {
            Some(head) => {
                ops::max_over_time_raw(features, c, out_len, &mut scratch.pooled, &mut scratch.argmax);
                let outputs = head.outputs();
                let out = &mut scratch.intent_logits[..outputs];
                ops::linear_raw(&scratch.pooled, head.weight.data(), head.bias.data(), c, outputs, 1, out);
                Some(&scratch.intent_logits[..outputs])
            }
            None => None,
        };
        let (slot_logits, num_slots) = match &self.slot_head {
            Some(head) => {
                let outputs = head.outputs();
                let out = &mut scratch.slot_logits[..out_len * outputs];
                ops::linear_raw(features, head.weight.data(), head.bias.data(), c, outputs, out_len, out);
                (Some(&scratch.slot_logits[..out_len * outputs]), outputs)
            }
            None => (None, 0),
        };
        Ok(Prediction {
            intent_logits,
            slot_logits,
            valid_len: example.valid_len,
            num_slots,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::tiny_model;
    use crate::model::TaskMode;

    #[test]
    fn matches_tape_forward() {
        for task in [TaskMode::Joint, TaskMode::Intent, TaskMode::Slot] {
            let (model, examples) = tiny_model(task, 5, 9);
            let mut scratch = InferenceScratch::new(&model);
            for ex in &examples {
                let reference = model.forward(ex, false, &mut rand::rng()).unwrap();
                let fast = model.predict(ex, &mut scratch).unwrap();
                if let Some(r) = reference.intent_logits {
                    for (a, b) in r.data().iter().zip(fast.intent_logits.unwrap()) {
                        assert!((a - b).abs() < 1e-5);
                    }
                }
                if let Some(r) = reference.slot_logits {
                    for (a, b) in r.data().iter().zip(fast.slot_logits.unwrap()) {
                        assert!((a - b).abs() < 1e-5);
                    }
                }
            }
        }
    }

    #[test]
    fn scratch_capacity_is_stable() {
        let (model, examples) = tiny_model(TaskMode::Joint, 5, 2);
        let mut scratch = InferenceScratch::new(&model);
        let before = scratch.capacity();
        for ex in &examples {
            model.predict(ex, &mut scratch).unwrap();
        }
        assert_eq!(scratch.capacity(), before);
    }

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
    }
}
