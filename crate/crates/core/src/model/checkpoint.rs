//! Little-endian binary checkpoints.
//!
//! Layout: magic, version, the seven shape integers (d, C, k, V, I, S, task),
//! alpha as `f32`, seven tensors (each a `u32` rank, `u32` dims and `f32`
//! data; rank 0 marks an absent head), then the intent, slot and vocabulary
//! string tables. Dropout and max sequence length are runtime settings and
//! are not stored; loading fills them with the defaults.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::{Head, JointModel, ModelConfig, TaskMode};
use crate::data::{LabelMaps, Vocabulary};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"CNLU";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn save_checkpoint(model: &JointModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model.to_bytes())?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<JointModel> {
    JointModel::from_bytes(&fs::read(path)?)
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_tensor(out: &mut Vec<u8>, t: Option<&Tensor>) {
    let Some(t) = t else {
        put_u32(out, 0);
        return;
    };
    put_u32(out, t.rank());
    for &s in t.shape() {
        put_u32(out, s);
    }
    for x in t.data() {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn put_strings(out: &mut Vec<u8>, items: &[String]) {
    put_u32(out, items.len());
    for s in items {
        put_u32(out, s.len());
        out.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn tensor(&mut self) -> Result<Option<Tensor>> {
        let rank = self.u32()?;
        if rank == 0 {
            return Ok(None);
        }
        let shape = (0..rank).map(|_| self.u32()).collect::<Result<Vec<_>>>()?;
        let len = shape.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s));
        let len = len.ok_or_else(|| Error::Checkpoint("tensor size overflows".into()))?;
        let bytes = self.take(len.checked_mul(4).ok_or_else(|| Error::Checkpoint("tensor size overflows".into()))?)?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Tensor::new(shape, data)
            .map(Some)
            .map_err(|e| Error::Checkpoint(e.to_string()))
    }

    fn required(&mut self, what: &str) -> Result<Tensor> {
        self.tensor()?
            .ok_or_else(|| Error::Checkpoint(format!("missing {what} tensor")))
    }

    fn strings(&mut self) -> Result<Vec<String>> {
        let n = self.u32()?;
        let mut out = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            let len = self.u32()?;
            let s = std::str::from_utf8(self.take(len)?).map_err(|e| Error::Checkpoint(e.to_string()))?;
            out.push(s.to_owned());
        }
        Ok(out)
    }
}

impl JointModel {
    /// Serialises the model; equal models give equal bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let cfg = &self.config;
        let mut out = Vec::new();
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        for v in [
            cfg.embed_dim,
            cfg.num_filters,
            cfg.kernel_size,
            self.vocab.len(),
            self.labels.num_intents(),
            self.labels.num_slots(),
            cfg.task.code() as usize,
        ] {
            put_u32(&mut out, v);
        }
        out.extend_from_slice(&(cfg.alpha as f32).to_le_bytes());
        put_tensor(&mut out, Some(&self.embeddings));
        put_tensor(&mut out, Some(&self.conv_weight));
        put_tensor(&mut out, Some(&self.conv_bias));
        put_tensor(&mut out, self.intent_head.as_ref().map(|h| &h.weight));
        put_tensor(&mut out, self.intent_head.as_ref().map(|h| &h.bias));
        put_tensor(&mut out, self.slot_head.as_ref().map(|h| &h.weight));
        put_tensor(&mut out, self.slot_head.as_ref().map(|h| &h.bias));
        put_strings(&mut out, self.labels.intents());
        put_strings(&mut out, self.labels.slots());
        put_strings(&mut out, self.vocab.tokens());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION as usize {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let mut header = [0usize; 7];
        for h in &mut header {
            *h = r.u32()?;
        }
        let [d, c, k, v, i, s, task] = header;
        let task = TaskMode::from_code(task as u32)?;
        // Shortest decimal form of the stored f32, so 0.2 comes back as 0.2.
        let alpha: f64 = r.f32()?.to_string().parse().expect("f32 display parses as f64");

        let embeddings = r.required("embedding")?;
        let conv_weight = r.required("conv weight")?;
        let conv_bias = r.required("conv bias")?;
        let heads = [r.tensor()?, r.tensor()?, r.tensor()?, r.tensor()?];
        let [iw, ib, sw, sb] = heads;
        let head = |w: Option<Tensor>, b: Option<Tensor>| match (w, b) {
            (Some(weight), Some(bias)) => Ok(Some(Head { weight, bias })),
            (None, None) => Ok(None),
            _ => Err(Error::Checkpoint("head weight and bias presence differ".into())),
        };
        let intent_head = head(iw, ib)?;
        let slot_head = head(sw, sb)?;
        let labels = LabelMaps::from_lists(r.strings()?, r.strings()?)?;
        let vocab = Vocabulary::from_tokens(r.strings()?)?;
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        if vocab.len() != v || labels.num_intents() != i || labels.num_slots() != s {
            return Err(Error::Checkpoint("header sizes disagree with the stored tables".into()));
        }

        let defaults = ModelConfig::default();
        let config = ModelConfig {
            embed_dim: d,
            num_filters: c,
            kernel_size: k,
            dropout: defaults.dropout,
            alpha,
            max_seq_len: defaults.max_seq_len.max(k),
            task,
        };
        JointModel::from_parts(
            config,
            Arc::new(embeddings),
            conv_weight,
            conv_bias,
            intent_head,
            slot_head,
            Arc::new(vocab),
            Arc::new(labels),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::tiny_model;

    #[test]
    fn round_trip_preserves_weights() {
        for task in [TaskMode::Joint, TaskMode::Intent, TaskMode::Slot] {
            let (model, _) = tiny_model(task, 4, 3);
            let bytes = model.to_bytes();
            let mut back = JointModel::from_bytes(&bytes).unwrap();
            back.set_runtime(model.config.dropout, model.config.max_seq_len).unwrap();
            assert_eq!(back, model);
            assert_eq!(back.to_bytes(), bytes);
        }
    }

    #[test]
    fn header_layout() {
        let (model, _) = tiny_model(TaskMode::Intent, 4, 3);
        let bytes = model.to_bytes();
        assert_eq!(&bytes[..4], b"CNLU");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        let field = |n: usize| u32::from_le_bytes(bytes[8 + 4 * n..12 + 4 * n].try_into().unwrap()) as usize;
        assert_eq!(field(0), 6);
        assert_eq!(field(1), 4);
        assert_eq!(field(2), 3);
        assert_eq!(field(3), model.vocab.len());
        assert_eq!(field(6), 0);
    }

    #[test]
    fn same_seed_same_bytes() {
        let (a, _) = tiny_model(TaskMode::Joint, 4, 5);
        let (b, _) = tiny_model(TaskMode::Joint, 4, 5);
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    #[test]
    fn rejects_corruption() {
        let (model, _) = tiny_model(TaskMode::Joint, 4, 3);
        let bytes = model.to_bytes();
        assert!(matches!(JointModel::from_bytes(&bytes[..bytes.len() - 1]), Err(Error::Checkpoint(_))));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(JointModel::from_bytes(&bad), Err(Error::Checkpoint(_))));
        let mut long = bytes;
        long.push(0);
        assert!(JointModel::from_bytes(&long).is_err());
    }
}
