use std::collections::{BTreeSet, HashMap};

use super::vocab::{Vocabulary, PAD};
use super::RawExample;
use crate::error::{Error, Result};

/// Slot id stored at padded positions.
pub const IGNORE_SLOT: usize = usize::MAX;

/// Intent and IOB slot inventories.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMaps {
    intents: Vec<String>,
    slots: Vec<String>,
    intent_index: HashMap<String, usize>,
    slot_index: HashMap<String, usize>,
}

impl LabelMaps {
    /// Sorted inventories over every example given; callers pass the union
    /// of all splits so test-only labels still encode.
    pub fn build<'a>(examples: impl IntoIterator<Item = &'a RawExample>) -> Self {
        let mut intents = BTreeSet::new();
        let mut slots = BTreeSet::new();
        for ex in examples {
            intents.insert(ex.intent.clone());
            slots.extend(ex.slot_tags.iter().cloned());
        }
        Self::from_lists(intents.into_iter().collect(), slots.into_iter().collect())
            .expect("sets have no duplicates")
    }

    pub fn from_lists(intents: Vec<String>, slots: Vec<String>) -> Result<Self> {
        let index = |names: &[String], what: &str| -> Result<HashMap<String, usize>> {
            let mut map = HashMap::with_capacity(names.len());
            for (i, n) in names.iter().enumerate() {
                if map.insert(n.clone(), i).is_some() {
                    return Err(Error::Label(format!("duplicate {what} label {n:?}")));
                }
            }
            Ok(map)
        };
        let intent_index = index(&intents, "intent")?;
        let slot_index = index(&slots, "slot")?;
        Ok(Self {
            intents,
            slots,
            intent_index,
            slot_index,
        })
    }

    pub fn num_intents(&self) -> usize {
        self.intents.len()
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn intents(&self) -> &[String] {
        &self.intents
    }

    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    pub fn intent_id(&self, label: &str) -> Result<usize> {
        self.intent_index
            .get(label)
            .copied()
            .ok_or_else(|| Error::Label(format!("unknown intent {label:?}")))
    }

    pub fn slot_id(&self, tag: &str) -> Result<usize> {
        self.slot_index
            .get(tag)
            .copied()
            .ok_or_else(|| Error::Label(format!("unknown slot tag {tag:?}")))
    }

    pub fn intent(&self, id: usize) -> &str {
        &self.intents[id]
    }

    pub fn slot(&self, id: usize) -> &str {
        &self.slots[id]
    }

    /// Id of the outside tag, if present.
    pub fn outside_id(&self) -> Option<usize> {
        self.slot_index.get("O").copied()
    }
}

/// A right-padded utterance of exactly `max_seq_len` positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedExample {
    pub tokens: Vec<usize>,
    pub valid_len: usize,
    pub slots: Vec<usize>,
    pub intent: usize,
}

impl EncodedExample {
    pub fn valid_tokens(&self) -> &[usize] {
        &self.tokens[..self.valid_len]
    }

    pub fn valid_slots(&self) -> &[usize] {
        &self.slots[..self.valid_len]
    }

    pub fn max_seq_len(&self) -> usize {
        self.tokens.len()
    }

    /// Token strings and slot tags of the valid positions.
    pub fn decode(&self, vocab: &Vocabulary, labels: &LabelMaps) -> (Vec<String>, Vec<String>) {
        let tokens = self
            .valid_tokens()
            .iter()
            .map(|&id| vocab.token(id).unwrap_or_default().to_owned())
            .collect();
        let tags = self.valid_slots().iter().map(|&id| labels.slot(id).to_owned()).collect();
        (tokens, tags)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EncodeStats {
    pub examples: usize,
    pub truncated: usize,
}

/// Encodes one utterance; the flag reports whether it was truncated.
pub fn encode(
    raw: &RawExample,
    vocab: &Vocabulary,
    labels: &LabelMaps,
    max_seq_len: usize,
) -> Result<(EncodedExample, bool)> {
    if max_seq_len == 0 {
        return Err(Error::Config("max_seq_len must be at least 1".into()));
    }
    if raw.tokens.is_empty() {
        return Err(Error::EmptySequence("encode"));
    }
    if raw.tokens.len() != raw.slot_tags.len() {
        return Err(Error::dim("encode", "slot tags", raw.tokens.len(), raw.slot_tags.len()));
    }
    let valid_len = raw.tokens.len().min(max_seq_len);
    let mut tokens = vec![PAD; max_seq_len];
    let mut slots = vec![IGNORE_SLOT; max_seq_len];
    for i in 0..valid_len {
        tokens[i] = vocab.id(&raw.tokens[i]);
        slots[i] = labels.slot_id(&raw.slot_tags[i])?;
    }
    let intent = labels.intent_id(&raw.intent)?;
    Ok((
        EncodedExample {
            tokens,
            valid_len,
            slots,
            intent,
        },
        raw.tokens.len() > max_seq_len,
    ))
}

pub fn encode_split(
    raws: &[RawExample],
    vocab: &Vocabulary,
    labels: &LabelMaps,
    max_seq_len: usize,
) -> Result<(Vec<EncodedExample>, EncodeStats)> {
    let mut stats = EncodeStats::default();
    let mut out = Vec::with_capacity(raws.len());
    for raw in raws {
        let (ex, truncated) = encode(raw, vocab, labels, max_seq_len)?;
        stats.examples += 1;
        stats.truncated += truncated as usize;
        out.push(ex);
    }
    Ok((out, stats))
}
