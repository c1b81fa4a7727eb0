use std::collections::HashMap;

use super::RawExample;
use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Dense token ids; `PAD = 0` and `UNK = 1` are always present.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Counts tokens in the training split only. Tokens seen at least
    /// `min_count` times get ids ordered by descending frequency, then
    /// lexicographically.
    pub fn build(train: &[RawExample], min_count: usize) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Data("cannot build a vocabulary from an empty split".into()));
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for ex in train {
            for tok in &ex.tokens {
                *counts.entry(tok.as_str()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = counts.into_iter().filter(|&(_, c)| c >= min_count.max(1)).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Self::from_tokens(
            [PAD_TOKEN, UNK_TOKEN]
                .into_iter()
                .map(str::to_owned)
                .chain(kept.into_iter().map(|(t, _)| t.to_owned()))
                .collect(),
        )
    }

    /// Restores a vocabulary from its id-ordered token list.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[PAD] != PAD_TOKEN || tokens[UNK] != UNK_TOKEN {
            return Err(Error::Data("vocabulary must start with the PAD and UNK tokens".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Self { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Id of `token`, or `UNK` when it is out of vocabulary.
    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}
