//! Intent accuracy, chunk-level slot F1 and prediction-flip analysis.
//!
//! Chunking follows the conlleval state machine for IOB tags: a chunk opens
//! at `B-x`, or at `I-x` when the previous tag is `O` or of another type, and
//! closes before `O`, before any `B-`, or on a type change.

mod flips;

use crate::error::{Error, Result};

pub use flips::{flip_analysis, FlipKind, FlipRecord, FlipReport, FlipTask};

pub fn intent_accuracy(preds: &[usize], gold: &[usize]) -> Result<f64> {
    if preds.len() != gold.len() {
        return Err(Error::dim("intent_accuracy", "samples", gold.len(), preds.len()));
    }
    if gold.is_empty() {
        return Err(Error::EmptySequence("intent_accuracy"));
    }
    let correct = preds.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(correct as f64 / gold.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Chunk {
    pub kind: String,
    pub start: usize,
    /// Inclusive.
    pub end: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tag<'a> {
    Outside,
    Begin(&'a str),
    Inside(&'a str),
}

fn parse_tag(tag: &str) -> Result<Tag<'_>> {
    if tag == "O" {
        return Ok(Tag::Outside);
    }
    let (prefix, kind) = tag.split_once('-').ok_or_else(|| Error::TagFormat(tag.to_owned()))?;
    if kind.is_empty() {
        return Err(Error::TagFormat(tag.to_owned()));
    }
    match prefix {
        "B" => Ok(Tag::Begin(kind)),
        "I" => Ok(Tag::Inside(kind)),
        _ => Err(Error::TagFormat(tag.to_owned())),
    }
}

/// Chunks of one IOB-tagged sequence in order of position.
pub fn extract_chunks<S: AsRef<str>>(tags: &[S]) -> Result<Vec<Chunk>> {
    let mut chunks = Vec::new();
    let mut open: Option<(&str, usize)> = None;
    for (i, raw) in tags.iter().enumerate() {
        let tag = parse_tag(raw.as_ref())?;
        let continues = matches!((tag, open), (Tag::Inside(k), Some((open_kind, _))) if k == open_kind);
        if continues {
            continue;
        }
        if let Some((kind, start)) = open.take() {
            chunks.push(Chunk {
                kind: kind.to_owned(),
                start,
                end: i - 1,
            });
        }
        match tag {
            Tag::Begin(k) | Tag::Inside(k) => open = Some((k, i)),
            Tag::Outside => {}
        }
    }
    if let Some((kind, start)) = open {
        chunks.push(Chunk {
            kind: kind.to_owned(),
            start,
            end: tags.len() - 1,
        });
    }
    Ok(chunks)
}

/// Micro-averaged chunk precision, recall and F1.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SlotScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl SlotScores {
    pub fn from_counts(matched: usize, predicted: usize, gold: usize) -> Self {
        let precision = if predicted == 0 { 0.0 } else { matched as f64 / predicted as f64 };
        let recall = if gold == 0 { 0.0 } else { matched as f64 / gold as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
            matched,
            predicted,
            gold,
        }
    }
}

/// Counts chunks matching in both type and span across aligned utterances.
pub fn slot_f1<S: AsRef<str>>(pred: &[Vec<S>], gold: &[Vec<S>]) -> Result<SlotScores> {
    if pred.len() != gold.len() {
        return Err(Error::dim("slot_f1", "utterances", gold.len(), pred.len()));
    }
    let (mut matched, mut predicted, mut gold_total) = (0, 0, 0);
    for (p, g) in pred.iter().zip(gold) {
        if p.len() != g.len() {
            return Err(Error::dim("slot_f1", "tags in utterance", g.len(), p.len()));
        }
        let pc = extract_chunks(p)?;
        let gc = extract_chunks(g)?;
        matched += pc.iter().filter(|c| gc.contains(c)).count();
        predicted += pc.len();
        gold_total += gc.len();
    }
    Ok(SlotScores::from_counts(matched, predicted, gold_total))
}

/// Headline numbers for one model on one split.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunMetrics {
    pub intent_accuracy: Option<f64>,
    pub slot: Option<SlotScores>,
    pub params: usize,
    pub latency_ms: Option<f64>,
}

impl RunMetrics {
    pub fn slot_f1(&self) -> Option<f64> {
        self.slot.map(|s| s.f1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    fn chunk(kind: &str, start: usize, end: usize) -> Chunk {
        Chunk {
            kind: kind.into(),
            start,
            end,
        }
    }

    #[test]
    fn accuracy_cases() {
        assert_eq!(intent_accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(intent_accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
        let gold = vec![0usize; 893];
        let mut preds = gold.clone();
        preds[848..].fill(1);
        let acc = intent_accuracy(&preds, &gold).unwrap();
        assert!((acc * 100.0 - 94.96).abs() < 0.005, "{acc}");
        assert!(matches!(intent_accuracy(&[1], &[1, 2]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn chunk_cases() {
        assert_eq!(extract_chunks(&tags("B-loc I-loc O")).unwrap(), vec![chunk("loc", 0, 1)]);
        assert!(extract_chunks(&tags("O O O")).unwrap().is_empty());
        assert_eq!(
            extract_chunks(&tags("I-loc B-loc")).unwrap(),
            vec![chunk("loc", 0, 0), chunk("loc", 1, 1)]
        );
        assert_eq!(
            extract_chunks(&tags("B-a I-b I-b O I-a")).unwrap(),
            vec![chunk("a", 0, 0), chunk("b", 1, 2), chunk("a", 4, 4)]
        );
    }

    #[test]
    fn malformed_tags() {
        for bad in ["X-loc", "B-", "loc", "b-loc"] {
            assert!(matches!(extract_chunks(&[bad]), Err(Error::TagFormat(_))), "{bad}");
        }
    }

    #[test]
    fn f1_cases() {
        let gold = vec![tags("B-a I-a O B-b")];
        assert_eq!(slot_f1(&gold, &gold).unwrap().f1, 1.0);

        let pred = vec![tags("B-a I-a O B-a")];
        let s = slot_f1(&pred, &gold).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.5, 0.5, 0.5));

        let none = vec![tags("O O O O")];
        let s = slot_f1(&none, &gold).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));

        assert!(slot_f1(&[tags("O")], &gold).is_err());
    }

    #[test]
    fn trailing_truncation_keeps_earlier_chunks() {
        let full = tags("B-a I-a O B-b O O");
        let cut = &full[..4];
        assert_eq!(extract_chunks(&full).unwrap(), extract_chunks(cut).unwrap());
    }
}
