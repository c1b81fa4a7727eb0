//! Dataset ingestion for the three-parallel-file layout
//! (`seq.in` / `seq.out` / `label` per split directory), vocabularies,
//! word vectors and fixed-length encoding.

mod encode;
pub mod synth;
mod vectors;
mod vocab;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Result};

pub use encode::{encode, encode_split, EncodeStats, EncodedExample, LabelMaps, IGNORE_SLOT};
pub use vectors::{load_word_vectors, random_embeddings, Coverage};
pub use vocab::{Vocabulary, PAD, PAD_TOKEN, UNK, UNK_TOKEN};

/// One utterance with its per-token IOB tags and intent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawExample {
    pub tokens: Vec<String>,
    pub slot_tags: Vec<String>,
    pub intent: String,
}

impl RawExample {
    pub fn new(tokens: Vec<String>, slot_tags: Vec<String>, intent: impl Into<String>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::EmptySequence("utterance"));
        }
        if tokens.len() != slot_tags.len() {
            return Err(Error::dim("RawExample", "slot tags", tokens.len(), slot_tags.len()));
        }
        Ok(Self {
            tokens,
            slot_tags,
            intent: intent.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Clone, Debug, Default)]
pub struct DatasetSplits {
    pub train: Vec<RawExample>,
    pub dev: Vec<RawExample>,
    pub test: Vec<RawExample>,
}

impl DatasetSplits {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.dev.len(), self.test.len())
    }

    pub fn all(&self) -> impl Iterator<Item = &RawExample> {
        self.train.iter().chain(&self.dev).chain(&self.test)
    }
}

pub const SPLIT_FILES: [&str; 3] = ["seq.in", "seq.out", "label"];

/// Directory names accepted for the validation split.
const DEV_NAMES: [&str; 3] = ["dev", "valid", "validation"];

/// Locates the `train`, dev and `test` directories under `root`.
pub fn split_dirs(root: &Path) -> Result<[PathBuf; 3]> {
    let train = root.join("train");
    let test = root.join("test");
    let dev = DEV_NAMES
        .iter()
        .map(|n| root.join(n))
        .find(|p| p.is_dir());
    match (train.is_dir(), dev, test.is_dir()) {
        (true, Some(dev), true) => Ok([train, dev, test]),
        _ => Err(Error::Layout(format!(
            "{} must contain train/, dev/ (or valid/) and test/ directories",
            root.display()
        ))),
    }
}

pub fn load_dataset(root: impl AsRef<Path>) -> Result<DatasetSplits> {
    let [train, dev, test] = split_dirs(root.as_ref())?;
    Ok(DatasetSplits {
        train: load_split(&train)?,
        dev: load_split(&dev)?,
        test: load_split(&test)?,
    })
}

/// Parses one split directory. Lines are aligned across the three files and
/// each `seq.in` line must have as many tokens as its `seq.out` line.
pub fn load_split(dir: impl AsRef<Path>) -> Result<Vec<RawExample>> {
    let dir = dir.as_ref();
    let read = |name: &str| -> Result<(PathBuf, String)> {
        let path = dir.join(name);
        if !path.is_file() {
            return Err(Error::Layout(format!("missing {}", path.display())));
        }
        let text = fs::read_to_string(&path)?;
        Ok((path, text))
    };
    let (in_path, seq_in) = read(SPLIT_FILES[0])?;
    let (out_path, seq_out) = read(SPLIT_FILES[1])?;
    let (label_path, labels) = read(SPLIT_FILES[2])?;

    let in_lines: Vec<&str> = seq_in.lines().collect();
    let out_lines: Vec<&str> = seq_out.lines().collect();
    let label_lines: Vec<&str> = labels.lines().collect();
    if out_lines.len() != in_lines.len() {
        let line = in_lines.len().min(out_lines.len()) + 1;
        return Err(Error::format(
            out_path,
            line,
            format!("{} lines in seq.in but {} in seq.out", in_lines.len(), out_lines.len()),
        ));
    }
    if label_lines.len() != in_lines.len() {
        let line = in_lines.len().min(label_lines.len()) + 1;
        return Err(Error::format(
            label_path,
            line,
            format!("{} lines in seq.in but {} in label", in_lines.len(), label_lines.len()),
        ));
    }

    let mut out = Vec::with_capacity(in_lines.len());
    for (i, ((words, tags), intent)) in in_lines.iter().zip(&out_lines).zip(&label_lines).enumerate() {
        let tokens: Vec<String> = words.split_whitespace().map(str::to_owned).collect();
        let slot_tags: Vec<String> = tags.split_whitespace().map(str::to_owned).collect();
        if tokens.is_empty() {
            return Err(Error::format(&in_path, i + 1, "empty utterance"));
        }
        if tokens.len() != slot_tags.len() {
            return Err(Error::format(
                &out_path,
                i + 1,
                format!("{} tokens but {} slot tags", tokens.len(), slot_tags.len()),
            ));
        }
        let intent = intent.trim();
        if intent.is_empty() {
            return Err(Error::format(&label_path, i + 1, "empty intent label"));
        }
        out.push(RawExample {
            tokens,
            slot_tags,
            intent: intent.to_owned(),
        });
    }
    Ok(out)
}

/// Writes a split in the three-file layout.
pub fn write_split(dir: impl AsRef<Path>, examples: &[RawExample]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut seq_in = String::new();
    let mut seq_out = String::new();
    let mut label = String::new();
    for ex in examples {
        seq_in.push_str(&ex.tokens.join(" "));
        seq_in.push('\n');
        seq_out.push_str(&ex.slot_tags.join(" "));
        seq_out.push('\n');
        label.push_str(&ex.intent);
        label.push('\n');
    }
    fs::write(dir.join("seq.in"), seq_in)?;
    fs::write(dir.join("seq.out"), seq_out)?;
    fs::write(dir.join("label"), label)?;
    Ok(())
}

pub fn write_dataset(root: impl AsRef<Path>, splits: &DatasetSplits) -> Result<()> {
    let root = root.as_ref();
    write_split(root.join("train"), &splits.train)?;
    write_split(root.join("dev"), &splits.dev)?;
    write_split(root.join("test"), &splits.test)?;
    Ok(())
}

/// Encoded splits plus the vocabulary and label maps they were encoded with.
#[derive(Clone, Debug)]
pub struct EncodedSplits {
    pub vocab: Arc<Vocabulary>,
    pub labels: Arc<LabelMaps>,
    pub train: Vec<EncodedExample>,
    pub dev: Vec<EncodedExample>,
    pub test: Vec<EncodedExample>,
    pub truncated: usize,
}

impl EncodedSplits {
    /// Builds the vocabulary from the training split and the label maps from
    /// every split, then encodes all three.
    pub fn prepare(splits: &DatasetSplits, min_count: usize, max_seq_len: usize) -> Result<Self> {
        let vocab = Arc::new(Vocabulary::build(&splits.train, min_count)?);
        let labels = Arc::new(LabelMaps::build(splits.all()));
        Self::with_maps(splits, vocab, labels, max_seq_len)
    }

    /// Encodes with existing maps, e.g. those stored in a checkpoint.
    pub fn with_maps(
        splits: &DatasetSplits,
        vocab: Arc<Vocabulary>,
        labels: Arc<LabelMaps>,
        max_seq_len: usize,
    ) -> Result<Self> {
        let (train, a) = encode_split(&splits.train, &vocab, &labels, max_seq_len)?;
        let (dev, b) = encode_split(&splits.dev, &vocab, &labels, max_seq_len)?;
        let (test, c) = encode_split(&splits.test, &vocab, &labels, max_seq_len)?;
        Ok(Self {
            vocab,
            labels,
            train,
            dev,
            test,
            truncated: a.truncated + b.truncated + c.truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, seq_in: &str, seq_out: &str, label: &str) {
        fs::create_dir_all(dir).unwrap();
        fs::write(dir.join("seq.in"), seq_in).unwrap();
        fs::write(dir.join("seq.out"), seq_out).unwrap();
        fs::write(dir.join("label"), label).unwrap();
    }

    #[test]
    fn parses_aligned_split() {
        let tmp = tempfile::tempdir().unwrap();
        write(
            tmp.path(),
            "show flights to boston\nhi\n",
            "O O O B-toloc.city_name\nO\n",
            "atis_flight\natis_greeting\n",
        );
        let split = load_split(tmp.path()).unwrap();
        assert_eq!(split.len(), 2);
        assert_eq!(split[0].tokens[3], "boston");
        assert_eq!(split[0].slot_tags[3], "B-toloc.city_name");
        assert_eq!(split[1].intent, "atis_greeting");
    }

    #[test]
    fn token_tag_mismatch_reports_line() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "a b\na b c d e\n", "O O\nO O O O\n", "x\ny\n");
        match load_split(tmp.path()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn line_count_mismatch() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "a\nb\n", "O\nO\n", "x\n");
        assert!(matches!(load_split(tmp.path()), Err(Error::Format { .. })));
    }

    #[test]
    fn missing_split_is_layout_error() {
        let tmp = tempfile::tempdir().unwrap();
        write(&tmp.path().join("train"), "a\n", "O\n", "x\n");
        assert!(matches!(load_dataset(tmp.path()), Err(Error::Layout(_))));
    }

    #[test]
    fn accepts_valid_as_dev_name() {
        let tmp = tempfile::tempdir().unwrap();
        for split in ["train", "valid", "test"] {
            write(&tmp.path().join(split), "a b\n", "O B-x\n", "i\n");
        }
        assert_eq!(load_dataset(tmp.path()).unwrap().sizes(), (1, 1, 1));
    }
}
