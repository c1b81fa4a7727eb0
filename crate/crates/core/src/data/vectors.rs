use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::vocab::{Vocabulary, PAD};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const INIT_STD: f32 = 0.1;

/// How many regular vocabulary entries (PAD and UNK excluded) were found in
/// the vector file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Coverage {
    pub covered: usize,
    pub uncovered: usize,
}

impl Coverage {
    pub fn fraction(&self) -> f64 {
        let total = self.covered + self.uncovered;
        if total == 0 {
            0.0
        } else {
            self.covered as f64 / total as f64
        }
    }
}

/// Seeded `normal(0, 0.1)` rows with an all-zero PAD row.
pub fn random_embeddings(vocab_size: usize, dim: usize, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0f32, INIT_STD).unwrap();
    let mut t = Tensor::from_fn(&[vocab_size, dim], |_| normal.sample(&mut rng));
    t.row_mut(PAD).fill(0.0);
    t
}

/// Reads a line-oriented `token v1 ... vd` file and copies the rows of
/// in-vocabulary tokens over a seeded random initialisation. A leading
/// `count dim` header line is skipped.
pub fn load_word_vectors(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
) -> Result<(Tensor, Coverage)> {
    let path = path.as_ref();
    let mut table = random_embeddings(vocab.len(), dim, seed);
    let mut seen = vec![false; vocab.len()];
    let reader = BufReader::new(File::open(path)?);
    let mut file_dim: Option<usize> = None;

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();

        if i == 0 && values.len() == 1 && token.parse::<usize>().is_ok() && values[0].parse::<usize>().is_ok() {
            continue;
        }
        match file_dim {
            None => {
                if values.len() != dim {
                    return Err(Error::Config(format!(
                        "{} has {}-dimensional vectors but embedding width is {dim}",
                        path.display(),
                        values.len()
                    )));
                }
                file_dim = Some(values.len());
            }
            Some(expected) if values.len() != expected => {
                return Err(Error::format(
                    path,
                    lineno,
                    format!("expected {expected} values after the token, found {}", values.len()),
                ));
            }
            Some(_) => {}
        }

        if !vocab.contains(token) {
            continue;
        }
        let id = vocab.id(token);
        if id == PAD || seen[id] {
            continue;
        }
        let row = table.row_mut(id);
        for (slot, raw) in row.iter_mut().zip(&values) {
            *slot = raw
                .parse::<f32>()
                .map_err(|e| Error::format(path, lineno, format!("bad value {raw:?}: {e}")))?;
        }
        seen[id] = true;
    }

    let covered = seen.iter().skip(2).filter(|&&s| s).count();
    let coverage = Coverage {
        covered,
        uncovered: vocab.len().saturating_sub(2) - covered,
    };
    Ok((table, coverage))
}

#[cfg(test)]
mod tests {
    use std::fs;

    use super::*;
    use crate::data::RawExample;

    fn vocab(words: &str) -> Vocabulary {
        let tokens: Vec<String> = words.split(' ').map(str::to_owned).collect();
        let tags = vec!["O".to_owned(); tokens.len()];
        Vocabulary::build(&[RawExample::new(tokens, tags, "i").unwrap()], 1).unwrap()
    }

    #[test]
    fn copies_covered_rows() {
        let tmp = tempfile::NamedTempFile::new().unwrap();
        fs::write(tmp.path(), "hello 0.1 0.2\nother 1 1\n").unwrap();
        let v = vocab("hello world");
        let (t, cov) = load_word_vectors(tmp.path(), &v, 2, 3).unwrap();
        assert_eq!(t.row(v.id("hello")), &[0.1, 0.2]);
        assert_eq!(cov, Coverage { covered: 1, uncovered: 1 });
    }

    #[test]
    fn pad_row_is_zero_even_if_listed() {
        let tmp = tempfile::NamedTempFile::new().unwrap();
        fs::write(tmp.path(), "<pad> 5 5\n").unwrap();
        let (t, _) = load_word_vectors(tmp.path(), &vocab("a"), 2, 3).unwrap();
        assert_eq!(t.row(PAD), &[0.0, 0.0]);
    }

    #[test]
    fn uncovered_rows_are_seeded() {
        let tmp = tempfile::NamedTempFile::new().unwrap();
        fs::write(tmp.path(), "zzz 0 0\n").unwrap();
        let v = vocab("a b c");
        let (a, cov) = load_word_vectors(tmp.path(), &v, 2, 11).unwrap();
        let (b, _) = load_word_vectors(tmp.path(), &v, 2, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(cov.covered, 0);
        assert!(a.row(2).iter().any(|&x| x != 0.0));
    }

    #[test]
    fn skips_word2vec_header() {
        let tmp = tempfile::NamedTempFile::new().unwrap();
        fs::write(tmp.path(), "2 2\na 1 2\nb 3 4\n").unwrap();
        let v = vocab("a b");
        let (t, cov) = load_word_vectors(tmp.path(), &v, 2, 0).unwrap();
        assert_eq!(t.row(v.id("b")), &[3.0, 4.0]);
        assert_eq!(cov.covered, 2);
    }

    #[test]
    fn wrong_arity_reports_line() {
        let tmp = tempfile::NamedTempFile::new().unwrap();
        fs::write(tmp.path(), "a 1 2\nb 3\n").unwrap();
        match load_word_vectors(tmp.path(), &vocab("a b"), 2, 0) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let tmp = tempfile::NamedTempFile::new().unwrap();
        fs::write(tmp.path(), "a 1 2 3\n").unwrap();
        assert!(matches!(load_word_vectors(tmp.path(), &vocab("a"), 2, 0), Err(Error::Config(_))));
    }
}
