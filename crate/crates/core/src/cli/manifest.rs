use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::data::{split_dirs, SPLIT_FILES};
use crate::error::Result;

/// Key/value record of one command invocation: argv, every resolved
/// setting, input checksums, version, timestamps and outputs.
#[derive(Clone, Debug)]
pub struct RunManifest {
    command: String,
    entries: Vec<(String, String)>,
    outputs: Vec<PathBuf>,
    started: f64,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Tabs and newlines would break the record format.
fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String]) -> Self {
        let mut m = Self {
            command: command.to_owned(),
            entries: Vec::new(),
            outputs: Vec::new(),
            started: unix_now(),
        };
        m.set("command", command);
        m.set("argv", argv.join(" "));
        m.set("version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_owned(), clean(&value.to_string())));
    }

    /// Records a checksum for each file of each split under `root`.
    pub fn checksum_dataset(&mut self, root: &Path) -> Result<()> {
        for dir in split_dirs(root)? {
            for name in SPLIT_FILES {
                let path = dir.join(name);
                let rel = path.strip_prefix(root).unwrap_or(&path).display().to_string();
                let digest = sha256_file(&path)?;
                self.set(&format!("sha256:{rel}"), digest);
            }
        }
        Ok(())
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) {
        self.outputs.push(path.into());
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("key\tvalue\n");
        for (k, v) in &self.entries {
            s.push_str(&format!("{k}\t{v}\n"));
        }
        for o in &self.outputs {
            s.push_str(&format!("output\t{}\n", clean(&o.display().to_string())));
        }
        s.push_str(&format!("started_unix\t{:.3}\n", self.started));
        s.push_str(&format!("finished_unix\t{:.3}\n", unix_now()));
        s
    }

    /// Writes `<command>_manifest.tsv` into `dir` and returns its path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}_manifest.tsv", self.command));
        fs::write(&path, self.to_tsv())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_are_tab_separated_pairs() {
        let mut m = RunManifest::new("train", &["cnlu".into(), "train".into()]);
        m.set("alpha", 0.2);
        m.set("odd", "a\tb\nc");
        m.output("out/model.ckpt");
        let text = m.to_tsv();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("key\tvalue"));
        assert!(lines.all(|l| l.split('\t').count() == 2));
        assert!(text.contains("odd\ta b c"));
        assert!(text.contains("output\tout/model.ckpt"));
    }

    #[test]
    fn sha256_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
