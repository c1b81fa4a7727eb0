use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::data::EncodedExample;
use crate::error::{Error, Result};
use crate::model::{InferenceScratch, JointModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlipTask {
    Intent,
    Slot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlipKind {
    /// Correct before, incorrect after.
    Lost,
    /// Incorrect before, correct after.
    Gained,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlipRecord {
    pub index: usize,
    pub task: FlipTask,
    /// Token position for slot flips.
    pub position: Option<usize>,
    pub kind: FlipKind,
    pub gold: String,
    pub before: String,
    pub after: String,
}

impl FlipRecord {
    pub fn before_correct(&self) -> bool {
        self.kind == FlipKind::Lost
    }

    pub fn after_correct(&self) -> bool {
        self.kind == FlipKind::Gained
    }
}

#[derive(Clone, Debug, Default)]
pub struct FlipReport {
    pub samples: usize,
    pub tokens: usize,
    pub records: Vec<FlipRecord>,
}

const HEADER: &str = "index\ttask\tposition\tbefore_correct\tafter_correct\tgold\tbefore\tafter";

impl FlipReport {
    pub fn lost(&self) -> impl Iterator<Item = &FlipRecord> {
        self.records.iter().filter(|r| r.kind == FlipKind::Lost)
    }

    pub fn gained(&self) -> impl Iterator<Item = &FlipRecord> {
        self.records.iter().filter(|r| r.kind == FlipKind::Gained)
    }

    pub fn lost_count(&self, task: FlipTask) -> usize {
        self.lost().filter(|r| r.task == task).count()
    }

    pub fn gained_count(&self, task: FlipTask) -> usize {
        self.gained().filter(|r| r.task == task).count()
    }

    /// Correct-to-incorrect flips grouped by gold label.
    pub fn lost_by_gold(&self, task: FlipTask) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for r in self.lost().filter(|r| r.task == task) {
            *out.entry(r.gold.clone()).or_default() += 1;
        }
        out
    }

    /// Correct-to-incorrect flips grouped by what the second model predicted.
    pub fn lost_by_after(&self, task: FlipTask) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for r in self.lost().filter(|r| r.task == task) {
            *out.entry(r.after.clone()).or_default() += 1;
        }
        out
    }

    /// Most frequent post-flip slot prediction; ties resolve to the
    /// lexicographically smallest tag.
    pub fn modal_lost_slot_prediction(&self) -> Option<(String, usize)> {
        let counts = self.lost_by_after(FlipTask::Slot);
        let max = *counts.values().max()?;
        counts.into_iter().find(|&(_, c)| c == max)
    }

    /// One line per correct-to-incorrect flip under a header line.
    pub fn records_tsv(&self) -> String {
        let mut s = String::from(HEADER);
        s.push('\n');
        for r in self.lost() {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.index,
                match r.task {
                    FlipTask::Intent => "intent",
                    FlipTask::Slot => "slot",
                },
                r.position.map_or_else(|| "-".to_owned(), |p| p.to_string()),
                r.before_correct(),
                r.after_correct(),
                r.gold,
                r.before,
                r.after,
            );
        }
        s
    }

    /// Aggregate counts, including the incorrect-to-correct flips that the
    /// record file leaves out.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "samples\t{}", self.samples);
        let _ = writeln!(s, "slot_tokens\t{}", self.tokens);
        for (task, name) in [(FlipTask::Intent, "intent"), (FlipTask::Slot, "slot")] {
            let _ = writeln!(s, "{name}_correct_to_incorrect\t{}", self.lost_count(task));
            let _ = writeln!(s, "{name}_incorrect_to_correct\t{}", self.gained_count(task));
        }
        let to_outside = self.lost().filter(|r| r.task == FlipTask::Slot && r.after == "O").count();
        let _ = writeln!(s, "slot_flips_to_O\t{to_outside}");
        if let Some((tag, n)) = self.modal_lost_slot_prediction() {
            let _ = writeln!(s, "slot_modal_after_prediction\t{tag}\t{n}");
        }
        for (task, name) in [(FlipTask::Intent, "intent"), (FlipTask::Slot, "slot")] {
            for (gold, n) in self.lost_by_gold(task) {
                let _ = writeln!(s, "{name}_by_gold\t{gold}\t{n}");
            }
        }
        s
    }

    pub fn write(&self, records: impl AsRef<Path>, summary: impl AsRef<Path>) -> Result<()> {
        fs::write(records, self.records_tsv())?;
        fs::write(summary, self.summary())?;
        Ok(())
    }
}

/// Evaluates both models on every example and records which predictions
/// changed correctness, for intents and for each valid slot token.
pub fn flip_analysis(before: &JointModel, after: &JointModel, test: &[EncodedExample]) -> Result<FlipReport> {
    if before.labels() != after.labels() {
        return Err(Error::Config("models use different label maps".into()));
    }
    let labels = before.labels().clone();
    let mut sb = InferenceScratch::new(before);
    let mut sa = InferenceScratch::new(after);
    let mut report = FlipReport {
        samples: test.len(),
        ..Default::default()
    };

    let mut push = |index, task, position, gold: usize, b: usize, a: usize, name: &dyn Fn(usize) -> String| {
        let kind = match (b == gold, a == gold) {
            (true, false) => FlipKind::Lost,
            (false, true) => FlipKind::Gained,
            _ => return,
        };
        report.records.push(FlipRecord {
            index,
            task,
            position,
            kind,
            gold: name(gold),
            before: name(b),
            after: name(a),
        });
    };
    let intent_name = |i: usize| labels.intent(i).to_owned();
    let slot_name = |i: usize| labels.slot(i).to_owned();

    let mut tokens = 0;
    for (index, ex) in test.iter().enumerate() {
        let pb = before.predict(ex, &mut sb)?;
        let (bi, bs) = (pb.intent(), pb.slots());
        let pa = after.predict(ex, &mut sa)?;
        let (ai, as_) = (pa.intent(), pa.slots());
        if let (Some(b), Some(a)) = (bi, ai) {
            push(index, FlipTask::Intent, None, ex.intent, b, a, &intent_name);
        }
        if let (Some(b), Some(a)) = (bs, as_) {
            for (t, &gold) in ex.valid_slots().iter().enumerate() {
                push(index, FlipTask::Slot, Some(t), gold, b[t], a[t], &slot_name);
            }
            tokens += ex.valid_len;
        }
    }
    report.tokens = tokens;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::tiny_model;
    use crate::model::TaskMode;

    #[test]
    fn identical_models_never_flip() {
        let (model, examples) = tiny_model(TaskMode::Joint, 4, 1);
        let report = flip_analysis(&model, &model, &examples).unwrap();
        assert!(report.records.is_empty());
        assert_eq!(report.records_tsv().lines().count(), 1);
    }

    #[test]
    fn majority_predictor_flips_every_correct_minority_sample() {
        let (before, examples) = tiny_model(TaskMode::Intent, 4, 2);
        // Force the second model to always predict intent `majority`.
        let mut after = before.clone();
        let majority = 0;
        let head = after.intent_head.as_mut().unwrap();
        head.weight.data_mut().fill(0.0);
        head.bias.data_mut().fill(0.0);
        head.bias.data_mut()[majority] = 1.0;

        let mut scratch = InferenceScratch::new(&before);
        let expected = examples
            .iter()
            .filter(|ex| {
                let p = before.predict(ex, &mut scratch).unwrap().intent().unwrap();
                p == ex.intent && ex.intent != majority
            })
            .count();
        let report = flip_analysis(&before, &after, &examples).unwrap();
        assert_eq!(report.lost_count(FlipTask::Intent), expected);
        assert_eq!(report.records_tsv().lines().count(), 1 + report.lost().count());
    }

    #[test]
    fn label_mismatch_is_config_error() {
        let (a, examples) = tiny_model(TaskMode::Joint, 4, 1);
        let mut b = a.clone();
        let mut intents = a.labels().intents().to_vec();
        intents.push("zz_extra".into());
        b.labels = std::sync::Arc::new(crate::data::LabelMaps::from_lists(intents, a.labels().slots().to_vec()).unwrap());
        assert!(matches!(flip_analysis(&a, &b, &examples), Err(Error::Config(_))));
    }
}
