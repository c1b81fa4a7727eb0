//! Side-by-side table of a pruning curve and a distillation curve.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::pruning::SparsityCurvePoint;

/// Rates closer than this are treated as the same grid point.
const RATE_RESOLUTION: f64 = 1e-4;

fn key(rate: f64) -> i64 {
    (rate / RATE_RESOLUTION).round() as i64
}

fn find(curve: &[SparsityCurvePoint], rate: f64) -> Option<&SparsityCurvePoint> {
    curve.iter().find(|p| key(p.compression_rate) == key(rate))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub compression_rate: f64,
    pub pruned: Option<SparsityCurvePoint>,
    pub distilled: Option<SparsityCurvePoint>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Comparison {
    pub rows: Vec<CompareRow>,
    /// Rates present in one curve but not the other.
    pub warnings: Vec<String>,
}

type Metric = fn(&SparsityCurvePoint) -> Option<f64>;

const INTENT: Metric = |p| p.intent_accuracy;
const SLOT: Metric = |p| p.slot_f1;

impl Comparison {
    /// Rows follow `grid` when given, otherwise the union of both curves.
    /// A `baseline` point fills the 0% row of whichever curve lacks one.
    pub fn build(
        pruned: &[SparsityCurvePoint],
        distilled: &[SparsityCurvePoint],
        baseline: Option<&SparsityCurvePoint>,
        grid: Option<&[f64]>,
    ) -> Self {
        let mut warnings = Vec::new();
        let rates: Vec<f64> = match grid {
            Some(g) => g.to_vec(),
            None => {
                let mut keys = BTreeSet::new();
                keys.extend(pruned.iter().map(|p| key(p.compression_rate)));
                keys.extend(distilled.iter().map(|p| key(p.compression_rate)));
                if baseline.is_some() {
                    keys.insert(0);
                }
                keys.into_iter().map(|k| k as f64 * RATE_RESOLUTION).collect()
            }
        };
        let zero = |p: Option<&SparsityCurvePoint>, rate: f64| {
            p.cloned().or_else(|| (key(rate) == 0).then(|| baseline.cloned()).flatten())
        };
        let rows = rates
            .iter()
            .map(|&rate| {
                let p = zero(find(pruned, rate), rate);
                let d = zero(find(distilled, rate), rate);
                match (&p, &d) {
                    (Some(_), None) => warnings.push(format!("{:.1}%: no distillation point", rate * 100.0)),
                    (None, Some(_)) => warnings.push(format!("{:.1}%: no pruning point", rate * 100.0)),
                    (None, None) => warnings.push(format!("{:.1}%: absent from both curves", rate * 100.0)),
                    _ => {}
                }
                CompareRow {
                    compression_rate: rate,
                    pruned: p,
                    distilled: d,
                }
            })
            .collect();
        Self { rows, warnings }
    }

    fn reference(&self, pick: fn(&CompareRow) -> Option<&SparsityCurvePoint>, metric: Metric) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| key(r.compression_rate) == 0)
            .and_then(pick)
            .and_then(metric)
    }

    /// Change of `metric` relative to the 0% row of the same method.
    pub fn delta(&self, row: &CompareRow, pruned: bool, metric: Metric) -> Option<f64> {
        let pick: fn(&CompareRow) -> Option<&SparsityCurvePoint> =
            if pruned { |r| r.pruned.as_ref() } else { |r| r.distilled.as_ref() };
        let value = pick(row).and_then(metric)?;
        Some(value - self.reference(pick, metric)?)
    }

    /// Plot-ready records, one per (rate, method) present.
    pub fn to_tsv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |x| format!("{x:.6}"));
        let mut s = String::from("compression_rate\tmethod\tfilters\tparams\tintent_acc\tslot_f1\tintent_delta\tslot_delta\n");
        for row in &self.rows {
            for (name, point, pruned) in [("pruning", &row.pruned, true), ("distillation", &row.distilled, false)] {
                if let Some(p) = point {
                    let _ = writeln!(
                        s,
                        "{:.4}\t{name}\t{}\t{}\t{}\t{}\t{}\t{}",
                        row.compression_rate,
                        p.filters_remaining,
                        p.params,
                        opt(p.intent_accuracy),
                        opt(p.slot_f1),
                        opt(self.delta(row, pruned, INTENT)),
                        opt(self.delta(row, pruned, SLOT)),
                    );
                }
            }
        }
        s
    }

    /// Fixed-width text table in percent, each cell followed by its delta.
    pub fn to_table(&self) -> String {
        let cell = |row: &CompareRow, pruned: bool, metric: Metric| -> String {
            let point = if pruned { &row.pruned } else { &row.distilled };
            match point.as_ref().and_then(metric) {
                None => "absent".into(),
                Some(v) => match self.delta(row, pruned, metric) {
                    Some(d) => format!("{:.2} ({:+.2})", v * 100.0, d * 100.0),
                    None => format!("{:.2}", v * 100.0),
                },
            }
        };
        let mut s = format!(
            "{:>6} {:>8} {:>16} {:>16} {:>16} {:>16}\n",
            "rate", "params", "prune intent", "prune slot", "distill intent", "distill slot"
        );
        for row in &self.rows {
            let params = row
                .pruned
                .as_ref()
                .or(row.distilled.as_ref())
                .map_or_else(|| "-".to_owned(), |p| p.params.to_string());
            let _ = writeln!(
                s,
                "{:>5.0}% {:>8} {:>16} {:>16} {:>16} {:>16}",
                row.compression_rate * 100.0,
                params,
                cell(row, true, INTENT),
                cell(row, true, SLOT),
                cell(row, false, INTENT),
                cell(row, false, SLOT),
            );
        }
        s
    }
}
