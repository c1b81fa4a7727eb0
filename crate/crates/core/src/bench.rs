//! Batch-1 CPU latency measurement.

use std::hint::black_box;
use std::time::Instant;

use crate::data::EncodedExample;
use crate::error::{Error, Result};
use crate::model::{InferenceScratch, JointModel};

pub const DEFAULT_WARMUP: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct LatencyReport {
    /// Mean milliseconds per sample over the measured passes.
    pub mean_ms: f64,
    pub std_ms: f64,
    pub batch_size: usize,
    pub warmup: usize,
    pub samples: usize,
    pub hardware: String,
}

impl LatencyReport {
    pub fn to_tsv(&self) -> String {
        format!(
            "mean_ms\tstd_ms\tbatch_size\twarmup\tsamples\thardware\n{:.6}\t{:.6}\t{}\t{}\t{}\t{}\n",
            self.mean_ms, self.std_ms, self.batch_size, self.warmup, self.samples, self.hardware
        )
    }
}

/// CPU model name where the OS exposes one, otherwise the architecture.
pub fn hardware_description() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo").ok().and_then(|info| {
        info.lines()
            .find(|l| l.starts_with("model name"))
            .and_then(|l| l.split_once(':'))
            .map(|(_, v)| v.trim().to_owned())
    });
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{} ({}, {threads} hw threads, single-threaded run)",
        cpu.unwrap_or_else(|| "unknown cpu".into()),
        std::env::consts::ARCH
    )
}

/// Runs `warmup` discarded passes, then times one forward pass per example
/// on the calling thread. Only the forward call sits inside the timer.
pub fn benchmark(model: &JointModel, examples: &[EncodedExample], warmup: usize) -> Result<LatencyReport> {
    if examples.is_empty() {
        return Err(Error::Data("cannot benchmark on an empty test split".into()));
    }
    let mut scratch = InferenceScratch::new(model);
    for ex in examples.iter().cycle().take(warmup) {
        black_box(model.predict(ex, &mut scratch)?.intent_logits);
    }
    let mut times = Vec::with_capacity(examples.len());
    for ex in examples {
        let start = Instant::now();
        let p = model.predict(black_box(ex), &mut scratch)?;
        black_box((p.intent_logits, p.slot_logits));
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    Ok(LatencyReport {
        mean_ms: mean,
        std_ms: var.sqrt(),
        batch_size: 1,
        warmup,
        samples: times.len(),
        hardware: hardware_description(),
    })
}
