//! Batch-1 CPU latency before and after pruning half of the filters.
//!
//! `cargo run --release --example bench_latency [DATA_DIR]`
//!
//! Latency depends only on the shapes, so an untrained model is enough.

use std::sync::Arc;

use cnlu::bench::{benchmark, DEFAULT_WARMUP};
use cnlu::data::{load_dataset, random_embeddings, synth, EncodedSplits};
use cnlu::pruning::{prune_one_shot, Norm, PruneSchedule};
use cnlu::{JointModel, ModelConfig};

fn main() -> cnlu::Result<()> {
    let raw = match std::env::args().nth(1) {
        Some(dir) => load_dataset(dir)?,
        None => synth::generate(&synth::SynthConfig::default()),
    };
    let data = EncodedSplits::prepare(&raw, 1, 50)?;
    let config = ModelConfig::default();
    let emb = Arc::new(random_embeddings(data.vocab.len(), config.embed_dim, 1));
    let full = JointModel::new(config, emb, data.vocab.clone(), data.labels.clone(), 1)?;
    let half = prune_one_shot(&full, &PruneSchedule::one_shot(Norm::L2, 0.5))?;

    for model in [&full, &half] {
        let r = benchmark(model, &data.test, DEFAULT_WARMUP)?;
        println!(
            "{:>3} filters: {:.4} ± {:.4} ms/sample over {} samples",
            model.num_filters(),
            r.mean_ms,
            r.std_ms,
            r.samples
        );
    }
    println!("{}", cnlu::bench::hardware_description());
    Ok(())
}
