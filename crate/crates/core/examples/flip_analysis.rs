//! Which test predictions does pruning break? Compares an unpruned model
//! with a 90% one-shot pruned copy.
//!
//! `cargo run --release --example flip_analysis [DATA_DIR]`

use std::sync::Arc;

use cnlu::data::{load_dataset, random_embeddings, synth, EncodedSplits};
use cnlu::metrics::{flip_analysis, FlipTask};
use cnlu::model::{train, TrainConfig};
use cnlu::pruning::{prune_one_shot, Norm, PruneSchedule};
use cnlu::{JointModel, ModelConfig};

fn main() -> cnlu::Result<()> {
    let raw = match std::env::args().nth(1) {
        Some(dir) => load_dataset(dir)?,
        None => synth::generate(&synth::SynthConfig::default()),
    };
    let data = EncodedSplits::prepare(&raw, 1, 50)?;
    let config = ModelConfig {
        num_filters: 100,
        ..ModelConfig::default()
    };
    let emb = Arc::new(random_embeddings(data.vocab.len(), config.embed_dim, 1));
    let model = JointModel::new(config, emb, data.vocab.clone(), data.labels.clone(), 1)?;
    let base = train(model, &data.train, &data.dev, &TrainConfig { max_epochs: 10, ..TrainConfig::default() })?.model;
    let pruned = prune_one_shot(&base, &PruneSchedule::one_shot(Norm::L2, 0.9))?;

    let report = flip_analysis(&base, &pruned, &data.test)?;
    print!("{}", report.summary());
    println!("first intent flips:");
    for r in report.lost().filter(|r| r.task == FlipTask::Intent).take(5) {
        println!("  #{} gold {} -> {}", r.index, r.gold, r.after);
    }
    Ok(())
}
