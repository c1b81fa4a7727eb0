//! Iteratively prune conv filters by L2 norm, retraining after every step,
//! and print the sparsity curve.
//!
//! `cargo run --release --example prune_iterative [DATA_DIR]`

use std::sync::Arc;

use cnlu::data::{load_dataset, random_embeddings, synth, EncodedSplits};
use cnlu::model::{train, TrainConfig};
use cnlu::pruning::{curve_to_tsv, prune_iterative, Norm, PruneData, PruneSchedule};
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

    // Short retraining keeps the example quick; real runs use the defaults.
    let retrain = TrainConfig {
        max_epochs: 3,
        patience: 2,
        ..TrainConfig::default()
    };
    let schedule = PruneSchedule::iterative(Norm::L2, 0.1, 0.9, retrain);
    println!("filters per step: {:?}", schedule.filter_counts(base.num_filters()));

    let split = PruneData {
        train: &data.train,
        dev: &data.dev,
        test: &data.test,
    };
    let outcome = prune_iterative(&base, split, &schedule, None)?;
    print!("{}", curve_to_tsv(&outcome.curve));
    if !outcome.diverged_steps.is_empty() {
        println!("retraining diverged at steps {:?}", outcome.diverged_steps);
    }
    Ok(())
}
