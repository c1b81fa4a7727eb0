//! Prune the same trained model to 80% sparsity once in one shot and once
//! iteratively, and compare test metrics.
//!
//! `cargo run --release --example one_shot_vs_iterative [DATA_DIR]`

use std::sync::Arc;

use cnlu::data::{load_dataset, random_embeddings, synth, EncodedSplits};
use cnlu::model::{evaluate, train, TrainConfig};
use cnlu::pruning::{prune_iterative, prune_one_shot, Norm, PruneData, PruneSchedule};
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
    let cfg = TrainConfig {
        max_epochs: 10,
        ..TrainConfig::default()
    };
    let base = train(model, &data.train, &data.dev, &cfg)?.model;
    let target = 0.8;

    let one_shot = prune_one_shot(&base, &PruneSchedule::one_shot(Norm::L2, target))?;
    let split = PruneData {
        train: &data.train,
        dev: &data.dev,
        test: &data.test,
    };
    let iterative = prune_iterative(&base, split, &PruneSchedule::iterative(Norm::L2, 0.1, target, cfg), None)?.model;

    for (name, m) in [("unpruned", &base), ("one-shot", &one_shot), ("iterative", &iterative)] {
        let r = evaluate(m, &data.test)?.metrics;
        println!(
            "{name:<10} filters {:>3}  params {:>6}  intent {:.4}  slot F1 {:.4}",
            m.num_filters(),
            r.params,
            r.intent_accuracy.unwrap(),
            r.slot_f1().unwrap()
        );
    }
    Ok(())
}
