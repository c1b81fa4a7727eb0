//! Pruning curve against distillation curve on a shared rate grid.
//!
//! `cargo run --release --example compare_curves [DATA_DIR]`

use std::sync::Arc;

use cnlu::cli::Comparison;
use cnlu::data::{load_dataset, random_embeddings, synth, EncodedSplits};
use cnlu::distill::{distill_curve, DistillConfig};
use cnlu::model::{evaluate, train, TrainConfig};
use cnlu::pruning::{prune_iterative, Norm, PruneData, PruneSchedule, SparsityCurvePoint};
use cnlu::{JointModel, ModelConfig};

fn main() -> cnlu::Result<()> {
    let raw = match std::env::args().nth(1) {
        Some(dir) => load_dataset(dir)?,
        None => synth::generate(&synth::SynthConfig::default()),
    };
    let data = EncodedSplits::prepare(&raw, 1, 50)?;
    let config = ModelConfig {
        num_filters: 50,
        ..ModelConfig::default()
    };
    let emb = Arc::new(random_embeddings(data.vocab.len(), config.embed_dim, 1));
    let model = JointModel::new(config, emb, data.vocab.clone(), data.labels.clone(), 1)?;
    let cfg = TrainConfig {
        max_epochs: 5,
        patience: 2,
        ..TrainConfig::default()
    };
    let teacher = train(model, &data.train, &data.dev, &cfg)?.model;
    let split = PruneData {
        train: &data.train,
        dev: &data.dev,
        test: &data.test,
    };

    let grid = [0.0, 0.2, 0.4, 0.6, 0.8];
    let pruned = prune_iterative(&teacher, split, &PruneSchedule::iterative(Norm::L2, 0.2, 0.8, cfg), None)?.curve;
    let distilled = distill_curve(&teacher, &grid[1..], &DistillConfig::new(1, cfg), split, None)?;
    let m = evaluate(&teacher, &data.test)?.metrics;
    let baseline = SparsityCurvePoint {
        filters_remaining: teacher.num_filters(),
        params: m.params,
        compression_rate: 0.0,
        intent_accuracy: m.intent_accuracy,
        slot_f1: m.slot_f1(),
        checkpoint: None,
    };
    let table = Comparison::build(&pruned, &distilled, Some(&baseline), Some(&grid));
    print!("{}", table.to_table());
    for w in &table.warnings {
        println!("note: {w}");
    }
    Ok(())
}
