//! Distill a trained teacher into a randomly initialised narrow student.
//!
//! `cargo run --release --example distill_student [DATA_DIR]`

use std::sync::Arc;

use cnlu::data::{load_dataset, random_embeddings, synth, EncodedSplits};
use cnlu::distill::{distill, kd_loss, student_filters_for_rate, DistillConfig};
use cnlu::model::{evaluate, train, TrainConfig};
use cnlu::pruning::PruneData;
use cnlu::{JointModel, ModelConfig};

fn main() -> cnlu::Result<()> {
    // The soft term alone, on toy logits.
    let loss = kd_loss(&[2.0, 0.5, -1.0], &[1.5, 1.0, -0.5], 2.0, 0, 0.5)?;
    println!("toy distillation loss {loss:.4}");

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
    let teacher = train(model, &data.train, &data.dev, &cfg)?.model;
    let t = evaluate(&teacher, &data.test)?.metrics;
    println!("teacher  filters {:>3}  intent {:.4}  slot F1 {:.4}", teacher.num_filters(), t.intent_accuracy.unwrap(), t.slot_f1().unwrap());

    let split = PruneData {
        train: &data.train,
        dev: &data.dev,
        test: &data.test,
    };
    for rate in [0.5, 0.9] {
        let filters = student_filters_for_rate(teacher.num_filters(), rate);
        let (_, m) = distill(&teacher, &DistillConfig::new(filters, cfg), split)?;
        println!("student  filters {filters:>3}  intent {:.4}  slot F1 {:.4}", m.intent_accuracy.unwrap(), m.slot_f1().unwrap());
    }
    Ok(())
}
