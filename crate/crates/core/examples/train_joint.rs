//! Train a joint intent/slot model and evaluate it on the test split.
//!
//! `cargo run --release --example train_joint [DATA_DIR]`
//!
//! Without a directory the built-in synthetic corpus is used.

use std::sync::Arc;

use cnlu::data::{load_dataset, random_embeddings, synth, EncodedSplits};
use cnlu::model::{evaluate, save_checkpoint, train, TrainConfig};
use cnlu::{JointModel, ModelConfig};

fn main() -> cnlu::Result<()> {
    let raw = match std::env::args().nth(1) {
        Some(dir) => load_dataset(dir)?,
        None => synth::generate(&synth::SynthConfig::default()),
    };
    let data = EncodedSplits::prepare(&raw, 1, 50)?;
    println!(
        "vocab {}, intents {}, slot tags {}",
        data.vocab.len(),
        data.labels.num_intents(),
        data.labels.num_slots()
    );

    let config = ModelConfig {
        num_filters: 100,
        ..ModelConfig::default()
    };
    let emb = Arc::new(random_embeddings(data.vocab.len(), config.embed_dim, 1));
    let model = JointModel::new(config, emb, data.vocab.clone(), data.labels.clone(), 1)?;
    let outcome = train(model, &data.train, &data.dev, &TrainConfig { max_epochs: 15, ..TrainConfig::default() })?;
    for e in &outcome.history {
        println!("epoch {:>2}  loss {:.4}  dev score {:.4}", e.epoch, e.train_loss, e.dev_score);
    }

    let m = evaluate(&outcome.model, &data.test)?.metrics;
    println!(
        "test: intent acc {:.4}, slot F1 {:.4}, {} trainable params",
        m.intent_accuracy.unwrap(),
        m.slot_f1().unwrap(),
        m.params
    );
    let path = std::env::temp_dir().join("cnlu_train_joint.ckpt");
    save_checkpoint(&outcome.model, &path)?;
    println!("saved {}", path.display());
    Ok(())
}
