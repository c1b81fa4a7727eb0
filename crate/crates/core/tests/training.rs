mod common;

use cnlu::model::{evaluate, load_checkpoint, save_checkpoint, train, TrainConfig};
use cnlu::pruning::{prune_iterative, Norm, PruneData, PruneSchedule};

fn quick(epochs: usize) -> TrainConfig {
    TrainConfig {
        max_epochs: epochs,
        patience: 2,
        batch_size: 16,
        seed: 9,
        ..TrainConfig::default()
    }
}

#[test]
fn seeded_training_is_byte_identical() {
    let data = common::synthetic_splits(50, 2, 50);
    let run = || {
        let model = common::fresh_model(&data, 32, 20, 4);
        train(model, &data.train, &data.dev, &quick(4)).unwrap().model.to_bytes()
    };
    assert_eq!(run(), run());
}

#[test]
fn checkpoint_file_round_trip_keeps_predictions() {
    let data = common::synthetic_splits(80, 3, 50);
    let model = common::fresh_model(&data, 16, 12, 1);
    let trained = train(model, &data.train, &data.dev, &quick(3)).unwrap().model;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&trained, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    let a = evaluate(&trained, &data.test).unwrap();
    let b = evaluate(&back, &data.test).unwrap();
    assert_eq!(a.intent_preds, b.intent_preds);
    assert_eq!(a.slot_preds, b.slot_preds);
}

#[test]
fn iterative_schedule_from_300_filters() {
    let data = common::synthetic_splits(40, 5, 50);
    let model = common::fresh_model(&data, 300, 8, 3);
    let schedule = PruneSchedule::iterative(Norm::L2, 0.1, 0.5, quick(1));
    let dir = tempfile::tempdir().unwrap();
    let split = PruneData {
        train: &data.train,
        dev: &data.dev,
        test: &data.test,
    };
    let out = prune_iterative(&model, split, &schedule, Some(dir.path())).unwrap();
    let filters: Vec<usize> = out.curve.iter().map(|p| p.filters_remaining).collect();
    assert_eq!(filters, vec![270, 240, 210, 180, 150]);
    assert!(out.curve.windows(2).all(|w| w[1].params < w[0].params));
    assert!(out.curve.iter().all(|p| p.checkpoint.as_ref().unwrap().is_file()));
    assert_eq!(out.model.num_filters(), 150);
}
