use std::fs;
use std::path::Path;
use std::process::Command;

use cnlu::model::load_checkpoint;
use cnlu::TaskMode;

fn cnlu(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cnlu"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

const SMALL: [&str; 10] = ["--synthetic", "--filters", "20", "--dim", "16", "--epochs", "3", "--patience", "2", "--seed"];

fn train(out: &Path, extra: &[&str]) -> i32 {
    let mut args = vec!["train", "--out", out.to_str().unwrap()];
    args.extend(SMALL);
    args.push("3");
    args.extend(extra);
    cnlu(&args).0
}

#[test]
fn train_is_reproducible_and_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(train(&a, &[]), 0);
    assert_eq!(train(&b, &[]), 0);
    assert_eq!(fs::read(a.join("model.ckpt")).unwrap(), fs::read(b.join("model.ckpt")).unwrap());

    let manifest = fs::read_to_string(a.join("train_manifest.tsv")).unwrap();
    assert!(manifest.starts_with("key\tvalue\n"));
    for key in ["argv", "seed", "alpha", "filters", "version", "started_unix", "output"] {
        assert!(manifest.lines().any(|l| l.starts_with(&format!("{key}\t"))), "{key}");
    }
}

#[test]
fn intent_only_checkpoint_has_no_slot_head() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(train(dir.path(), &["--task", "intent"]), 0);
    let model = load_checkpoint(dir.path().join("model.ckpt")).unwrap();
    assert_eq!(model.config().task, TaskMode::Intent);
    assert!(model.slot_head().is_none());
    let cfg = model.config();
    let labels = model.labels();
    assert_eq!(
        model.count_params(false),
        cfg.num_filters * cfg.kernel_size * cfg.embed_dim + cfg.num_filters + (cfg.num_filters + 1) * labels.num_intents()
    );
}

#[test]
fn prune_flips_bench_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    assert_eq!(train(root, &[]), 0);
    let ckpt = root.join("model.ckpt");
    let ckpt = ckpt.to_str().unwrap();
    let sub = |name: &str| root.join(name).to_str().unwrap().to_owned();

    let (code, _) = cnlu(&[
        "prune", "--synthetic", "--checkpoint", ckpt, "--out", &sub("it"), "--mode", "iterative", "--target", "0.5",
        "--step", "0.1", "--epochs", "1", "--patience", "1",
    ]);
    assert_eq!(code, 0);
    let curve = fs::read_to_string(root.join("it/prune_curve.tsv")).unwrap();
    assert_eq!(curve.lines().count(), 1 + 5);

    for norm in ["l1", "l2"] {
        let out = sub(&format!("os_{norm}"));
        let (code, stdout) = cnlu(&[
            "prune", "--synthetic", "--checkpoint", ckpt, "--out", &out, "--mode", "one-shot", "--target", "0.5", "--norm", norm,
        ]);
        assert_eq!(code, 0);
        assert!(stdout.contains("10 filters"));
        assert!(Path::new(&out).join("pruned_10.ckpt").is_file());
    }

    let (code, _) = cnlu(&["flips", "--synthetic", "--checkpoint", ckpt, "--other", ckpt, "--out", &sub("same")]);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(root.join("same/flips.tsv")).unwrap().lines().count(), 1);

    let pruned = sub("os_l2/pruned_10.ckpt");
    let (code, _) = cnlu(&["flips", "--synthetic", "--checkpoint", ckpt, "--other", &pruned, "--out", &sub("fl")]);
    assert_eq!(code, 0);
    let summary = fs::read_to_string(root.join("fl/flips_summary.tsv")).unwrap();
    let lost: usize = ["intent", "slot"]
        .iter()
        .map(|t| {
            let key = format!("{t}_correct_to_incorrect\t");
            let line = summary.lines().find(|l| l.starts_with(&key)).unwrap();
            line[key.len()..].parse::<usize>().unwrap()
        })
        .sum();
    let records = fs::read_to_string(root.join("fl/flips.tsv")).unwrap();
    assert_eq!(records.lines().count(), lost + 1);

    let (code, stdout) = cnlu(&["bench", "--synthetic", "--checkpoint", &pruned, "--out", &sub("bench"), "--warmup", "5"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("ms/sample"));

    let (code, _) = cnlu(&[
        "distill", "--synthetic", "--checkpoint", ckpt, "--out", &sub("kd"), "--rates", "0.5", "--epochs", "1", "--patience", "1",
    ]);
    assert_eq!(code, 0);
    let (code, _) = cnlu(&["eval", "--synthetic", "--checkpoint", ckpt, "--out", &sub("ev")]);
    assert_eq!(code, 0);
    let (code, table) = cnlu(&[
        "compare",
        "--pruned",
        &sub("it/prune_curve.tsv"),
        "--distilled",
        &sub("kd/distill_curve.tsv"),
        "--baseline",
        &sub("ev/baseline_curve.tsv"),
        "--grid",
        "0,0.2,0.4,0.6,0.8,0.9,0.95,0.99",
        "--out",
        &sub("cmp"),
    ]);
    assert_eq!(code, 0);
    let rows = table.lines().filter(|l| l.trim_start().chars().next().is_some_and(|c| c.is_ascii_digit())).count();
    assert_eq!(rows, 8);
    assert!(table.contains("absent"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(cnlu(&["train", "--out", out]).0, 2);
    assert_eq!(cnlu(&["prune", "--synthetic", "--target", "1.0", "--out", out]).0, 2);
    assert_eq!(cnlu(&["bogus"]).0, 2);
    assert_eq!(cnlu(&["--help"]).0, 0);

    let empty = dir.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    assert_eq!(cnlu(&["train", "--data", empty.to_str().unwrap(), "--out", out]).0, 3);

    let bad = dir.path().join("bad.ckpt");
    fs::write(&bad, b"not a checkpoint").unwrap();
    assert_eq!(cnlu(&["bench", "--synthetic", "--checkpoint", bad.to_str().unwrap(), "--out", out]).0, 3);
}
