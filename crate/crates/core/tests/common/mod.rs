//! Oracles and fixtures shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use cnlu::data::{random_embeddings, EncodedExample, LabelMaps, Vocabulary, PAD};
use cnlu::metrics::{extract_chunks, slot_f1};
use cnlu::pruning::splice_filters;
use cnlu::tensor::{grad_check, GradCheckReport, Tensor};
use cnlu::model::InferenceScratch;
use cnlu::{JointModel, ModelConfig, TaskMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Chunk oracle: a span is a chunk iff it opens legally, every later position
// continues it, and the next position does not.

pub const TAGS: [&str; 5] = ["O", "B-a", "I-a", "B-b", "I-b"];

fn kind(tag: &str) -> Option<&str> {
    tag.split_once('-').map(|(_, k)| k)
}

fn opens(tags: &[&str], i: usize) -> bool {
    match tags[i].split_once('-') {
        Some(("B", _)) => true,
        Some(("I", k)) => i == 0 || kind(tags[i - 1]) != Some(k),
        _ => false,
    }
}

fn continues(tags: &[&str], i: usize, k: &str) -> bool {
    tags[i] == format!("I-{k}")
}

pub fn oracle_spans(tags: &[&str]) -> BTreeSet<(String, usize, usize)> {
    let mut out = BTreeSet::new();
    let n = tags.len();
    for i in 0..n {
        if !opens(tags, i) {
            continue;
        }
        let k = kind(tags[i]).unwrap();
        for j in i..n {
            let inner = (i + 1..=j).all(|t| continues(tags, t, k));
            let closed = j + 1 == n || !continues(tags, j + 1, k);
            if inner && closed {
                out.insert((k.to_owned(), i, j));
            }
        }
    }
    out
}

/// (matched, predicted, gold) summed over aligned sequences.
pub fn oracle_counts(pred: &[Vec<&str>], gold: &[Vec<&str>]) -> (usize, usize, usize) {
    let mut m = (0, 0, 0);
    for (p, g) in pred.iter().zip(gold) {
        let (ps, gs) = (oracle_spans(p), oracle_spans(g));
        m.0 += ps.intersection(&gs).count();
        m.1 += ps.len();
        m.2 += gs.len();
    }
    m
}

pub fn oracle_f1(matched: usize, predicted: usize, gold: usize) -> f64 {
    if matched == 0 {
        return 0.0;
    }
    let p = matched as f64 / predicted as f64;
    let r = matched as f64 / gold as f64;
    2.0 * p * r / (p + r)
}

/// Every tag sequence of length `len` over [`TAGS`].
pub fn all_sequences(len: usize) -> Vec<Vec<&'static str>> {
    let mut out: Vec<Vec<&str>> = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| {
                TAGS.iter().map(move |&t| {
                    let mut s = s.clone();
                    s.push(t);
                    s
                })
            })
            .collect();
    }
    out
}

// ---------------------------------------------------------------------------
// Random models and inputs.

pub fn random_model(rng: &mut ChaCha8Rng, task: TaskMode) -> JointModel {
    let d = rng.random_range(2..=8);
    let k = [1, 3, 5][rng.random_range(0..3)];
    let c = rng.random_range(2..=12);
    let vocab_size = rng.random_range(6..=20);
    let intents = rng.random_range(2..=6);
    let slots = rng.random_range(2..=7);
    let tokens = ["<pad>".to_owned(), "<unk>".to_owned()]
        .into_iter()
        .chain((2..vocab_size).map(|i| format!("w{i}")))
        .collect();
    let vocab = Arc::new(Vocabulary::from_tokens(tokens).unwrap());
    let labels = Arc::new(
        LabelMaps::from_lists(
            (0..intents).map(|i| format!("intent{i}")).collect(),
            std::iter::once("O".to_owned())
                .chain((1..slots).map(|i| format!("B-s{i}")))
                .collect(),
        )
        .unwrap(),
    );
    let config = ModelConfig {
        embed_dim: d,
        num_filters: c,
        kernel_size: k,
        dropout: 0.5,
        alpha: rng.random_range(0.0..=1.0),
        max_seq_len: 16,
        task,
    };
    let emb = Arc::new(random_embeddings(vocab_size, d, rng.random()));
    JointModel::new(config, emb, vocab, labels, rng.random()).unwrap()
}

pub fn random_example(rng: &mut ChaCha8Rng, model: &JointModel) -> EncodedExample {
    let max = model.config().max_seq_len;
    let len = rng.random_range(1..=12);
    let mut tokens = vec![PAD; max];
    let mut slots = vec![0; max];
    for t in 0..len {
        tokens[t] = rng.random_range(1..model.vocab().len());
        slots[t] = rng.random_range(0..model.labels().num_slots());
    }
    EncodedExample {
        tokens,
        valid_len: len,
        slots,
        intent: rng.random_range(0..model.labels().num_intents()),
    }
}

// ---------------------------------------------------------------------------
// Splice oracle: the original network evaluated in f64 with the removed
// channels' contributions left out of both heads.

pub struct OracleLogits {
    pub intent: Option<Vec<f64>>,
    pub slot: Option<Vec<f64>>,
}

pub fn kept_channel_logits(model: &JointModel, remove: &[usize], ex: &EncodedExample) -> OracleLogits {
    let cfg = model.config();
    let (c, k, d) = (cfg.num_filters, cfg.kernel_size, cfg.embed_dim);
    let emb = model.embeddings();
    let (tokens, pad) = if cfg.task.pads() {
        (ex.valid_tokens().to_vec(), (k - 1) / 2)
    } else {
        (ex.tokens[..ex.valid_len.max(k)].to_vec(), 0)
    };
    let n = tokens.len() + 2 * pad;
    let x = |t: usize, e: usize| -> f64 {
        if t < pad || t >= pad + tokens.len() {
            0.0
        } else {
            emb.row(tokens[t - pad])[e] as f64
        }
    };
    let w = model.conv_weight().data();
    let b = model.conv_bias().data();
    let out_len = n - k + 1;
    let mut feat = vec![vec![0.0f64; c]; out_len];
    for (t, row) in feat.iter_mut().enumerate() {
        for (ch, f) in row.iter_mut().enumerate() {
            let mut s = b[ch] as f64;
            for j in 0..k {
                for e in 0..d {
                    s += w[(ch * k + j) * d + e] as f64 * x(t + j, e);
                }
            }
            *f = s;
        }
    }
    let kept: Vec<usize> = (0..c).filter(|ch| !remove.contains(ch)).collect();
    let head = |h: &cnlu::model::Head, input: &[f64]| -> Vec<f64> {
        let outs = h.outputs();
        (0..outs)
            .map(|o| {
                h.bias.data()[o] as f64
                    + kept
                        .iter()
                        .map(|&ch| input[ch] * h.weight.data()[ch * outs + o] as f64)
                        .sum::<f64>()
            })
            .collect()
    };
    let intent = model.intent_head().map(|h| {
        let pooled: Vec<f64> = (0..c)
            .map(|ch| feat.iter().map(|r| r[ch]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        head(h, &pooled)
    });
    let slot = model
        .slot_head()
        .map(|h| feat.iter().flat_map(|row| head(h, row)).collect());
    OracleLogits { intent, slot }
}

// ---------------------------------------------------------------------------
// Gradient suite.

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
}

/// Finite-difference reports for every primitive and for the composed
/// model under one seed.
pub fn gradient_suite(seed: u64) -> Vec<(&'static str, GradCheckReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = 1e-6;
    let mut out = Vec::new();

    let (n, d, ch) = (rng.random_range(1..=6), rng.random_range(1..=4), rng.random_range(1..=4));
    let k = [1, 3, 5][rng.random_range(0..3)];
    let proj = rand_tensor(&mut rng, &[n, ch]);
    let inputs = [
        rand_tensor(&mut rng, &[n, d]),
        rand_tensor(&mut rng, &[ch, k, d]),
        rand_tensor(&mut rng, &[ch]),
    ];
    let r = grad_check(
        |t, v| {
            let x = t.pad_centered(v[0], k)?;
            let f = t.conv1d(x, v[1], v[2])?;
            t.project(f, &proj)
        },
        &inputs,
        eps,
    )
    .unwrap();
    out.push(("pad+conv1d", r));

    let proj = rand_tensor(&mut rng, &[ch]);
    let r = grad_check(
        |t, v| {
            let p = t.max_over_time(v[0], n)?;
            t.project(p, &proj)
        },
        &[rand_tensor(&mut rng, &[n, ch])],
        eps,
    )
    .unwrap();
    out.push(("max_over_time", r));

    let (i, o) = (rng.random_range(1..=5), rng.random_range(1..=5));
    let proj = rand_tensor(&mut rng, &[n, o]);
    let inputs = [
        rand_tensor(&mut rng, &[n, i]),
        rand_tensor(&mut rng, &[i, o]),
        rand_tensor(&mut rng, &[o]),
    ];
    let r = grad_check(
        |t, v| {
            let y = t.linear(v[0], v[1], v[2])?;
            t.project(y, &proj)
        },
        &inputs,
        eps,
    )
    .unwrap();
    out.push(("linear", r));

    let mask_seed: u64 = rng.random();
    let proj = rand_tensor(&mut rng, &[n, i]);
    let r = grad_check(
        |t, v| {
            let mut mask_rng = ChaCha8Rng::seed_from_u64(mask_seed);
            let y = t.dropout(v[0], 0.3, true, &mut mask_rng)?;
            t.project(y, &proj)
        },
        &[rand_tensor(&mut rng, &[n, i])],
        eps,
    )
    .unwrap();
    out.push(("dropout", r));

    let classes = rng.random_range(2..=6);
    let targets: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
    let r = grad_check(
        |t, v| t.cross_entropy(v[0], &targets),
        &[rand_tensor(&mut rng, &[n, classes])],
        eps,
    )
    .unwrap();
    out.push(("cross_entropy", r));

    let teacher = rand_tensor(&mut rng, &[n, classes]);
    let (temp, lambda) = (rng.random_range(0.5..4.0), rng.random_range(0.0..=1.0));
    let r = grad_check(
        |t, v| t.distill(v[0], &teacher, &targets, temp, lambda),
        &[rand_tensor(&mut rng, &[n, classes])],
        eps,
    )
    .unwrap();
    out.push(("distill", r));

    let (wa, wb) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    let r = grad_check(
        |t, v| {
            let a = t.cross_entropy(v[0], &targets)?;
            let b = t.cross_entropy(v[1], &targets)?;
            Ok(t.weighted_sum(a, wa, b, wb))
        },
        &[rand_tensor(&mut rng, &[n, classes]), rand_tensor(&mut rng, &[n, classes])],
        eps,
    )
    .unwrap();
    out.push(("weighted_sum", r));

    let task = [TaskMode::Joint, TaskMode::Intent, TaskMode::Slot][(seed % 3) as usize];
    let model = random_model(&mut rng, task);
    let example = random_example(&mut rng, &model);
    let emb: Tensor<f64> = model.embeddings().cast();
    let params: Vec<Tensor<f64>> = model.trainable_tensors().into_iter().map(|t| t.cast()).collect();
    let r = grad_check(|t, v| model.loss_graph(t, v, &emb, &example), &params, eps).unwrap();
    out.push(("joint model", r));

    out
}

/// Worst absolute gap between spliced-model logits and the kept-channel
/// oracle over `models` random models, each scored on several inputs.
pub fn splice_suite(models: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for m in 0..models {
        let task = [TaskMode::Joint, TaskMode::Intent, TaskMode::Slot][m % 3];
        let model = random_model(&mut rng, task);
        let c = model.num_filters();
        let count = rng.random_range(0..c);
        let mut remove: Vec<usize> = (0..c).collect();
        for i in (1..c).rev() {
            remove.swap(i, rng.random_range(0..=i));
        }
        remove.truncate(count);
        let spliced = splice_filters(&model, &remove).unwrap();
        assert_eq!(spliced.num_filters(), c - count);
        let mut scratch = InferenceScratch::new(&spliced);
        for _ in 0..5 {
            let ex = random_example(&mut rng, &model);
            let oracle = kept_channel_logits(&model, &remove, &ex);
            let got = spliced.predict(&ex, &mut scratch).unwrap();
            for (want, have) in [(oracle.intent, got.intent_logits), (oracle.slot, got.slot_logits)] {
                match (want, have) {
                    (Some(w), Some(h)) => {
                        assert_eq!(w.len(), h.len());
                        for (a, &b) in w.iter().zip(h) {
                            worst = worst.max((a - b as f64).abs());
                        }
                    }
                    (None, None) => {}
                    _ => panic!("head presence differs after splicing"),
                }
            }
        }
    }
    worst
}

/// Compares chunk extraction and F1 against the span oracle. Chunks are
/// checked on every sequence up to length 6; F1 on every same-length pair
/// up to length 3, and from length 4 on each sequence against itself and
/// three seeded partners. Returns (comparisons, mismatch descriptions).
pub fn chunk_suite(seed: u64) -> (usize, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    let mut bad = Vec::new();
    let compare_f1 = |p: &Vec<&str>, g: &Vec<&str>, bad: &mut Vec<String>| {
        let got = slot_f1(std::slice::from_ref(p), std::slice::from_ref(g)).unwrap();
        let (m, np, ng) = oracle_counts(std::slice::from_ref(p), std::slice::from_ref(g));
        if (got.matched, got.predicted, got.gold) != (m, np, ng) || (got.f1 - oracle_f1(m, np, ng)).abs() > 1e-12 {
            bad.push(format!("f1 {p:?} vs {g:?}"));
        }
    };
    for len in 1..=6 {
        let seqs = all_sequences(len);
        for s in &seqs {
            let got: BTreeSet<_> = extract_chunks(s)
                .unwrap()
                .into_iter()
                .map(|c| (c.kind, c.start, c.end))
                .collect();
            checked += 1;
            if got != oracle_spans(s) {
                bad.push(format!("chunks {s:?}"));
            }
        }
        if len <= 3 {
            for p in &seqs {
                for g in &seqs {
                    compare_f1(p, g, &mut bad);
                    checked += 1;
                }
            }
        } else {
            for p in &seqs {
                compare_f1(p, p, &mut bad);
                for _ in 0..3 {
                    compare_f1(p, &seqs[rng.random_range(0..seqs.len())], &mut bad);
                }
                checked += 4;
            }
        }
    }
    // Corpus-level micro averaging over random batches of mixed lengths.
    for _ in 0..200 {
        let batch = rng.random_range(1..=8);
        let mut pred = Vec::new();
        let mut gold = Vec::new();
        for _ in 0..batch {
            let len = rng.random_range(1..=6);
            pred.push((0..len).map(|_| TAGS[rng.random_range(0..5)]).collect::<Vec<_>>());
            gold.push((0..len).map(|_| TAGS[rng.random_range(0..5)]).collect::<Vec<_>>());
        }
        let got = slot_f1(&pred, &gold).unwrap();
        let (m, np, ng) = oracle_counts(&pred, &gold);
        checked += 1;
        if (got.f1 - oracle_f1(m, np, ng)).abs() > 1e-12 {
            bad.push("micro-averaged batch".into());
        }
    }
    (checked, bad)
}

// ---------------------------------------------------------------------------
// Small trained-model fixtures.

use cnlu::data::{synth, EncodedSplits};

pub fn synthetic_splits(train: usize, seed: u64, max_len: usize) -> EncodedSplits {
    let raw = synth::generate(&synth::SynthConfig {
        train,
        dev: 40,
        test: 60,
        seed,
        filler_rate: 0.15,
    });
    EncodedSplits::prepare(&raw, 1, max_len).unwrap()
}

pub fn fresh_model(data: &EncodedSplits, filters: usize, dim: usize, seed: u64) -> JointModel {
    let config = ModelConfig {
        embed_dim: dim,
        num_filters: filters,
        ..ModelConfig::default()
    };
    let emb = Arc::new(random_embeddings(data.vocab.len(), dim, seed));
    JointModel::new(config, emb, data.vocab.clone(), data.labels.clone(), seed).unwrap()
}
