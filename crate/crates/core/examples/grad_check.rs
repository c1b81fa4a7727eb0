//! Check reverse-mode gradients of a conv + max-pool + softmax pipeline
//! against central finite differences.
//!
//! `cargo run --release --example grad_check`

use cnlu::tensor::{grad_check, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn main() -> cnlu::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (len, dim, filters, k, classes) = (7, 4, 3, 3, 5);
    let inputs = [
        random(&mut rng, &[len, dim]),
        random(&mut rng, &[filters, k, dim]),
        random(&mut rng, &[filters]),
        random(&mut rng, &[filters, classes]),
        random(&mut rng, &[classes]),
    ];
    let report = grad_check(
        |t, v| {
            let x = t.pad_centered(v[0], k)?;
            let f = t.conv1d(x, v[1], v[2])?;
            let pooled = t.max_over_time(f, len)?;
            let logits = t.linear(pooled, v[3], v[4])?;
            t.cross_entropy(logits, &[2])
        },
        &inputs,
        1e-6,
    )?;
    println!(
        "checked {} elements, max relative error {:.2e}, {} skipped at max-pool ties",
        report.checked,
        report.max_rel_error,
        report.ties.len()
    );
    Ok(())
}
