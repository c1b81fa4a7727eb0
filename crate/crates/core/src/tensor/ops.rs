//! Forward kernels. The `*_raw` variants write into caller-owned buffers and
//! are what the inference path uses; the tensor-returning wrappers validate
//! shapes first.

use rand::Rng;

use super::{Real, Tensor};
use crate::error::{Error, Result};

/// Prepends and appends `(k-1)/2` zero rows so that a width-`k` convolution
/// keeps the time length.
pub fn pad_centered<T: Real>(x: &Tensor<T>, k: usize) -> Result<Tensor<T>> {
    if k.is_multiple_of(2) {
        return Err(Error::Config(format!("kernel size must be odd, got {k}")));
    }
    if x.rank() != 2 {
        return Err(Error::dim("pad_centered", "rank", 2, x.rank()));
    }
    let pad = (k - 1) / 2;
    let (n, d) = (x.rows(), x.cols());
    let mut data = vec![T::zero(); (n + 2 * pad) * d];
    data[pad * d..(pad + n) * d].copy_from_slice(x.data());
    Tensor::new(vec![n + 2 * pad, d], data)
}

/// `out[t, c] = bias[c] + sum_{j<k, m<d} w[c, j, m] * x[t + j, m]`.
pub fn conv1d<T: Real>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (n, d, c, k) = conv_dims(x, w, b)?;
    let out_len = n - k + 1;
    let mut out = vec![T::zero(); out_len * c];
    conv1d_raw(x.data(), d, w.data(), b.data(), c, k, out_len, &mut out);
    Tensor::new(vec![out_len, c], out)
}

pub(crate) fn conv_dims<T: Real>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: &Tensor<T>,
) -> Result<(usize, usize, usize, usize)> {
    if x.rank() != 2 {
        return Err(Error::dim("conv1d", "input rank", 2, x.rank()));
    }
    if w.rank() != 3 {
        return Err(Error::dim("conv1d", "weight rank", 3, w.rank()));
    }
    let (n, d) = (x.rows(), x.cols());
    let (c, k, wd) = (w.shape()[0], w.shape()[1], w.shape()[2]);
    if wd != d {
        return Err(Error::dim("conv1d", "embedding width", wd, d));
    }
    if b.len() != c {
        return Err(Error::dim("conv1d", "bias channels", c, b.len()));
    }
    if n < k {
        return Err(Error::dim("conv1d", "time (input shorter than kernel)", k, n));
    }
    Ok((n, d, c, k))
}

/// The window `x[t..t+k, :]` is contiguous in row-major layout, so each
/// output element is one dot product of length `k*d`.
#[allow(clippy::too_many_arguments)]
pub fn conv1d_raw<T: Real>(
    x: &[T],
    d: usize,
    w: &[T],
    b: &[T],
    channels: usize,
    k: usize,
    out_len: usize,
    out: &mut [T],
) {
    let span = k * d;
    for t in 0..out_len {
        let window = &x[t * d..t * d + span];
        let row = &mut out[t * channels..(t + 1) * channels];
        for (ch, o) in row.iter_mut().enumerate() {
            *o = b[ch] + dot(&w[ch * span..(ch + 1) * span], window);
        }
    }
}

/// Eight independent partial sums so the loop vectorises; the summation
/// order is fixed, so results stay deterministic.
#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Per-channel maximum over the first `valid_len` time steps. Ties go to the
/// smallest time index.
pub fn max_over_time<T: Real>(features: &Tensor<T>, valid_len: usize) -> Result<(Tensor<T>, Vec<usize>)> {
    if features.rank() != 2 {
        return Err(Error::dim("max_over_time", "rank", 2, features.rank()));
    }
    if valid_len == 0 {
        return Err(Error::EmptySequence("max_over_time"));
    }
    let (n, c) = (features.rows(), features.cols());
    if valid_len > n {
        return Err(Error::dim("max_over_time", "time", n, valid_len));
    }
    let mut pooled = vec![T::zero(); c];
    let mut argmax = vec![0usize; c];
    max_over_time_raw(features.data(), c, valid_len, &mut pooled, &mut argmax);
    Ok((Tensor::new(vec![c], pooled)?, argmax))
}

pub fn max_over_time_raw<T: Real>(features: &[T], c: usize, valid_len: usize, pooled: &mut [T], argmax: &mut [usize]) {
    pooled.copy_from_slice(&features[..c]);
    argmax.fill(0);
    for t in 1..valid_len {
        let row = &features[t * c..(t + 1) * c];
        for ch in 0..c {
            if row[ch] > pooled[ch] {
                pooled[ch] = row[ch];
                argmax[ch] = t;
            }
        }
    }
}

/// Affine map over the trailing axis: `x[..., in] @ w[in, out] + b[out]`.
pub fn linear<T: Real>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (rows, input, output) = linear_dims(x, w, b)?;
    let mut out = vec![T::zero(); rows * output];
    linear_raw(x.data(), w.data(), b.data(), input, output, rows, &mut out);
    let mut shape = x.shape().to_vec();
    *shape.last_mut().unwrap() = output;
    Tensor::new(shape, out)
}

pub(crate) fn linear_dims<T: Real>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<(usize, usize, usize)> {
    if w.rank() != 2 {
        return Err(Error::dim("linear", "weight rank", 2, w.rank()));
    }
    let (input, output) = (w.shape()[0], w.shape()[1]);
    if x.cols() != input {
        return Err(Error::dim("linear", "input features", input, x.cols()));
    }
    if b.len() != output {
        return Err(Error::dim("linear", "bias features", output, b.len()));
    }
    Ok((x.len() / input, input, output))
}

pub fn linear_raw<T: Real>(x: &[T], w: &[T], b: &[T], input: usize, output: usize, rows: usize, out: &mut [T]) {
    for r in 0..rows {
        let xr = &x[r * input..(r + 1) * input];
        let o = &mut out[r * output..(r + 1) * output];
        o.copy_from_slice(&b[..output]);
        for (i, &xi) in xr.iter().enumerate() {
            if xi == T::zero() {
                continue;
            }
            let wr = &w[i * output..(i + 1) * output];
            for (oj, &wij) in o.iter_mut().zip(wr) {
                *oj += xi * wij;
            }
        }
    }
}

/// Inverted dropout. Returns the output and the per-element multiplier
/// (0 or `1/(1-p)`); eval mode is the identity with an all-ones multiplier.
pub fn dropout<T: Real, R: Rng + ?Sized>(
    x: &Tensor<T>,
    p: f64,
    training: bool,
    rng: &mut R,
) -> Result<(Tensor<T>, Vec<T>)> {
    check_dropout(p)?;
    if !training || p == 0.0 {
        return Ok((x.clone(), vec![T::one(); x.len()]));
    }
    let keep = T::lit(1.0 / (1.0 - p));
    let mask: Vec<T> = (0..x.len())
        .map(|_| if rng.random::<f64>() < p { T::zero() } else { keep })
        .collect();
    let data = x.data().iter().zip(&mask).map(|(&a, &m)| a * m).collect();
    Ok((Tensor::new(x.shape().to_vec(), data)?, mask))
}

pub(crate) fn check_dropout(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Config(format!("dropout probability must be in [0, 1), got {p}")));
    }
    Ok(())
}

/// Numerically stable softmax of one row, written into `out`.
pub fn softmax_raw<T: Real>(logits: &[T], out: &mut [T]) {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o = *o / sum;
    }
}

pub fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); logits.len()];
    softmax_raw(logits, &mut out);
    out
}

/// `log(sum(exp(logits)))` with max subtraction.
pub fn log_sum_exp<T: Real>(logits: &[T]) -> T {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let sum: T = logits.iter().map(|&l| (l - max).exp()).sum();
    max + sum.ln()
}

/// Cross-entropy of one row against a class id, plus its softmax.
pub fn softmax_xent<T: Real>(logits: &Tensor<T>, target: usize) -> Result<(T, Tensor<T>)> {
    let k = logits.len();
    if target >= k {
        return Err(Error::Label(format!("target class {target} out of range for {k} classes")));
    }
    let loss = log_sum_exp(logits.data()) - logits.data()[target];
    let probs = softmax(logits.data());
    Ok((loss, Tensor::new(vec![k], probs)?))
}

/// Distillation loss of a single row and its gradient with respect to the
/// student logits:
/// `hard * xent(s, target) + (1 - hard) * T^2 * KL(softmax(t/T) || softmax(s/T))`.
pub fn kd_row<T: Real>(
    student: &[T],
    teacher: &[T],
    temperature: T,
    target: usize,
    hard_weight: T,
    grad: Option<&mut [T]>,
) -> T {
    let k = student.len();
    let soft_weight = T::one() - hard_weight;
    let scaled_s: Vec<T> = student.iter().map(|&s| s / temperature).collect();
    let scaled_t: Vec<T> = teacher.iter().map(|&t| t / temperature).collect();
    let lse_s = log_sum_exp(&scaled_s);
    let lse_t = log_sum_exp(&scaled_t);

    let mut kl = T::zero();
    for j in 0..k {
        let log_p = scaled_t[j] - lse_t;
        let p = log_p.exp();
        if p > T::zero() {
            kl += p * (log_p - (scaled_s[j] - lse_s));
        }
    }
    // Rounding can leave a tiny negative sum when the distributions match.
    let kl = kl.max(T::zero());
    let hard = log_sum_exp(student) - student[target];
    let loss = hard_weight * hard + soft_weight * temperature * temperature * kl;

    if let Some(g) = grad {
        let lse_hard = log_sum_exp(student);
        for j in 0..k {
            let q_hard = (student[j] - lse_hard).exp();
            let q_soft = (scaled_s[j] - lse_s).exp();
            let p = (scaled_t[j] - lse_t).exp();
            let onehot = if j == target { T::one() } else { T::zero() };
            g[j] = hard_weight * (q_hard - onehot) + soft_weight * temperature * (q_soft - p);
        }
    }
    loss
}
