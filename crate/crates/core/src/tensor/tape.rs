use rand::Rng;

use super::ops;
use super::{Real, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`GradTape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op<T> {
    Leaf,
    PadCentered {
        input: Var,
        pad: usize,
    },
    Conv1d {
        x: Var,
        w: Var,
        b: Var,
    },
    MaxOverTime {
        input: Var,
        argmax: Vec<usize>,
    },
    Dropout {
        input: Var,
        mask: Vec<T>,
    },
    Linear {
        x: Var,
        w: Var,
        b: Var,
    },
    /// Mean cross-entropy over rows; `probs` is the saved row-wise softmax.
    CrossEntropy {
        logits: Var,
        targets: Vec<usize>,
        probs: Vec<T>,
    },
    /// Mean distillation loss over rows; `grad` is the saved per-row gradient.
    Distill {
        logits: Var,
        grad: Vec<T>,
    },
    WeightedSum {
        a: Var,
        wa: T,
        b: Var,
        wb: T,
    },
    /// `sum(input * weights)` against a constant weight tensor.
    Project {
        input: Var,
        weights: Vec<T>,
    },
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Ordered record of executed primitives. Nodes are appended in execution
/// order, so the reverse pass walks them back to front.
#[derive(Debug, Default)]
pub struct GradTape<T: Real = f32> {
    nodes: Vec<Node<T>>,
}

impl<T: Real> GradTape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Records a trainable input.
    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Records an input that never receives a gradient.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn pad_centered(&mut self, x: Var, k: usize) -> Result<Var> {
        let out = ops::pad_centered(self.value(x), k)?;
        let rg = self.needs(x);
        Ok(self.push(out, Op::PadCentered { input: x, pad: (k - 1) / 2 }, rg))
    }

    pub fn conv1d(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let out = ops::conv1d(self.value(x), self.value(w), self.value(b))?;
        let rg = self.needs(x) || self.needs(w) || self.needs(b);
        Ok(self.push(out, Op::Conv1d { x, w, b }, rg))
    }

    pub fn max_over_time(&mut self, features: Var, valid_len: usize) -> Result<Var> {
        let (pooled, argmax) = ops::max_over_time(self.value(features), valid_len)?;
        let rg = self.needs(features);
        Ok(self.push(pooled, Op::MaxOverTime { input: features, argmax }, rg))
    }

    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, p: f64, training: bool, rng: &mut R) -> Result<Var> {
        let (out, mask) = ops::dropout(self.value(x), p, training, rng)?;
        let rg = self.needs(x);
        Ok(self.push(out, Op::Dropout { input: x, mask }, rg))
    }

    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let out = ops::linear(self.value(x), self.value(w), self.value(b))?;
        let rg = self.needs(x) || self.needs(w) || self.needs(b);
        Ok(self.push(out, Op::Linear { x, w, b }, rg))
    }

    /// Mean softmax cross-entropy over the rows of `logits` (a vector counts
    /// as one row).
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        let lv = self.value(logits);
        let k = lv.cols();
        let rows = lv.len() / k;
        if targets.len() != rows {
            return Err(Error::dim("cross_entropy", "rows", rows, targets.len()));
        }
        let mut probs = vec![T::zero(); lv.len()];
        let mut total = T::zero();
        for (r, &target) in targets.iter().enumerate() {
            if target >= k {
                return Err(Error::Label(format!("target class {target} out of range for {k} classes")));
            }
            let row = &lv.data()[r * k..(r + 1) * k];
            total += ops::log_sum_exp(row) - row[target];
            ops::softmax_raw(row, &mut probs[r * k..(r + 1) * k]);
        }
        let loss = total / T::lit(rows as f64);
        let rg = self.needs(logits);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                targets: targets.to_vec(),
                probs,
            },
            rg,
        ))
    }

    /// Mean distillation loss over rows against constant teacher logits.
    pub fn distill(
        &mut self,
        logits: Var,
        teacher: &Tensor<T>,
        targets: &[usize],
        temperature: T,
        hard_weight: T,
    ) -> Result<Var> {
        let lv = self.value(logits);
        let k = lv.cols();
        if teacher.len() != lv.len() {
            return Err(Error::dim("kd_loss", "teacher logits", lv.len(), teacher.len()));
        }
        let rows = lv.len() / k;
        if targets.len() != rows {
            return Err(Error::dim("kd_loss", "rows", rows, targets.len()));
        }
        let inv_rows = T::one() / T::lit(rows as f64);
        let mut grad = vec![T::zero(); lv.len()];
        let mut total = T::zero();
        for (r, &target) in targets.iter().enumerate() {
            if target >= k {
                return Err(Error::Label(format!("target class {target} out of range for {k} classes")));
            }
            let span = r * k..(r + 1) * k;
            total += ops::kd_row(
                &lv.data()[span.clone()],
                &teacher.data()[span.clone()],
                temperature,
                target,
                hard_weight,
                Some(&mut grad[span]),
            );
        }
        grad.iter_mut().for_each(|g| *g *= inv_rows);
        let rg = self.needs(logits);
        Ok(self.push(Tensor::scalar(total * inv_rows), Op::Distill { logits, grad }, rg))
    }

    /// `wa * a + wb * b` for scalars.
    pub fn weighted_sum(&mut self, a: Var, wa: T, b: Var, wb: T) -> Var {
        let v = wa * self.value(a).scalar_value() + wb * self.value(b).scalar_value();
        let rg = self.needs(a) || self.needs(b);
        self.push(Tensor::scalar(v), Op::WeightedSum { a, wa, b, wb }, rg)
    }

    /// Contracts a tensor against constant weights to a scalar.
    pub fn project(&mut self, input: Var, weights: &Tensor<T>) -> Result<Var> {
        let x = self.value(input);
        if x.len() != weights.len() {
            return Err(Error::dim("project", "elements", x.len(), weights.len()));
        }
        let v = ops::dot(x.data(), weights.data());
        let rg = self.needs(input);
        Ok(self.push(
            Tensor::scalar(v),
            Op::Project {
                input,
                weights: weights.data().to_vec(),
            },
            rg,
        ))
    }

    /// Winning time indices of every max-pool executed so far, in order.
    pub fn pool_argmaxes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.op {
                Op::MaxOverTime { argmax, .. } => Some(argmax.iter().copied()),
                _ => None,
            })
            .flatten()
            .collect()
    }

    /// Runs the reverse pass from a scalar output.
    pub fn backward(&self, output: Var) -> Result<Gradients<T>> {
        if self.value(output).len() != 1 {
            return Err(Error::dim("backward", "output elements", 1, self.value(output).len()));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[output.0] = Some(Tensor::scalar(T::one()));

        for idx in (0..=output.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor<T>>], v: Var, f: impl FnOnce(&mut [T])) {
        if !self.needs(v) {
            return;
        }
        let slot = grads[v.0].get_or_insert_with(|| Tensor::zeros(self.nodes[v.0].value.shape()));
        f(slot.data_mut());
    }

    fn propagate(&self, node: &Node<T>, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) {
        let gd = g.data();
        match &node.op {
            Op::Leaf => {}
            Op::PadCentered { input, pad } => {
                let d = node.value.cols();
                let n = self.value(*input).rows();
                self.accumulate(grads, *input, |dx| {
                    for (a, &b) in dx.iter_mut().zip(&gd[pad * d..(pad + n) * d]) {
                        *a += b;
                    }
                });
            }
            Op::Conv1d { x, w, b } => {
                let xv = self.value(*x);
                let wv = self.value(*w);
                let (d, c, k) = (xv.cols(), wv.shape()[0], wv.shape()[1]);
                let out_len = node.value.rows();
                let span = k * d;
                self.accumulate(grads, *b, |db| {
                    for t in 0..out_len {
                        for ch in 0..c {
                            db[ch] += gd[t * c + ch];
                        }
                    }
                });
                self.accumulate(grads, *w, |dw| {
                    for t in 0..out_len {
                        let window = &xv.data()[t * d..t * d + span];
                        for ch in 0..c {
                            let gtc = gd[t * c + ch];
                            if gtc == T::zero() {
                                continue;
                            }
                            for (a, &xv) in dw[ch * span..(ch + 1) * span].iter_mut().zip(window) {
                                *a += gtc * xv;
                            }
                        }
                    }
                });
                self.accumulate(grads, *x, |dx| {
                    for t in 0..out_len {
                        for ch in 0..c {
                            let gtc = gd[t * c + ch];
                            if gtc == T::zero() {
                                continue;
                            }
                            let wr = &wv.data()[ch * span..(ch + 1) * span];
                            for (a, &wv) in dx[t * d..t * d + span].iter_mut().zip(wr) {
                                *a += gtc * wv;
                            }
                        }
                    }
                });
            }
            Op::MaxOverTime { input, argmax } => {
                let c = argmax.len();
                self.accumulate(grads, *input, |dx| {
                    for (ch, &t) in argmax.iter().enumerate() {
                        dx[t * c + ch] += gd[ch];
                    }
                });
            }
            Op::Dropout { input, mask } => {
                self.accumulate(grads, *input, |dx| {
                    for ((a, &gv), &m) in dx.iter_mut().zip(gd).zip(mask) {
                        *a += gv * m;
                    }
                });
            }
            Op::Linear { x, w, b } => {
                let xv = self.value(*x);
                let wv = self.value(*w);
                let (input, output) = (wv.shape()[0], wv.shape()[1]);
                let rows = xv.len() / input;
                self.accumulate(grads, *b, |db| {
                    for r in 0..rows {
                        for (a, &gv) in db.iter_mut().zip(&gd[r * output..(r + 1) * output]) {
                            *a += gv;
                        }
                    }
                });
                self.accumulate(grads, *w, |dw| {
                    for r in 0..rows {
                        let gr = &gd[r * output..(r + 1) * output];
                        for i in 0..input {
                            let xi = xv.data()[r * input + i];
                            if xi == T::zero() {
                                continue;
                            }
                            for (a, &gv) in dw[i * output..(i + 1) * output].iter_mut().zip(gr) {
                                *a += xi * gv;
                            }
                        }
                    }
                });
                self.accumulate(grads, *x, |dx| {
                    for r in 0..rows {
                        let gr = &gd[r * output..(r + 1) * output];
                        for i in 0..input {
                            dx[r * input + i] += ops::dot(&wv.data()[i * output..(i + 1) * output], gr);
                        }
                    }
                });
            }
            Op::CrossEntropy { logits, targets, probs } => {
                let k = self.value(*logits).cols();
                let scale = gd[0] / T::lit(targets.len() as f64);
                self.accumulate(grads, *logits, |dl| {
                    for (r, &target) in targets.iter().enumerate() {
                        for j in 0..k {
                            let onehot = if j == target { T::one() } else { T::zero() };
                            dl[r * k + j] += scale * (probs[r * k + j] - onehot);
                        }
                    }
                });
            }
            Op::Distill { logits, grad } => {
                self.accumulate(grads, *logits, |dl| {
                    for (a, &gv) in dl.iter_mut().zip(grad) {
                        *a += gd[0] * gv;
                    }
                });
            }
            Op::WeightedSum { a, wa, b, wb } => {
                self.accumulate(grads, *a, |da| da[0] += *wa * gd[0]);
                self.accumulate(grads, *b, |db| db[0] += *wb * gd[0]);
            }
            Op::Project { input, weights } => {
                self.accumulate(grads, *input, |dx| {
                    for (a, &w) in dx.iter_mut().zip(weights) {
                        *a += gd[0] * w;
                    }
                });
            }
        }
    }
}

/// Result of a reverse pass.
#[derive(Debug)]
pub struct Gradients<T: Real> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient of a recorded value; `None` if nothing flowed into it.
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient of a parameter, zero-filled when the parameter did not
    /// influence the output.
    pub fn of(&self, tape: &GradTape<T>, v: Var) -> Tensor<T> {
        self.get(v)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(tape.value(v).shape()))
    }
}
