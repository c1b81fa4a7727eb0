use super::{GradTape, Tensor, Var};
use crate::error::{Error, Result};

/// An element skipped because perturbing it moved a max-pool winner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TieSkip {
    pub input: usize,
    pub element: usize,
}

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    pub ties: Vec<TieSkip>,
}

/// Magnitudes below this are compared absolutely.
const REL_FLOOR: f64 = 1e-3;

/// Compares reverse-mode gradients of a scalar function against central
/// finite differences, in 64-bit arithmetic.
///
/// `f` receives a fresh tape and one trainable leaf per input. Elements whose
/// `±eps` perturbation changes any max-pool winner sit at a non-differentiable
/// point; they are reported in [`GradCheckReport::ties`] and not compared.
pub fn grad_check<F>(f: F, inputs: &[Tensor<f64>], eps: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut GradTape<f64>, &[Var]) -> Result<Var>,
{
    if !(1e-7..=1e-4).contains(&eps) {
        return Err(Error::Config(format!("grad_check eps must be in [1e-7, 1e-4], got {eps}")));
    }
    let eval = |point: &[Tensor<f64>]| -> Result<(f64, Vec<usize>)> {
        let mut tape = GradTape::new();
        let vars: Vec<Var> = point.iter().map(|t| tape.param(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        Ok((tape.value(out).scalar_value(), tape.pool_argmaxes()))
    };

    let mut tape = GradTape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let base_winners = tape.pool_argmaxes();
    let grads = tape.backward(out)?;

    let mut report = GradCheckReport::default();
    let mut point = inputs.to_vec();
    for (i, &v) in vars.iter().enumerate() {
        let analytic = grads.of(&tape, v);
        for j in 0..inputs[i].len() {
            let orig = point[i].data()[j];
            point[i].data_mut()[j] = orig + eps;
            let (plus, w_plus) = eval(&point)?;
            point[i].data_mut()[j] = orig - eps;
            let (minus, w_minus) = eval(&point)?;
            point[i].data_mut()[j] = orig;

            if w_plus != base_winners || w_minus != base_winners {
                report.ties.push(TieSkip { input: i, element: j });
                continue;
            }
            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic.data()[j];
            let denom = a.abs().max(numeric.abs()).max(REL_FLOOR);
            report.max_rel_error = report.max_rel_error.max((a - numeric).abs() / denom);
            report.checked += 1;
        }
    }
    Ok(report)
}
