use super::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments for a fixed list of parameter tensors.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
}

impl AdamState {
    pub fn new(config: AdamConfig, shapes: &[&[usize]]) -> Self {
        Self {
            config,
            step: 0,
            first: shapes.iter().map(|s| Tensor::zeros(s)).collect(),
            second: shapes.iter().map(|s| Tensor::zeros(s)).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[Tensor] {
        &self.first
    }

    pub fn second_moments(&self) -> &[Tensor] {
        &self.second
    }

    /// Applies one update to every parameter in place.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[&Tensor]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::dim("adam_step", "parameter count", self.first.len(), params.len().min(grads.len())));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.first) {
            if p.shape() != m.shape() {
                return Err(Error::dim("adam_step", "parameter elements", m.len(), p.len()));
            }
            if g.shape() != m.shape() {
                return Err(Error::dim("adam_step", "gradient elements", m.len(), g.len()));
            }
        }

        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let t = self.step as i32;
        let c1 = (1.0 - (beta1 as f64).powi(t)) as f32;
        let c2 = (1.0 - (beta2 as f64).powi(t)) as f32;

        for (i, p) in params.iter_mut().enumerate() {
            let g = grads[i].data();
            let m = self.first[i].data_mut();
            let v = self.second[i].data_mut();
            for (j, w) in p.data_mut().iter_mut().enumerate() {
                m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_run(grads: &[f32]) -> Vec<f32> {
        let mut p = Tensor::scalar(1.0f32);
        let mut state = AdamState::new(AdamConfig::default(), &[&[1]]);
        let mut trace = vec![1.0];
        for &g in grads {
            state.step(&mut [&mut p], &[&Tensor::scalar(g)]).unwrap();
            trace.push(p.scalar_value());
        }
        trace
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let trace = scalar_run(&[0.0, 0.0, 0.0]);
        assert!(trace.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m_hat = g and v_hat = g^2 after one step, so the delta is -lr*g/(|g|+eps).
        let trace = scalar_run(&[0.5]);
        let delta = trace[1] - trace[0];
        let oracle = -1e-3 * 0.5 / (0.5 + 1e-8);
        assert!((delta as f64 - oracle).abs() < 1e-7, "{delta}");
    }

    #[test]
    fn constant_gradient_steps_do_not_grow() {
        let trace = scalar_run(&[0.5, 0.5]);
        let d1 = (trace[1] - trace[0]).abs();
        let d2 = (trace[2] - trace[1]).abs();
        assert!(d2 <= d1 * (1.0 + 1e-6), "{d1} {d2}");
    }

    #[test]
    fn step_counter_increments() {
        let mut p = Tensor::scalar(0.0f32);
        let mut state = AdamState::new(AdamConfig::default(), &[&[1]]);
        for i in 1..=3 {
            state.step(&mut [&mut p], &[&Tensor::scalar(1.0)]).unwrap();
            assert_eq!(state.steps(), i);
        }
    }

    #[test]
    fn shape_mismatch() {
        let mut p = Tensor::<f32>::zeros(&[2]);
        let mut state = AdamState::new(AdamConfig::default(), &[&[2]]);
        let g = Tensor::<f32>::zeros(&[3]);
        assert!(matches!(state.step(&mut [&mut p], &[&g]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn deterministic() {
        let run = || scalar_run(&[0.3, -0.2, 0.7, 0.1]);
        assert_eq!(run(), run());
    }
}
