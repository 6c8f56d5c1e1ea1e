use crate::error::Result;
use crate::tensor::{check_dim, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates plus the number of steps taken.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first: Vec<Tensor>,
    pub second: Vec<Tensor>,
    pub step: u64,
}

impl AdamState {
    pub fn zeros_like(params: &[Tensor]) -> Self {
        let zeros = || params.iter().map(|p| Tensor::zeros(p.shape().to_vec())).collect();
        Self {
            first: zeros(),
            second: zeros(),
            step: 0,
        }
    }

    /// Advances the step counter and applies one bias-corrected update.
    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor], cfg: &AdamConfig) -> Result<()> {
        self.step += 1;
        adam_step(params, grads, &mut self.first, &mut self.second, self.step, cfg)
    }
}

/// One Adam update at step `t` (1-based).
pub fn adam_step(
    params: &mut [Tensor],
    grads: &[Tensor],
    first: &mut [Tensor],
    second: &mut [Tensor],
    t: u64,
    cfg: &AdamConfig,
) -> Result<()> {
    const OP: &str = "adam_step";
    check_dim(OP, "parameter tensors", params.len(), grads.len())?;
    check_dim(OP, "first moments", params.len(), first.len())?;
    check_dim(OP, "second moments", params.len(), second.len())?;
    for (((p, g), m), v) in params.iter().zip(grads).zip(first.iter()).zip(second.iter()) {
        check_dim(OP, "gradient elements", p.len(), g.len())?;
        check_dim(OP, "first moment elements", p.len(), m.len())?;
        check_dim(OP, "second moment elements", p.len(), v.len())?;
    }
    let t = t.max(1) as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    for (((p, g), m), v) in params.iter_mut().zip(grads).zip(first.iter_mut()).zip(second.iter_mut()) {
        let it = p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut().iter_mut())
            .zip(v.data_mut().iter_mut());
        for (((p, &g), m), v) in it {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}
