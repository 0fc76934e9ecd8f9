//! Adam with bias correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    /// DCGAN-style defaults.
    fn default() -> Self {
        AdamHyper {
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamHyper {
    /// `lr = 0` is accepted and freezes the parameters.
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr >= 0.0
            && self.lr.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.epsilon.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Adam hyperparameters {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Tensor,
    pub v: Tensor,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn new(shape: &[usize], hyper: AdamHyper) -> Result<Self> {
        hyper.validate()?;
        Ok(AdamState {
            step: 0,
            m: Tensor::zeros(shape),
            v: Tensor::zeros(shape),
            hyper,
        })
    }
}

/// One Adam update of `param` in place; increments `state.step`.
pub fn adam_step(param: &mut Tensor, grad: &Tensor, state: &mut AdamState) -> Result<()> {
    if param.shape() != grad.shape() {
        return Err(Error::dim("adam_step", param.shape(), grad.shape()));
    }
    if param.shape() != state.m.shape() {
        return Err(Error::dim("adam_step", param.shape(), state.m.shape()));
    }
    let AdamHyper {
        lr,
        beta1,
        beta2,
        epsilon,
    } = state.hyper;
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);

    let m = state.m.data_mut();
    let v = state.v.data_mut();
    for (i, p) in param.data_mut().iter_mut().enumerate() {
        let g = grad.data()[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
    param.check_finite("adam_step")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyper(lr: f64) -> AdamHyper {
        AdamHyper {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    #[test]
    fn zero_gradient_leaves_param() {
        let mut p = Tensor::vector(&[1.5, -2.0, 0.25]).unwrap();
        let before = p.clone();
        let mut s = AdamState::new(p.shape(), hyper(0.1)).unwrap();
        adam_step(&mut p, &Tensor::zeros(&[3]), &mut s).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m̂ = g = 1, v̂ = g² = 1 after bias correction, so Δ = lr / (1 + ε).
        let mut p = Tensor::scalar(0.0);
        let mut s = AdamState::new(&[1], hyper(0.1)).unwrap();
        adam_step(&mut p, &Tensor::scalar(1.0), &mut s).unwrap();
        let expected = -0.1 / (1.0 + 1e-8);
        assert!((p.data()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn converges_on_quadratic() {
        let mut w = Tensor::scalar(0.0);
        let mut s = AdamState::new(&[1], hyper(0.05)).unwrap();
        for _ in 0..2000 {
            let g = Tensor::scalar(2.0 * (w.data()[0] - 3.0));
            adam_step(&mut w, &g, &mut s).unwrap();
        }
        assert!((w.data()[0] - 3.0).abs() < 1e-3, "w = {:?}", w);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = Tensor::zeros(&[2]);
        let mut s = AdamState::new(&[2], hyper(0.1)).unwrap();
        assert!(matches!(
            adam_step(&mut p, &Tensor::zeros(&[3]), &mut s),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn hyper_validation() {
        assert!(hyper(0.0).validate().is_ok());
        assert!(hyper(-1.0).validate().is_err());
        assert!(AdamHyper { beta1: 1.0, ..hyper(0.1) }.validate().is_err());
        assert!(AdamHyper { epsilon: 0.0, ..hyper(0.1) }.validate().is_err());
    }
}
