//! SGD and Adam over graph leaves.

use super::Var;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimizerKind {
    Sgd { momentum: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn sgd() -> Self {
        OptimizerKind::Sgd { momentum: 0.0 }
    }
}

struct ParamState {
    first: Matrix,
    second: Matrix,
}

/// Stateful optimizer over a fixed parameter list.
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    params: Vec<Var>,
    state: Vec<ParamState>,
    steps: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, params: Vec<Var>) -> Optimizer {
        assert!(lr > 0.0, "learning rate must be positive");
        let state = params
            .iter()
            .map(|p| ParamState {
                first: Matrix::zeros(p.rows(), p.cols()),
                second: Matrix::zeros(p.rows(), p.cols()),
            })
            .collect();
        Optimizer {
            kind,
            lr,
            params,
            state,
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn zero_grads(&self) {
        for p in &self.params {
            p.zero_grad();
        }
    }

    /// Apply one update from the gradients currently stored on the
    /// parameters. Parameters without a gradient (absent from the last graph)
    /// are left untouched. Non-finite gradients abort with the step index.
    pub fn step(&mut self) -> Result<()> {
        self.steps += 1;
        for (param, state) in self.params.iter().zip(self.state.iter_mut()) {
            let Some(grad) = param.grad() else { continue };
            if grad.data().iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    step: self.steps,
                    reason: "non-finite gradient".into(),
                });
            }
            let mut value = param.value();
            match self.kind {
                OptimizerKind::Sgd { momentum } => {
                    for i in 0..value.len() {
                        let v = momentum * state.first.data()[i] + grad.data()[i];
                        state.first.data_mut()[i] = v;
                        value.data_mut()[i] -= self.lr * v;
                    }
                }
                OptimizerKind::Adam { beta1, beta2, eps } => {
                    let t = self.steps as i32;
                    let bc1 = 1.0 - beta1.powi(t);
                    let bc2 = 1.0 - beta2.powi(t);
                    for i in 0..value.len() {
                        let g = grad.data()[i];
                        let m = beta1 * state.first.data()[i] + (1.0 - beta1) * g;
                        let v = beta2 * state.second.data()[i] + (1.0 - beta2) * g * g;
                        state.first.data_mut()[i] = m;
                        state.second.data_mut()[i] = v;
                        let m_hat = m / bc1;
                        let v_hat = v / bc2;
                        value.data_mut()[i] -= self.lr * m_hat / (v_hat.sqrt() + eps);
                    }
                }
            }
            if value.data().iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    step: self.steps,
                    reason: "non-finite parameter after update".into(),
                });
            }
            param.set_value(value);
        }
        Ok(())
    }
}
