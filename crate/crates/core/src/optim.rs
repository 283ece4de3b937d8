//! First-order optimizers over flat lists of parameter tensors.
//!
//! Both optimizers minimize; training code negates its objectives before
//! calling `step`. Slot order must match between construction, parameters
//! and gradients, and all arithmetic is sequential, so updates are
//! bit-reproducible.

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl OptimizerKind {
    /// Adam with the customary defaults and the given step size.
    pub fn adam(lr: f64) -> Self {
        OptimizerKind::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    /// Adam step count; shared across slots, incremented once per `step`.
    t: u64,
    first_moment: Vec<Tensor>,
    second_moment: Vec<Tensor>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, shapes: &[(usize, usize)]) -> Result<Self> {
        let lr = match kind {
            OptimizerKind::Sgd { lr } => lr,
            OptimizerKind::Adam { lr, .. } => lr,
        };
        if !lr.is_finite() || lr <= 0.0 {
            return Err(Error::InvalidArgument {
                name: "learning rate",
                detail: format!("{lr} must be positive"),
            });
        }
        let zeros: Vec<Tensor> = shapes.iter().map(|&(r, c)| Tensor::zeros(r, c)).collect();
        Ok(Optimizer {
            kind,
            t: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
        })
    }

    /// Applies one descent update in place. `params` and `grads` must line up
    /// with the shapes given at construction.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[&Tensor]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(Error::InvalidArgument {
                name: "optimizer slots",
                detail: format!(
                    "{} params, {} grads, {} slots",
                    params.len(),
                    grads.len(),
                    self.first_moment.len()
                ),
            });
        }
        match self.kind {
            OptimizerKind::Sgd { lr } => {
                for (p, g) in params.iter_mut().zip(grads) {
                    for (pv, gv) in p.data.iter_mut().zip(&g.data) {
                        *pv -= lr * gv;
                    }
                }
            }
            OptimizerKind::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => {
                self.t += 1;
                let bc1 = 1.0 - beta1.powi(self.t as i32);
                let bc2 = 1.0 - beta2.powi(self.t as i32);
                for ((p, g), (m, v)) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(self.first_moment.iter_mut().zip(&mut self.second_moment))
                {
                    for k in 0..p.data.len() {
                        let gv = g.data[k];
                        m.data[k] = beta1 * m.data[k] + (1.0 - beta1) * gv;
                        v.data[k] = beta2 * v.data[k] + (1.0 - beta2) * gv * gv;
                        let mhat = m.data[k] / bc1;
                        let vhat = v.data[k] / bc2;
                        p.data[k] -= lr * mhat / (vhat.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}
