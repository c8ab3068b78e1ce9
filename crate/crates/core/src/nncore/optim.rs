use serde::{Deserialize, Serialize};

use super::{shape_err, NnError, Param, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

impl std::str::FromStr for OptimizerKind {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(OptimizerKind::Adam),
            "sgd" => Ok(OptimizerKind::Sgd),
            _ => Err(NnError::Config(format!("unknown optimizer {s:?} (adam|sgd)"))),
        }
    }
}

/// Adam with bias-corrected moments. State is kept in f64 and indexed by
/// parameter position, so the same parameter list must be passed every step.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    fn step<T: Scalar>(&mut self, params: &mut [&mut Param<T>]) -> Result<()> {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.value.len()]).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() || self.m.iter().zip(params.iter()).any(|(m, p)| m.len() != p.value.len()) {
            return shape_err("optimizer state does not match the parameter list");
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let Some(g) = p.grad.take() else { continue };
            for (((w, &g), m), v) in p.value.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut()).zip(v.iter_mut()) {
                let g = g.to_f64();
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let update = self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
                *w = T::from_f64(w.to_f64() - update);
            }
            let mut g = g;
            g.fill(T::zero());
            p.grad = Some(g);
        }
        Ok(())
    }
}

/// Plain gradient descent.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub lr: f64,
}

impl Sgd {
    fn step<T: Scalar>(&mut self, params: &mut [&mut Param<T>]) {
        let lr = T::from_f64(self.lr);
        for p in params.iter_mut() {
            let Some(mut g) = p.grad.take() else { continue };
            for (w, &g) in p.value.data_mut().iter_mut().zip(g.data()) {
                *w -= lr * g;
            }
            g.fill(T::zero());
            p.grad = Some(g);
        }
    }
}

#[derive(Debug, Clone)]
pub enum Optimizer {
    Adam(Adam),
    Sgd(Sgd),
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(NnError::Config(format!("learning rate {lr} must be positive")));
        }
        Ok(match kind {
            OptimizerKind::Adam => Optimizer::Adam(Adam::new(lr)),
            OptimizerKind::Sgd => Optimizer::Sgd(Sgd { lr }),
        })
    }

    /// Applies accumulated gradients and resets them to zero. Parameters
    /// without a gradient are left untouched.
    pub fn step<T: Scalar>(&mut self, params: &mut [&mut Param<T>]) -> Result<()> {
        for p in params.iter() {
            if let Some(g) = &p.grad {
                if g.shape() != p.value.shape() {
                    return shape_err(format!("gradient {:?} for parameter {:?}", g.shape(), p.value.shape()));
                }
            }
        }
        match self {
            Optimizer::Adam(a) => a.step(params),
            Optimizer::Sgd(s) => {
                s.step(params);
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::Tensor;

    /// Smallest ‖w‖ reached on f(w) = ‖w‖² within `steps` updates.
    fn bowl(kind: OptimizerKind, lr: f64, steps: usize) -> f64 {
        let mut p = Param::new(Tensor::from_vec(&[3], vec![0.5f64, -0.3, 0.2]).unwrap());
        let mut opt = Optimizer::new(kind, lr).unwrap();
        let mut best = f64::INFINITY;
        for _ in 0..steps {
            let g = p.value.map(|w| 2.0 * w);
            *p.grad_mut() = g;
            opt.step(&mut [&mut p]).unwrap();
            best = best.min(p.value.data().iter().map(|w| w * w).sum::<f64>().sqrt());
        }
        best
    }

    #[test]
    fn adam_solves_quadratic_bowl() {
        let n = bowl(OptimizerKind::Adam, 0.001, 2000); assert!(n < 1e-3, "{n}");
    }

    #[test]
    fn sgd_solves_quadratic_bowl() {
        assert!(bowl(OptimizerKind::Sgd, 0.1, 200) < 1e-6);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let start = Tensor::from_vec(&[2], vec![1.5f32, -2.0]).unwrap();
        let mut p = Param::new(start.clone());
        p.grad_mut();
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.01).unwrap();
        for _ in 0..5 {
            opt.step(&mut [&mut p]).unwrap();
        }
        assert_eq!(p.value, start);
    }

    #[test]
    fn deterministic_updates() {
        assert_eq!(bowl(OptimizerKind::Adam, 0.001, 50), bowl(OptimizerKind::Adam, 0.001, 50));
    }

    #[test]
    fn rejects_bad_lr_and_shapes() {
        assert!(Optimizer::new(OptimizerKind::Sgd, 0.0).is_err());
        let mut p = Param::new(Tensor::<f32>::zeros(&[2]));
        p.grad = Some(Tensor::zeros(&[3]));
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.1).unwrap();
        assert!(opt.step(&mut [&mut p]).is_err());
    }
}
