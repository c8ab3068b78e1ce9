//! Gated recurrent unit with backpropagation through time.
//!
//! With gates stacked `[z; r; h]` along the first axis of `Wx` (3H×D),
//! `U` (3H×H) and `b` (3H):
//!
//! ```text
//! z  = σ(Wx_z·x + U_z·h₋ + b_z)
//! r  = σ(Wx_r·x + U_r·h₋ + b_r)
//! h̃  = act(Wx_h·x + U_h·(r ⊙ h₋) + b_h)
//! h  = clip(z ⊙ h̃ + (1 − z) ⊙ h₋, −50, 50)
//! ```
//!
//! The clip has zero gradient where it bites.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linalg::gemm;
use super::{shape_err, NnError, Param, Result, Scalar, Tensor};

pub const HIDDEN_CLIP: f64 = 50.0;

/// Candidate activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    fn apply<T: Scalar>(self, a: T) -> T {
        match self {
            Activation::Relu => a.max(T::zero()),
            Activation::Tanh => a.tanh(),
        }
    }

    /// Derivative given the pre-activation `a` and output `y`.
    fn grad<T: Scalar>(self, a: T, y: T) -> T {
        match self {
            Activation::Relu => {
                if a > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => T::one() - y * y,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            _ => Err(NnError::Config(format!("unknown activation {s:?} (relu|tanh)"))),
        }
    }
}

fn sigmoid<T: Scalar>(a: T) -> T {
    T::one() / (T::one() + (-a).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruCell<T> {
    pub wx: Param<T>,
    pub uh: Param<T>,
    pub b: Param<T>,
    pub activation: Activation,
}

/// Per-step activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct GruTrace<T> {
    x: Tensor<T>,
    /// `h₋` for each step, N×H each.
    h_prev: Vec<Vec<T>>,
    z: Vec<Vec<T>>,
    r: Vec<Vec<T>>,
    cand: Vec<Vec<T>>,
    cand_pre: Vec<Vec<T>>,
    clipped: Vec<Vec<bool>>,
}

impl<T: Scalar> GruCell<T> {
    /// Uniform init in ±1/√H; biases zero.
    pub fn new<R: Rng>(input: usize, hidden: usize, activation: Activation, rng: &mut R) -> Result<Self> {
        if input == 0 || hidden == 0 {
            return Err(NnError::Config(format!("gru needs input ≥ 1 and hidden ≥ 1, got {input}, {hidden}")));
        }
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut uniform = |len: usize| -> Vec<T> { (0..len).map(|_| T::from_f64(rng.gen_range(-bound..bound))).collect() };
        let wx = Tensor::from_vec(&[3 * hidden, input], uniform(3 * hidden * input))?;
        let uh = Tensor::from_vec(&[3 * hidden, hidden], uniform(3 * hidden * hidden))?;
        Ok(GruCell {
            wx: Param::new(wx),
            uh: Param::new(uh),
            b: Param::new(Tensor::zeros(&[3 * hidden])),
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.wx.value.shape()[1]
    }

    pub fn hidden(&self) -> usize {
        self.uh.value.shape()[1]
    }

    pub fn params_mut(&mut self) -> [&mut Param<T>; 3] {
        [&mut self.wx, &mut self.uh, &mut self.b]
    }

    pub fn params(&self) -> [&Param<T>; 3] {
        [&self.wx, &self.uh, &self.b]
    }

    /// One step: `x` N×D, `h_prev` N×H → N×H.
    pub fn step(&self, x: &Tensor<T>, h_prev: &Tensor<T>) -> Result<Tensor<T>> {
        let (n, d) = x.dims2()?;
        if h_prev.shape() != [n, self.hidden()] {
            return shape_err(format!("hidden state {:?}, expected [{n}, {}]", h_prev.shape(), self.hidden()));
        }
        let seq = x.clone().reshape(&[n, 1, d])?;
        let (h, _) = self.run(&seq, h_prev.data(), false)?;
        Ok(h)
    }

    /// Runs the cell over `x` (N×T×D) from a zero state; returns the final
    /// hidden state (N×H) and, if requested, the trace for [`Self::backward`].
    pub fn forward_sequence(&self, x: &Tensor<T>, keep_trace: bool) -> Result<(Tensor<T>, Option<GruTrace<T>>)> {
        let n = x.shape()[0];
        let h0 = vec![T::zero(); n * self.hidden()];
        self.run(x, &h0, keep_trace)
    }

    fn run(&self, x: &Tensor<T>, h0: &[T], keep_trace: bool) -> Result<(Tensor<T>, Option<GruTrace<T>>)> {
        let (n, steps, d) = match x.shape()[..] {
            [n, t, d] => (n, t, d),
            _ => return shape_err(format!("gru input must be N×T×D, got {:?}", x.shape())),
        };
        if d != self.input_dim() {
            return shape_err(format!("gru input width {d}, cell expects {}", self.input_dim()));
        }
        let h = self.hidden();
        let g = 3 * h;
        // Input projections for every (example, step) at once: (N·T)×3H.
        let mut ax = vec![T::zero(); n * steps * g];
        for row in ax.chunks_mut(g) {
            row.copy_from_slice(self.b.value.data());
        }
        gemm(false, true, n * steps, g, d, T::one(), x.data(), self.wx.value.data(), T::one(), &mut ax);

        let u = self.uh.value.data();
        let clip = T::from_f64(HIDDEN_CLIP);
        let mut trace = keep_trace.then(|| GruTrace {
            x: x.clone(),
            h_prev: Vec::with_capacity(steps),
            z: Vec::with_capacity(steps),
            r: Vec::with_capacity(steps),
            cand: Vec::with_capacity(steps),
            cand_pre: Vec::with_capacity(steps),
            clipped: Vec::with_capacity(steps),
        });
        let mut hcur = h0.to_vec();
        let mut hu = vec![T::zero(); n * 2 * h];
        let mut rh = vec![T::zero(); n * h];
        let mut hc = vec![T::zero(); n * h];
        for t in 0..steps {
            gemm(false, true, n, 2 * h, h, T::one(), &hcur, &u[..2 * h * h], T::zero(), &mut hu);
            let mut z = vec![T::zero(); n * h];
            let mut r = vec![T::zero(); n * h];
            for i in 0..n {
                let a = &ax[(i * steps + t) * g..(i * steps + t + 1) * g];
                for j in 0..h {
                    z[i * h + j] = sigmoid(a[j] + hu[i * 2 * h + j]);
                    r[i * h + j] = sigmoid(a[h + j] + hu[i * 2 * h + h + j]);
                    rh[i * h + j] = r[i * h + j] * hcur[i * h + j];
                }
            }
            gemm(false, true, n, h, h, T::one(), &rh, &u[2 * h * h..], T::zero(), &mut hc);
            let mut pre = vec![T::zero(); n * h];
            let mut cand = vec![T::zero(); n * h];
            let mut clipped = vec![false; n * h];
            let mut next = vec![T::zero(); n * h];
            for i in 0..n {
                let a = &ax[(i * steps + t) * g..(i * steps + t + 1) * g];
                for j in 0..h {
                    let k = i * h + j;
                    pre[k] = a[2 * h + j] + hc[k];
                    cand[k] = self.activation.apply(pre[k]);
                    let raw = z[k] * cand[k] + (T::one() - z[k]) * hcur[k];
                    clipped[k] = raw > clip || raw < -clip;
                    next[k] = raw.max(-clip).min(clip);
                }
            }
            let prev = std::mem::replace(&mut hcur, next);
            if let Some(tr) = &mut trace {
                tr.h_prev.push(prev);
                tr.z.push(z);
                tr.r.push(r);
                tr.cand.push(cand);
                tr.cand_pre.push(pre);
                tr.clipped.push(clipped);
            }
        }
        Ok((Tensor::from_vec(&[n, h], hcur)?, trace))
    }

    /// Backpropagates `gh` (gradient of the final hidden state, N×H) through
    /// all steps, accumulating into the parameter gradients. Returns the
    /// gradient with respect to the input sequence.
    pub fn backward(&mut self, trace: &GruTrace<T>, gh: &Tensor<T>) -> Result<Tensor<T>> {
        let (n, steps, d) = match trace.x.shape()[..] {
            [n, t, d] => (n, t, d),
            _ => return shape_err("gru trace holds no sequence"),
        };
        let h = self.hidden();
        let g = 3 * h;
        if gh.shape() != [n, h] {
            return shape_err(format!("gru output gradient {:?}, expected [{n}, {h}]", gh.shape()));
        }
        let u = self.uh.value.data().to_vec();
        let mut gu = vec![T::zero(); g * h];
        let mut gax = vec![T::zero(); n * steps * g];
        let mut ghcur = gh.data().to_vec();
        let mut gates = vec![T::zero(); n * g];
        let mut rh = vec![T::zero(); n * h];
        let mut grh = vec![T::zero(); n * h];
        let mut ghu = vec![T::zero(); n * h];
        for t in (0..steps).rev() {
            let (hp, z, r) = (&trace.h_prev[t], &trace.z[t], &trace.r[t]);
            let (cand, pre, clipped) = (&trace.cand[t], &trace.cand_pre[t], &trace.clipped[t]);
            let mut ghprev = vec![T::zero(); n * h];
            for i in 0..n {
                for j in 0..h {
                    let k = i * h + j;
                    let graw = if clipped[k] { T::zero() } else { ghcur[k] };
                    let gz = graw * (cand[k] - hp[k]);
                    let gc = graw * z[k];
                    ghprev[k] = graw * (T::one() - z[k]);
                    gates[i * g + j] = gz * z[k] * (T::one() - z[k]);
                    gates[i * g + 2 * h + j] = gc * self.activation.grad(pre[k], cand[k]);
                    rh[k] = r[k] * hp[k];
                }
            }
            // Candidate path: pre_h = … + U_h·(r ⊙ h₋).
            for i in 0..n {
                grh[i * h..(i + 1) * h].copy_from_slice(&gates[i * g + 2 * h..(i + 1) * g]);
            }
            gemm(true, false, h, h, n, T::one(), &grh, &rh, T::one(), &mut gu[2 * h * h..]);
            gemm(false, false, n, h, h, T::one(), &grh.clone(), &u[2 * h * h..], T::zero(), &mut grh);
            for i in 0..n {
                for j in 0..h {
                    let k = i * h + j;
                    let gr = grh[k] * hp[k];
                    ghprev[k] += grh[k] * r[k];
                    gates[i * g + h + j] = gr * r[k] * (T::one() - r[k]);
                }
            }
            // Gate paths through U_z, U_r.
            let mut gzr = vec![T::zero(); n * 2 * h];
            for i in 0..n {
                gzr[i * 2 * h..(i + 1) * 2 * h].copy_from_slice(&gates[i * g..i * g + 2 * h]);
            }
            gemm(true, false, 2 * h, h, n, T::one(), &gzr, hp, T::one(), &mut gu[..2 * h * h]);
            gemm(false, false, n, h, 2 * h, T::one(), &gzr, &u[..2 * h * h], T::zero(), &mut ghu);
            for (a, &b) in ghprev.iter_mut().zip(&ghu) {
                *a += b;
            }
            for i in 0..n {
                gax[(i * steps + t) * g..(i * steps + t + 1) * g].copy_from_slice(&gates[i * g..(i + 1) * g]);
            }
            ghcur = ghprev;
        }
        for (a, &b) in self.uh.grad_mut().data_mut().iter_mut().zip(&gu) {
            *a += b;
        }
        gemm(true, false, g, d, n * steps, T::one(), &gax, trace.x.data(), T::one(), self.wx.grad_mut().data_mut());
        let gb = self.b.grad_mut().data_mut();
        for row in gax.chunks(g) {
            for (a, &b) in gb.iter_mut().zip(row) {
                *a += b;
            }
        }
        let mut gx = Tensor::zeros(trace.x.shape());
        gemm(false, false, n * steps, d, g, T::one(), &gax, self.wx.value.data(), T::zero(), gx.data_mut());
        Ok(gx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn cell(d: usize, h: usize) -> GruCell<f64> {
        GruCell::new(d, h, Activation::Relu, &mut seed::rng(3, "gru")).unwrap()
    }

    #[test]
    fn update_gate_open_gives_candidate() {
        // z → 1 and r → 0: the candidate sees only the input.
        let mut c = cell(2, 3);
        for j in 0..3 {
            c.b.value.data_mut()[j] = 1e3;
            c.b.value.data_mut()[3 + j] = -1e3;
        }
        let x = Tensor::from_vec(&[1, 2], vec![0.3, -0.2]).unwrap();
        let a = c.step(&x, &Tensor::from_vec(&[1, 3], vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
        let b = c.step(&x, &Tensor::from_vec(&[1, 3], vec![-4.0, 0.5, 9.0]).unwrap()).unwrap();
        for (j, (p, q)) in a.data().iter().zip(b.data()).enumerate() {
            assert!((p - q).abs() < 1e-12);
            let pre: f64 = (0..2).map(|k| c.wx.value.data()[(6 + j) * 2 + k] * x.data()[k]).sum();
            assert!((p - pre.max(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn update_gate_closed_carries_state() {
        let mut c = cell(2, 3);
        for j in 0..3 {
            c.b.value.data_mut()[j] = -1e3;
        }
        let x = Tensor::from_vec(&[1, 2], vec![0.3, -0.2]).unwrap();
        let hp = Tensor::from_vec(&[1, 3], vec![1.0, -2.0, 3.0]).unwrap();
        let h = c.step(&x, &hp).unwrap();
        for (p, q) in h.data().iter().zip(hp.data()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_sequences_agree() {
        let c = cell(4, 5);
        let x = Tensor::zeros(&[2, 7, 4]);
        let (h, _) = c.forward_sequence(&x, false).unwrap();
        assert_eq!(&h.data()[..5], &h.data()[5..]);
    }

    #[test]
    fn hidden_state_is_clipped() {
        let mut c = cell(1, 1);
        c.activation = Activation::Relu;
        c.wx.value.data_mut().copy_from_slice(&[1e3, -1e3, 1e3]);
        c.b.value.data_mut().copy_from_slice(&[1e3, 0.0, 0.0]);
        let x = Tensor::from_vec(&[1, 1, 1], vec![1.0]).unwrap();
        let (h, _) = c.forward_sequence(&x, false).unwrap();
        assert_eq!(h.data()[0], HIDDEN_CLIP);
    }

    #[test]
    fn width_mismatch() {
        let c = cell(4, 2);
        assert!(matches!(c.forward_sequence(&Tensor::zeros(&[1, 2, 3]), false), Err(NnError::ShapeMismatch(_))));
    }
}
