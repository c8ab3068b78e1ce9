//! A small dense-tensor layer library with hand-written backward passes.
//!
//! Tensors are row-major with up to four axes, laid out NCHW for images
//! (batch, channels, height = word axis, width = feature axis). Every
//! operation exists as a pure `*_forward` / `*_backward` function pair; the
//! [`Layer`] enum wraps them with parameters and cached activations.
//!
//! Conventions:
//!
//! * convolutions are valid-mode (no padding):
//!   `out = floor((in − k) / s) + 1` per axis
//! * max-pool stride defaults to the kernel size
//! * batch norm normalizes per channel (NCHW) or per feature (N×F) with
//!   batch statistics in training and running statistics in inference
//! * dropout is inverted (kept units scaled by 1/(1 − rate)) and the
//!   identity in inference
//! * softmax cross-entropy is averaged over the batch
//!
//! Everything is generic over [`Scalar`]: `f32` for training, `f64` for
//! finite-difference gradient checks.

mod conv;
mod dense;
mod gradcheck;
mod gru;
mod io;
mod layers;
mod linalg;
mod loss;
mod norm;
mod optim;
mod pool;

use std::fmt::Debug;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use conv::{conv2d_backward, conv2d_forward, conv_output_len};
pub use dense::{
    dense_backward, dense_forward, dropout_forward, relu_backward, relu_forward,
};
pub use gradcheck::{gradient_check, relative_error};
pub use gru::{Activation, GruCell, GruTrace};
pub use io::{read_tensors, write_tensors};
pub use layers::{BatchNorm, Conv2d, Dense, Dropout, Layer, MaxPool, Sequential};
pub use linalg::gemm;
pub use loss::{softmax, softmax_xent};
pub use norm::{batchnorm_backward, batchnorm_forward, BatchNormCache};
pub use optim::{Adam, Optimizer, OptimizerKind, Sgd};
pub use pool::{maxpool_backward, maxpool_forward};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("kernel {kernel:?} does not fit input {input:?}")]
    KernelTooLarge { kernel: (usize, usize), input: (usize, usize) },
    #[error("class index {index} out of range for {classes} classes")]
    InvalidClassIndex { index: usize, classes: usize },
    #[error("invalid layer configuration: {0}")]
    Config(String),
    #[error("parameter file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NnError>;

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(NnError::ShapeMismatch(msg.into()))
}

/// Element type of tensors.
pub trait Scalar:
    Float + AddAssign + SubAssign + MulAssign + Default + Debug + Send + Sync + 'static
{
    /// `C ← alpha·A·B + beta·C` on strided row/column layouts.
    ///
    /// # Safety
    /// Strides and dimensions must describe memory inside the given slices.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize, k: usize, n: usize, alpha: Self,
        a: *const Self, rsa: isize, csa: isize,
        b: *const Self, rsb: isize, csb: isize,
        beta: Self, c: *mut Self, rsc: isize, csc: isize,
    );

    fn from_f64(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("f64 converts to scalar")
    }

    fn to_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("scalar converts to f64")
    }
}

impl Scalar for f32 {
    unsafe fn gemm_raw(
        m: usize, k: usize, n: usize, alpha: f32,
        a: *const f32, rsa: isize, csa: isize,
        b: *const f32, rsb: isize, csb: isize,
        beta: f32, c: *mut f32, rsc: isize, csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Scalar for f64 {
    unsafe fn gemm_raw(
        m: usize, k: usize, n: usize, alpha: f64,
        a: *const f64, rsa: isize, csa: isize,
        b: *const f64, rsb: isize, csb: isize,
        beta: f64, c: *mut f64, rsc: isize, csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

/// Row-major dense tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        if shape.is_empty() || shape.len() > 4 || shape.contains(&0) {
            return shape_err(format!("invalid shape {shape:?}"));
        }
        if shape.iter().product::<usize>() != data.len() {
            return shape_err(format!("shape {shape:?} needs {} elements, got {}", shape.iter().product::<usize>(), data.len()));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        if shape.iter().product::<usize>() != self.data.len() {
            return shape_err(format!("cannot reshape {:?} to {shape:?}", self.shape));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// The shape as (N, C, H, W); fails unless the tensor has four axes.
    pub fn dims4(&self) -> Result<(usize, usize, usize, usize)> {
        match self.shape[..] {
            [n, c, h, w] => Ok((n, c, h, w)),
            _ => shape_err(format!("expected a 4-axis tensor, got {:?}", self.shape)),
        }
    }

    /// The shape as (rows, cols); fails unless the tensor has two axes.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape[..] {
            [r, c] => Ok((r, c)),
            _ => shape_err(format!("expected a 2-axis tensor, got {:?}", self.shape)),
        }
    }

    pub fn fill(&mut self, value: T) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Converts element type.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| U::from_f64(x.to_f64())).collect(),
        }
    }
}

/// A trainable tensor and its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub value: Tensor<T>,
    pub grad: Option<Tensor<T>>,
}

impl<T: Scalar> Param<T> {
    pub fn new(value: Tensor<T>) -> Self {
        Param { value, grad: None }
    }

    pub fn grad_mut(&mut self) -> &mut Tensor<T> {
        let shape = self.value.shape().to_vec();
        self.grad.get_or_insert_with(|| Tensor::zeros(&shape))
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = &mut self.grad {
            g.fill(T::zero());
        }
    }

    pub fn cast<U: Scalar>(&self) -> Param<U> {
        Param::new(self.value.cast())
    }
}

/// Training mode enables dropout and batch statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_shapes() {
        let t = Tensor::<f32>::from_vec(&[2, 3], vec![1.0; 6]).unwrap();
        assert_eq!(t.dims2().unwrap(), (2, 3));
        assert!(t.dims4().is_err());
        assert!(Tensor::<f32>::from_vec(&[2, 2], vec![1.0; 3]).is_err());
        assert!(Tensor::<f32>::from_vec(&[1, 1, 1, 1, 1], vec![1.0]).is_err());
        let r = t.reshape(&[3, 2]).unwrap();
        assert_eq!(r.shape(), &[3, 2]);
        assert_eq!(r.cast::<f64>().data()[0], 1.0f64);
    }
}
