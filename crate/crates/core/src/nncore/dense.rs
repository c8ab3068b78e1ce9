use rand::Rng;

use super::linalg::gemm;
use super::{shape_err, NnError, Result, Scalar, Tensor};

/// `y = x·Wᵀ + b` with `x`: N×I, `w`: O×I, `b`: O.
pub fn dense_forward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &[T]) -> Result<Tensor<T>> {
    let (n, i) = x.dims2()?;
    let (o, wi) = w.dims2()?;
    if wi != i || b.len() != o {
        return shape_err(format!("dense {o}×{wi} (bias {}) applied to input width {i}", b.len()));
    }
    let mut y = Tensor::zeros(&[n, o]);
    for row in y.data_mut().chunks_mut(o) {
        row.copy_from_slice(b);
    }
    gemm(false, true, n, o, i, T::one(), x.data(), w.data(), T::one(), y.data_mut());
    Ok(y)
}

/// `(gx, gw, gb)` for [`dense_forward`]; `gx` only when requested.
pub fn dense_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    gy: &Tensor<T>,
    need_input_grad: bool,
) -> Result<(Option<Tensor<T>>, Tensor<T>, Vec<T>)> {
    let (n, i) = x.dims2()?;
    let (o, _) = w.dims2()?;
    if gy.shape() != [n, o] {
        return shape_err(format!("dense output gradient {:?}, expected [{n}, {o}]", gy.shape()));
    }
    let mut gw = Tensor::zeros(&[o, i]);
    gemm(true, false, o, i, n, T::one(), gy.data(), x.data(), T::zero(), gw.data_mut());
    let mut gb = vec![T::zero(); o];
    for row in gy.data().chunks(o) {
        for (g, &v) in gb.iter_mut().zip(row) {
            *g += v;
        }
    }
    let gx = need_input_grad.then(|| {
        let mut gx = Tensor::zeros(&[n, i]);
        gemm(false, false, n, i, o, T::one(), gy.data(), w.data(), T::zero(), gx.data_mut());
        gx
    });
    Ok((gx, gw, gb))
}

pub fn relu_forward<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Gradient is passed where the forward input was positive.
pub fn relu_backward<T: Scalar>(x: &Tensor<T>, gy: &Tensor<T>) -> Result<Tensor<T>> {
    if x.shape() != gy.shape() {
        return shape_err(format!("relu gradient {:?} vs input {:?}", gy.shape(), x.shape()));
    }
    let mut gx = gy.clone();
    for (g, &v) in gx.data_mut().iter_mut().zip(x.data()) {
        if v <= T::zero() {
            *g = T::zero();
        }
    }
    Ok(gx)
}

/// Inverted dropout. Returns the output and the per-element multiplier
/// (0 or 1/(1 − rate)); in inference, or with rate 0, the identity.
pub fn dropout_forward<T: Scalar, R: Rng>(
    x: &Tensor<T>,
    rate: f64,
    training: bool,
    rng: &mut R,
) -> Result<(Tensor<T>, Option<Vec<T>>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NnError::Config(format!("dropout rate {rate} not in [0, 1)")));
    }
    if !training || rate == 0.0 {
        return Ok((x.clone(), None));
    }
    let keep = T::from_f64(1.0 / (1.0 - rate));
    let mask: Vec<T> = (0..x.len())
        .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep })
        .collect();
    let mut y = x.clone();
    for (v, &m) in y.data_mut().iter_mut().zip(&mask) {
        *v *= m;
    }
    Ok((y, Some(mask)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn relu_definition() {
        let x = Tensor::from_vec(&[1, 3], vec![-2.0, 0.0, 3.0]).unwrap();
        assert_eq!(relu_forward(&x).data(), &[0.0, 0.0, 3.0]);
    }

    #[test]
    fn dense_known_values() {
        let x = Tensor::from_vec(&[1, 2], vec![1.0, 2.0]).unwrap();
        let w = Tensor::from_vec(&[2, 2], vec![1.0, 0.0, 3.0, -1.0]).unwrap();
        let y = dense_forward(&x, &w, &[0.5, 0.0]).unwrap();
        assert_eq!(y.data(), &[1.5, 1.0]);
    }

    #[test]
    fn dropout_rate_zero_and_eval_are_identity() {
        let x = Tensor::from_vec(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut rng = seed::rng(0, "t");
        for training in [true, false] {
            assert_eq!(dropout_forward(&x, 0.0, training, &mut rng).unwrap().0, x);
        }
        assert_eq!(dropout_forward(&x, 0.5, false, &mut rng).unwrap().0, x);
        let (y, mask) = dropout_forward(&x, 0.5, true, &mut rng).unwrap();
        for ((&a, &b), &m) in y.data().iter().zip(x.data()).zip(mask.as_ref().unwrap()) {
            assert!(a == 0.0 && m == 0.0 || (a == 2.0 * b && m == 2.0));
        }
        assert!(dropout_forward(&x, 1.0, true, &mut rng).is_err());
    }
}
