use super::{shape_err, Result, Scalar, Tensor};

/// Activations saved by a training-mode forward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache<T> {
    xhat: Vec<T>,
    inv_std: Vec<T>,
}

/// (batch, channels, elements per channel per example).
fn layout<T: Scalar>(x: &Tensor<T>) -> Result<(usize, usize, usize)> {
    match x.shape()[..] {
        [n, c] => Ok((n, c, 1)),
        [n, c, h, w] => Ok((n, c, h * w)),
        _ => shape_err(format!("batch norm needs N×F or N×C×H×W, got {:?}", x.shape())),
    }
}

/// Per-channel normalization `γ·(x − μ)/√(σ² + eps) + β`.
///
/// Training mode normalizes with the biased batch variance and updates the
/// running statistics as `r ← (1 − momentum)·r + momentum·batch` (the
/// running variance uses the unbiased estimate). Inference mode uses the
/// running statistics and returns no cache.
#[allow(clippy::too_many_arguments)]
pub fn batchnorm_forward<T: Scalar>(
    x: &Tensor<T>,
    gamma: &[T],
    beta: &[T],
    running_mean: &mut [T],
    running_var: &mut [T],
    momentum: T,
    eps: T,
    training: bool,
) -> Result<(Tensor<T>, Option<BatchNormCache<T>>)> {
    let (n, c, inner) = layout(x)?;
    if gamma.len() != c || beta.len() != c || running_mean.len() != c || running_var.len() != c {
        return shape_err(format!("batch norm parameters do not match {c} channels"));
    }
    let m = n * inner;
    let xd = x.data();
    let idx = |i: usize, ch: usize, k: usize| (i * c + ch) * inner + k;
    let mut y = Tensor::zeros(x.shape());
    let mut cache = training.then(|| BatchNormCache {
        xhat: vec![T::zero(); x.len()],
        inv_std: vec![T::zero(); c],
    });
    for ch in 0..c {
        let (mean, inv_std) = if training {
            let mf = T::from_f64(m as f64);
            let mut mean = T::zero();
            for i in 0..n {
                for k in 0..inner {
                    mean += xd[idx(i, ch, k)];
                }
            }
            mean = mean / mf;
            let mut var = T::zero();
            for i in 0..n {
                for k in 0..inner {
                    let d = xd[idx(i, ch, k)] - mean;
                    var += d * d;
                }
            }
            var = var / mf;
            let mo = momentum;
            running_mean[ch] = (T::one() - mo) * running_mean[ch] + mo * mean;
            let unbiased = if m > 1 { var * mf / (mf - T::one()) } else { var };
            running_var[ch] = (T::one() - mo) * running_var[ch] + mo * unbiased;
            (mean, T::one() / (var + eps).sqrt())
        } else {
            (running_mean[ch], T::one() / (running_var[ch] + eps).sqrt())
        };
        if let Some(cache) = &mut cache {
            cache.inv_std[ch] = inv_std;
        }
        for i in 0..n {
            for k in 0..inner {
                let j = idx(i, ch, k);
                let xhat = (xd[j] - mean) * inv_std;
                if let Some(cache) = &mut cache {
                    cache.xhat[j] = xhat;
                }
                y.data_mut()[j] = gamma[ch] * xhat + beta[ch];
            }
        }
    }
    Ok((y, cache))
}

/// `(gx, gγ, gβ)` for a training-mode [`batchnorm_forward`].
pub fn batchnorm_backward<T: Scalar>(
    gy: &Tensor<T>,
    gamma: &[T],
    cache: &BatchNormCache<T>,
) -> Result<(Tensor<T>, Vec<T>, Vec<T>)> {
    let (n, c, inner) = layout(gy)?;
    if cache.xhat.len() != gy.len() || gamma.len() != c {
        return shape_err("batch norm gradient does not match the cached forward pass");
    }
    let m = T::from_f64((n * inner) as f64);
    let idx = |i: usize, ch: usize, k: usize| (i * c + ch) * inner + k;
    let g = gy.data();
    let mut gx = Tensor::zeros(gy.shape());
    let mut ggamma = vec![T::zero(); c];
    let mut gbeta = vec![T::zero(); c];
    for ch in 0..c {
        for i in 0..n {
            for k in 0..inner {
                let j = idx(i, ch, k);
                gbeta[ch] += g[j];
                ggamma[ch] += g[j] * cache.xhat[j];
            }
        }
        let scale = gamma[ch] * cache.inv_std[ch] / m;
        for i in 0..n {
            for k in 0..inner {
                let j = idx(i, ch, k);
                gx.data_mut()[j] = scale * (m * g[j] - gbeta[ch] - cache.xhat[j] * ggamma[ch]);
            }
        }
    }
    Ok((gx, ggamma, gbeta))
}
