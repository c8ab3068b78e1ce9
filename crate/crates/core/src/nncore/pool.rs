use super::conv::output_hw;
use super::{shape_err, Result, Scalar, Tensor};

/// Max pooling over N×C×H×W. Returns the output and, per output element,
/// the flat input index of its maximum (the first one on ties).
pub fn maxpool_forward<T: Scalar>(
    x: &Tensor<T>,
    kernel: (usize, usize),
    stride: (usize, usize),
) -> Result<(Tensor<T>, Vec<usize>)> {
    let (n, c, h, w) = x.dims4()?;
    let (oh, ow) = output_hw(h, w, kernel, stride)?;
    let mut y = Tensor::zeros(&[n, c, oh, ow]);
    let mut arg = vec![0usize; n * c * oh * ow];
    let xd = x.data();
    let yd = y.data_mut();
    for plane in 0..n * c {
        let base = plane * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = base + oy * stride.0 * w + ox * stride.1;
                for ky in 0..kernel.0 {
                    for kx in 0..kernel.1 {
                        let i = base + (oy * stride.0 + ky) * w + ox * stride.1 + kx;
                        if xd[i] > xd[best] {
                            best = i;
                        }
                    }
                }
                let o = (plane * oh + oy) * ow + ox;
                yd[o] = xd[best];
                arg[o] = best;
            }
        }
    }
    Ok((y, arg))
}

/// Routes each output gradient to its argmax input position.
pub fn maxpool_backward<T: Scalar>(gy: &Tensor<T>, argmax: &[usize], input_shape: &[usize]) -> Result<Tensor<T>> {
    if gy.len() != argmax.len() {
        return shape_err(format!("{} gradients for {} pooled outputs", gy.len(), argmax.len()));
    }
    let mut gx = Tensor::zeros(input_shape);
    for (&i, &g) in argmax.iter().zip(gy.data()) {
        gx.data_mut()[i] += g;
    }
    Ok(gx)
}
