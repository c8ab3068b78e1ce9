use super::linalg::gemm;
use super::{shape_err, NnError, Result, Scalar, Tensor};

/// Valid-mode output length `floor((input − kernel) / stride) + 1`, or
/// `None` when the kernel does not fit.
pub fn conv_output_len(input: usize, kernel: usize, stride: usize) -> Option<usize> {
    (kernel >= 1 && stride >= 1 && kernel <= input).then(|| (input - kernel) / stride + 1)
}

pub(crate) fn output_hw(
    h: usize,
    w: usize,
    kernel: (usize, usize),
    stride: (usize, usize),
) -> Result<(usize, usize)> {
    match (conv_output_len(h, kernel.0, stride.0), conv_output_len(w, kernel.1, stride.1)) {
        (Some(oh), Some(ow)) => Ok((oh, ow)),
        _ if stride.0 == 0 || stride.1 == 0 => Err(NnError::Config(format!("stride {stride:?} must be ≥ 1"))),
        _ => Err(NnError::KernelTooLarge {
            kernel,
            input: (h, w),
        }),
    }
}

struct Geometry {
    c: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    sh: usize,
    sw: usize,
    oh: usize,
    ow: usize,
}

impl Geometry {
    fn rows(&self) -> usize {
        self.c * self.kh * self.kw
    }

    fn cols(&self) -> usize {
        self.oh * self.ow
    }

    /// Unfolds one example (`c × h × w`) into `rows × cols`.
    fn im2col<T: Scalar>(&self, x: &[T], col: &mut [T]) {
        let p = self.cols();
        for c in 0..self.c {
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    let row = ((c * self.kh + ky) * self.kw + kx) * p;
                    for oy in 0..self.oh {
                        let src = (c * self.h + oy * self.sh + ky) * self.w + kx;
                        let dst = &mut col[row + oy * self.ow..row + (oy + 1) * self.ow];
                        if self.sw == 1 {
                            dst.copy_from_slice(&x[src..src + self.ow]);
                        } else {
                            for (ox, d) in dst.iter_mut().enumerate() {
                                *d = x[src + ox * self.sw];
                            }
                        }
                    }
                }
            }
        }
    }

    /// Adjoint of [`im2col`]: scatter-adds `col` into `gx`.
    fn col2im<T: Scalar>(&self, col: &[T], gx: &mut [T]) {
        let p = self.cols();
        for c in 0..self.c {
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    let row = ((c * self.kh + ky) * self.kw + kx) * p;
                    for oy in 0..self.oh {
                        let dst = (c * self.h + oy * self.sh + ky) * self.w + kx;
                        let src = &col[row + oy * self.ow..row + (oy + 1) * self.ow];
                        for (ox, &g) in src.iter().enumerate() {
                            gx[dst + ox * self.sw] += g;
                        }
                    }
                }
            }
        }
    }
}

fn geometry<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, stride: (usize, usize)) -> Result<(usize, usize, Geometry)> {
    let (n, c, h, wd) = x.dims4()?;
    let (o, wc, kh, kw) = w.dims4()?;
    if wc != c {
        return shape_err(format!("kernel expects {wc} input channels, input has {c}"));
    }
    let (oh, ow) = output_hw(h, wd, (kh, kw), stride)?;
    Ok((
        n,
        o,
        Geometry {
            c,
            h,
            w: wd,
            kh,
            kw,
            sh: stride.0,
            sw: stride.1,
            oh,
            ow,
        },
    ))
}

/// Valid 2-D convolution. `x`: N×C×H×W, `w`: O×C×KH×KW, `b`: O.
pub fn conv2d_forward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &[T], stride: (usize, usize)) -> Result<Tensor<T>> {
    let (n, o, g) = geometry(x, w, stride)?;
    if b.len() != o {
        return shape_err(format!("bias has {} entries for {o} filters", b.len()));
    }
    let (rows, p) = (g.rows(), g.cols());
    let in_len = g.c * g.h * g.w;
    let mut y = Tensor::zeros(&[n, o, g.oh, g.ow]);
    let mut col = vec![T::zero(); rows * p];
    for i in 0..n {
        g.im2col(&x.data()[i * in_len..(i + 1) * in_len], &mut col);
        let out = &mut y.data_mut()[i * o * p..(i + 1) * o * p];
        for (f, chunk) in out.chunks_mut(p).enumerate() {
            chunk.fill(b[f]);
        }
        gemm(false, false, o, p, rows, T::one(), w.data(), &col, T::one(), out);
    }
    Ok(y)
}

/// Gradients of [`conv2d_forward`]: `(gx, gw, gb)`. `gx` is `None` unless
/// `need_input_grad`.
pub fn conv2d_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    stride: (usize, usize),
    gy: &Tensor<T>,
    need_input_grad: bool,
) -> Result<(Option<Tensor<T>>, Tensor<T>, Vec<T>)> {
    let (n, o, g) = geometry(x, w, stride)?;
    if gy.shape() != [n, o, g.oh, g.ow] {
        return shape_err(format!("output gradient {:?} vs expected {:?}", gy.shape(), [n, o, g.oh, g.ow]));
    }
    let (rows, p) = (g.rows(), g.cols());
    let in_len = g.c * g.h * g.w;
    let mut gw = Tensor::zeros(w.shape());
    let mut gb = vec![T::zero(); o];
    let mut gx = need_input_grad.then(|| Tensor::zeros(x.shape()));
    let mut col = vec![T::zero(); rows * p];
    let mut gcol = vec![T::zero(); rows * p];
    for i in 0..n {
        let gyi = &gy.data()[i * o * p..(i + 1) * o * p];
        for (f, chunk) in gyi.chunks(p).enumerate() {
            gb[f] += chunk.iter().fold(T::zero(), |a, &v| a + v);
        }
        g.im2col(&x.data()[i * in_len..(i + 1) * in_len], &mut col);
        gemm(false, true, o, rows, p, T::one(), gyi, &col, T::one(), gw.data_mut());
        if let Some(gx) = &mut gx {
            gemm(true, false, rows, p, o, T::one(), w.data(), gyi, T::zero(), &mut gcol);
            g.col2im(&gcol, &mut gx.data_mut()[i * in_len..(i + 1) * in_len]);
        }
    }
    Ok((gx, gw, gb))
}
