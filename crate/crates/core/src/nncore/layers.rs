use rand::Rng;

use super::conv::output_hw;
use super::{
    batchnorm_backward, batchnorm_forward, conv2d_backward, conv2d_forward, dense_backward, dense_forward,
    dropout_forward, maxpool_backward, maxpool_forward, relu_backward, relu_forward, shape_err, BatchNormCache,
    Mode, NnError, Param, Result, Scalar, Tensor,
};

fn he_uniform<T: Scalar, R: Rng>(shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor<T> {
    let bound = (6.0 / fan_in as f64).sqrt();
    let data = (0..shape.iter().product::<usize>())
        .map(|_| T::from_f64(rng.gen_range(-bound..bound)))
        .collect();
    Tensor::from_vec(shape, data).expect("shape has no zero axes")
}

fn check_stride(stride: (usize, usize)) -> Result<()> {
    if stride.0 == 0 || stride.1 == 0 {
        return Err(NnError::Config(format!("stride {stride:?} must be ≥ 1")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub w: Param<T>,
    pub b: Param<T>,
    pub stride: (usize, usize),
    input: Option<Tensor<T>>,
}

impl<T: Scalar> Conv2d<T> {
    pub fn new<R: Rng>(in_ch: usize, out_ch: usize, kernel: (usize, usize), stride: (usize, usize), rng: &mut R) -> Result<Self> {
        check_stride(stride)?;
        if in_ch == 0 || out_ch == 0 || kernel.0 == 0 || kernel.1 == 0 {
            return Err(NnError::Config("convolution dimensions must be ≥ 1".into()));
        }
        let fan_in = in_ch * kernel.0 * kernel.1;
        Ok(Conv2d {
            w: Param::new(he_uniform(&[out_ch, in_ch, kernel.0, kernel.1], fan_in, rng)),
            b: Param::new(Tensor::zeros(&[out_ch])),
            stride,
            input: None,
        })
    }

    pub fn kernel(&self) -> (usize, usize) {
        let s = self.w.value.shape();
        (s[2], s[3])
    }

    pub fn out_channels(&self) -> usize {
        self.w.value.shape()[0]
    }
}

#[derive(Debug, Clone)]
pub struct Dense<T> {
    pub w: Param<T>,
    pub b: Param<T>,
    input: Option<Tensor<T>>,
}

impl<T: Scalar> Dense<T> {
    pub fn new<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(NnError::Config("dense dimensions must be ≥ 1".into()));
        }
        Ok(Dense {
            w: Param::new(he_uniform(&[outputs, inputs], inputs, rng)),
            b: Param::new(Tensor::zeros(&[outputs])),
            input: None,
        })
    }

    pub fn outputs(&self) -> usize {
        self.w.value.shape()[0]
    }
}

#[derive(Debug, Clone)]
pub struct BatchNorm<T> {
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    pub momentum: f64,
    pub eps: f64,
    cache: Option<BatchNormCache<T>>,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(channels: usize) -> Result<Self> {
        if channels == 0 {
            return Err(NnError::Config("batch norm needs ≥ 1 channel".into()));
        }
        Ok(BatchNorm {
            gamma: Param::new(Tensor::full(&[channels], T::one())),
            beta: Param::new(Tensor::zeros(&[channels])),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::full(&[channels], T::one()),
            momentum: 0.1,
            eps: 1e-5,
            cache: None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct MaxPool {
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    argmax: Vec<usize>,
    input_shape: Vec<usize>,
}

impl MaxPool {
    /// Stride defaults to the kernel size.
    pub fn new(kernel: (usize, usize), stride: Option<(usize, usize)>) -> Result<Self> {
        let stride = stride.unwrap_or(kernel);
        check_stride(stride)?;
        check_stride(kernel)?;
        Ok(MaxPool {
            kernel,
            stride,
            argmax: Vec::new(),
            input_shape: Vec::new(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Dropout<T> {
    pub rate: f64,
    mask: Option<Vec<T>>,
}

impl<T: Scalar> Dropout<T> {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(NnError::Config(format!("dropout rate {rate} not in [0, 1)")));
        }
        Ok(Dropout { rate, mask: None })
    }
}

/// One stage of a [`Sequential`] network. Each variant caches what its
/// backward pass needs during a training-mode forward.
#[derive(Debug, Clone)]
pub enum Layer<T> {
    Conv2d(Conv2d<T>),
    BatchNorm(BatchNorm<T>),
    Relu(Option<Tensor<T>>),
    MaxPool(MaxPool),
    Dropout(Dropout<T>),
    Flatten(Vec<usize>),
    Dense(Dense<T>),
}

impl<T: Scalar> Layer<T> {
    pub fn relu() -> Self {
        Layer::Relu(None)
    }

    pub fn flatten() -> Self {
        Layer::Flatten(Vec::new())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Layer::Conv2d(_) => "conv2d",
            Layer::BatchNorm(_) => "batchnorm",
            Layer::Relu(_) => "relu",
            Layer::MaxPool(_) => "maxpool",
            Layer::Dropout(_) => "dropout",
            Layer::Flatten(_) => "flatten",
            Layer::Dense(_) => "dense",
        }
    }

    /// Output shape for an input shape, without running the layer.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self {
            Layer::Conv2d(c) => match input {
                &[n, ch, h, w] if ch == c.w.value.shape()[1] => {
                    let (oh, ow) = output_hw(h, w, c.kernel(), c.stride)?;
                    Ok(vec![n, c.out_channels(), oh, ow])
                }
                _ => shape_err(format!("conv2d cannot take {input:?}")),
            },
            Layer::MaxPool(p) => match input {
                &[n, ch, h, w] => {
                    let (oh, ow) = output_hw(h, w, p.kernel, p.stride)?;
                    Ok(vec![n, ch, oh, ow])
                }
                _ => shape_err(format!("maxpool cannot take {input:?}")),
            },
            Layer::Flatten(_) => Ok(vec![input[0], input[1..].iter().product()]),
            Layer::Dense(d) => match input {
                &[n, i] if i == d.w.value.shape()[1] => Ok(vec![n, d.outputs()]),
                _ => shape_err(format!("dense {:?} cannot take {input:?}", d.w.value.shape())),
            },
            Layer::BatchNorm(b) => match input {
                [_, c] | [_, c, _, _] if *c == b.gamma.value.len() => Ok(input.to_vec()),
                _ => shape_err(format!("batch norm over {} channels cannot take {input:?}", b.gamma.value.len())),
            },
            Layer::Relu(_) | Layer::Dropout(_) => Ok(input.to_vec()),
        }
    }

    pub fn forward<R: Rng>(&mut self, x: Tensor<T>, mode: Mode, rng: &mut R) -> Result<Tensor<T>> {
        let train = mode == Mode::Train;
        match self {
            Layer::Conv2d(c) => {
                let y = conv2d_forward(&x, &c.w.value, c.b.value.data(), c.stride)?;
                c.input = train.then_some(x);
                Ok(y)
            }
            Layer::BatchNorm(b) => {
                let (y, cache) = batchnorm_forward(
                    &x,
                    b.gamma.value.data(),
                    b.beta.value.data(),
                    b.running_mean.data_mut(),
                    b.running_var.data_mut(),
                    T::from_f64(b.momentum),
                    T::from_f64(b.eps),
                    train,
                )?;
                b.cache = cache;
                Ok(y)
            }
            Layer::Relu(cache) => {
                let y = relu_forward(&x);
                *cache = train.then_some(x);
                Ok(y)
            }
            Layer::MaxPool(p) => {
                let (y, arg) = maxpool_forward(&x, p.kernel, p.stride)?;
                p.input_shape = x.shape().to_vec();
                p.argmax = arg;
                Ok(y)
            }
            Layer::Dropout(d) => {
                let (y, mask) = dropout_forward(&x, d.rate, train, rng)?;
                d.mask = mask;
                Ok(y)
            }
            Layer::Flatten(shape) => {
                *shape = x.shape().to_vec();
                let n = shape[0];
                let rest = x.len() / n;
                x.reshape(&[n, rest])
            }
            Layer::Dense(d) => {
                let y = dense_forward(&x, &d.w.value, d.b.value.data())?;
                d.input = train.then_some(x);
                Ok(y)
            }
        }
    }

    /// Inference-mode forward that leaves caches and statistics untouched.
    pub fn infer(&self, x: Tensor<T>) -> Result<Tensor<T>> {
        match self {
            Layer::Conv2d(c) => conv2d_forward(&x, &c.w.value, c.b.value.data(), c.stride),
            Layer::BatchNorm(b) => {
                let (mut m, mut v) = (b.running_mean.data().to_vec(), b.running_var.data().to_vec());
                let (y, _) = batchnorm_forward(
                    &x,
                    b.gamma.value.data(),
                    b.beta.value.data(),
                    &mut m,
                    &mut v,
                    T::from_f64(b.momentum),
                    T::from_f64(b.eps),
                    false,
                )?;
                Ok(y)
            }
            Layer::Relu(_) => Ok(relu_forward(&x)),
            Layer::MaxPool(p) => Ok(maxpool_forward(&x, p.kernel, p.stride)?.0),
            Layer::Dropout(_) => Ok(x),
            Layer::Flatten(_) => {
                let n = x.shape()[0];
                let rest = x.len() / n;
                x.reshape(&[n, rest])
            }
            Layer::Dense(d) => dense_forward(&x, &d.w.value, d.b.value.data()),
        }
    }

    /// Accumulates parameter gradients and returns the input gradient
    /// (`None` when `need_input_grad` is false and the layer can skip it).
    pub fn backward(&mut self, gy: Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let missing = || NnError::Config("backward called without a training-mode forward".into());
        match self {
            Layer::Conv2d(c) => {
                let x = c.input.as_ref().ok_or_else(missing)?;
                let (gx, gw, gb) = conv2d_backward(x, &c.w.value, c.stride, &gy, need_input_grad)?;
                accumulate(c.w.grad_mut().data_mut(), gw.data());
                accumulate(c.b.grad_mut().data_mut(), &gb);
                Ok(gx)
            }
            Layer::BatchNorm(b) => {
                let cache = b.cache.as_ref().ok_or_else(missing)?;
                let (gx, gg, gbeta) = batchnorm_backward(&gy, b.gamma.value.data(), cache)?;
                accumulate(b.gamma.grad_mut().data_mut(), &gg);
                accumulate(b.beta.grad_mut().data_mut(), &gbeta);
                Ok(Some(gx))
            }
            Layer::Relu(cache) => Ok(Some(relu_backward(cache.as_ref().ok_or_else(missing)?, &gy)?)),
            Layer::MaxPool(p) => Ok(Some(maxpool_backward(&gy, &p.argmax, &p.input_shape)?)),
            Layer::Dropout(d) => {
                let mut gx = gy;
                if let Some(mask) = &d.mask {
                    for (g, &m) in gx.data_mut().iter_mut().zip(mask) {
                        *g *= m;
                    }
                }
                Ok(Some(gx))
            }
            Layer::Flatten(shape) => Ok(Some(gy.reshape(shape)?)),
            Layer::Dense(d) => {
                let x = d.input.as_ref().ok_or_else(missing)?;
                let (gx, gw, gb) = dense_backward(x, &d.w.value, &gy, need_input_grad)?;
                accumulate(d.w.grad_mut().data_mut(), gw.data());
                accumulate(d.b.grad_mut().data_mut(), &gb);
                Ok(gx)
            }
        }
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        match self {
            Layer::Conv2d(c) => vec![&c.w, &c.b],
            Layer::Dense(d) => vec![&d.w, &d.b],
            Layer::BatchNorm(b) => vec![&b.gamma, &b.beta],
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        match self {
            Layer::Conv2d(c) => vec![&mut c.w, &mut c.b],
            Layer::Dense(d) => vec![&mut d.w, &mut d.b],
            Layer::BatchNorm(b) => vec![&mut b.gamma, &mut b.beta],
            _ => Vec::new(),
        }
    }

    /// Trainable values plus non-trainable state (running statistics), in
    /// a fixed order: the unit of serialization.
    pub fn state(&self) -> Vec<&Tensor<T>> {
        let mut out: Vec<&Tensor<T>> = self.params().into_iter().map(|p| &p.value).collect();
        if let Layer::BatchNorm(b) = self {
            out.push(&b.running_mean);
            out.push(&b.running_var);
        }
        out
    }

    pub fn state_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match self {
            Layer::Conv2d(c) => vec![&mut c.w.value, &mut c.b.value],
            Layer::Dense(d) => vec![&mut d.w.value, &mut d.b.value],
            Layer::BatchNorm(b) => vec![&mut b.gamma.value, &mut b.beta.value, &mut b.running_mean, &mut b.running_var],
            _ => Vec::new(),
        }
    }
}

pub(crate) fn accumulate<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (a, &b) in dst.iter_mut().zip(src) {
        *a += b;
    }
}

/// A chain of layers applied in order.
#[derive(Debug, Clone, Default)]
pub struct Sequential<T> {
    pub layers: Vec<Layer<T>>,
    shapes: Vec<Vec<usize>>,
}

impl<T: Scalar> Sequential<T> {
    pub fn new(layers: Vec<Layer<T>>) -> Self {
        Sequential { layers, shapes: Vec::new() }
    }

    /// Statically derived output shape after each layer.
    pub fn shape_chain(&self, input: &[usize]) -> Result<Vec<Vec<usize>>> {
        let mut cur = input.to_vec();
        let mut out = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            cur = l.output_shape(&cur)?;
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// Output shapes observed in the most recent forward pass.
    pub fn observed_shapes(&self) -> &[Vec<usize>] {
        &self.shapes
    }

    pub fn forward<R: Rng>(&mut self, mut x: Tensor<T>, mode: Mode, rng: &mut R) -> Result<Tensor<T>> {
        self.shapes.clear();
        for l in &mut self.layers {
            x = l.forward(x, mode, rng)?;
            self.shapes.push(x.shape().to_vec());
        }
        Ok(x)
    }

    /// Inference-mode forward through `&self`; safe to share across threads.
    pub fn infer(&self, mut x: Tensor<T>) -> Result<Tensor<T>> {
        for l in &self.layers {
            x = l.infer(x)?;
        }
        Ok(x)
    }

    /// Backward through every layer; returns the input gradient if asked.
    pub fn backward(&mut self, mut gy: Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let last = self.layers.len();
        for (i, l) in self.layers.iter_mut().enumerate().rev() {
            let need = i > 0 || need_input_grad;
            match l.backward(gy, need)? {
                Some(g) => gy = g,
                None if i == 0 => return Ok(None),
                None => return Err(NnError::Config(format!("layer {i} of {last} produced no gradient"))),
            }
        }
        Ok(Some(gy))
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn state(&self) -> Vec<&Tensor<T>> {
        self.layers.iter().flat_map(|l| l.state()).collect()
    }

    pub fn state_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.layers.iter_mut().flat_map(|l| l.state_mut()).collect()
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }
}
