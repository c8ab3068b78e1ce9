use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelError, Network};
use crate::features::MAX_WORDS;
use crate::nncore::{self, BatchNorm, Conv2d, Dense, Dropout, Layer, MaxPool, Mode, Param, Scalar, Sequential, Tensor};
use crate::seed;
use crate::corpus::StageLabel;

/// Smallest accepted feature width (the widest kernel in the default
/// architecture spans three rows; widths below that are rejected outright).
pub const MIN_FEATURE_WIDTH: usize = 3;

/// CNN hyperparameters. Kernels and strides are (rows, columns), rows
/// running along the word axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CnnConfig {
    pub rows: usize,
    pub conv1_maps: usize,
    pub conv1_kernel: (usize, usize),
    pub conv1_stride: (usize, usize),
    pub pool1: (usize, usize),
    pub conv2_maps: usize,
    pub conv2_kernel: (usize, usize),
    pub conv2_stride: (usize, usize),
    pub pool2: (usize, usize),
    pub dropout: f64,
    pub hidden: usize,
    pub batch_norm: bool,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            rows: MAX_WORDS,
            conv1_maps: 100,
            conv1_kernel: (5, 1),
            conv1_stride: (2, 1),
            pool1: (5, 1),
            conv2_maps: 200,
            conv2_kernel: (3, 1),
            conv2_stride: (2, 1),
            pool2: (3, 1),
            dropout: 0.5,
            hidden: 200,
            batch_norm: true,
        }
    }
}

impl CnnConfig {
    /// The layer list for a `rows × width` single-channel input:
    /// conv → [bn] → relu → pool → conv → [bn] → relu → pool → flatten →
    /// dropout → dense → [bn] → relu → dense(4).
    pub fn network<T: Scalar>(&self, width: usize, seed: u64) -> Result<Sequential<T>, ModelError> {
        if width < MIN_FEATURE_WIDTH {
            return Err(ModelError::FeatureWidthTooSmall {
                width,
                min: MIN_FEATURE_WIDTH,
            });
        }
        let mut rng = seed::rng(seed, "cnn/init");
        let bn = |c: usize| -> Result<Option<Layer<T>>, ModelError> {
            Ok(if self.batch_norm { Some(Layer::BatchNorm(BatchNorm::new(c)?)) } else { None })
        };
        let mut layers = vec![Layer::Conv2d(Conv2d::new(1, self.conv1_maps, self.conv1_kernel, self.conv1_stride, &mut rng)?)];
        layers.extend(bn(self.conv1_maps)?);
        layers.push(Layer::relu());
        layers.push(Layer::MaxPool(MaxPool::new(self.pool1, None)?));
        layers.push(Layer::Conv2d(Conv2d::new(self.conv1_maps, self.conv2_maps, self.conv2_kernel, self.conv2_stride, &mut rng)?));
        layers.extend(bn(self.conv2_maps)?);
        layers.push(Layer::relu());
        layers.push(Layer::MaxPool(MaxPool::new(self.pool2, None)?));
        layers.push(Layer::flatten());
        // Dense input size follows from the geometry of the layers so far.
        let partial: Sequential<T> = Sequential::new(layers);
        let flat = partial.shape_chain(&[1, 1, self.rows, width]).map_err(ModelError::from)?;
        let flat = flat.last().map(|s| s[1]).unwrap_or(0);
        let mut layers = partial.layers;
        layers.push(Layer::Dropout(Dropout::new(self.dropout)?));
        layers.push(Layer::Dense(Dense::new(flat, self.hidden, &mut rng)?));
        layers.extend(bn(self.hidden)?);
        layers.push(Layer::relu());
        layers.push(Layer::Dense(Dense::new(self.hidden, StageLabel::COUNT, &mut rng)?));
        Ok(Sequential::new(layers))
    }
}

/// The convolutional classifier over a 1-channel `rows × width` image.
#[derive(Debug, Clone)]
pub struct CnnModel<T = f32> {
    pub config: CnnConfig,
    width: usize,
    pub net: Sequential<T>,
}

/// The default CNN for a given feature width.
pub fn build_cnn(feature_width: usize) -> Result<CnnModel, ModelError> {
    CnnModel::build(&CnnConfig::default(), feature_width, 0)
}

impl<T: Scalar> CnnModel<T> {
    pub fn build(config: &CnnConfig, width: usize, seed: u64) -> Result<Self, ModelError> {
        Ok(CnnModel {
            config: config.clone(),
            width,
            net: config.network(width, seed)?,
        })
    }

    /// Flattened input length, `rows × width`.
    pub fn input_length(&self) -> usize {
        self.config.rows * self.width
    }

    pub fn dropout_rate(&self) -> Option<f64> {
        self.net.layers.iter().find_map(|l| match l {
            Layer::Dropout(d) => Some(d.rate),
            _ => None,
        })
    }

    /// `(layer name, output shape)` per layer for a batch of one, derived
    /// from the geometry alone.
    pub fn shape_chain(&self) -> Result<Vec<(&'static str, Vec<usize>)>, ModelError> {
        let shapes = self.net.shape_chain(&[1, 1, self.config.rows, self.width])?;
        Ok(self.net.layers.iter().map(|l| l.name()).zip(shapes).collect())
    }

    fn image(&self, x: Tensor<T>) -> nncore::Result<Tensor<T>> {
        let n = x.shape()[0];
        x.reshape(&[n, 1, self.config.rows, self.width])
    }
}

impl<T: Scalar> Network<T> for CnnModel<T> {
    fn rows(&self) -> usize {
        self.config.rows
    }

    fn width(&self) -> usize {
        self.width
    }

    fn forward(&mut self, x: Tensor<T>, mode: Mode, rng: &mut ChaCha8Rng) -> nncore::Result<Tensor<T>> {
        let x = self.image(x)?;
        self.net.forward(x, mode, rng)
    }

    fn backward(&mut self, grad_logits: Tensor<T>) -> nncore::Result<()> {
        self.net.backward(grad_logits, false).map(|_| ())
    }

    fn infer(&self, x: Tensor<T>) -> nncore::Result<Tensor<T>> {
        self.net.infer(self.image(x)?)
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.net.params_mut()
    }

    fn state(&self) -> Vec<&Tensor<T>> {
        self.net.state()
    }

    fn state_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.net.state_mut()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry_for_305() {
        let m = build_cnn(305).unwrap();
        assert_eq!(m.input_length(), 30_500);
        assert_eq!(m.dropout_rate(), Some(0.5));
        let chain = m.shape_chain().unwrap();
        let conv: Vec<_> = chain.iter().filter(|(n, _)| *n == "conv2d").map(|(_, s)| s.clone()).collect();
        assert_eq!(conv, [vec![1, 100, 48, 305], vec![1, 200, 4, 305]]);
        let pools: Vec<_> = chain.iter().filter(|(n, _)| *n == "maxpool").map(|(_, s)| s.clone()).collect();
        assert_eq!(pools, [vec![1, 100, 9, 305], vec![1, 200, 1, 305]]);
        assert_eq!(chain.iter().find(|(n, _)| *n == "flatten").unwrap().1, [1, 61_000]);
        assert_eq!(chain.last().unwrap().1, [1, 4]);
    }

    #[test]
    fn narrow_width_rejected() {
        assert!(matches!(build_cnn(2), Err(ModelError::FeatureWidthTooSmall { width: 2, min: 3 })));
    }
}
