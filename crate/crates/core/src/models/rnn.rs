use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelError, Network};
use crate::corpus::StageLabel;
use crate::features::MAX_WORDS;
use crate::nncore::{self, Activation, Dense, GruCell, GruTrace, Layer, Mode, Param, Scalar, Tensor};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RnnConfig {
    pub hidden: usize,
    pub activation: Activation,
    /// Steps per sequence; one step per embedding row.
    pub unroll: usize,
    /// Initial update-gate bias. Negative values start the cell close to
    /// carrying its state, which lets gradients cross the zero-padded tail.
    pub update_bias: f64,
}

impl Default for RnnConfig {
    fn default() -> Self {
        RnnConfig {
            hidden: 128,
            activation: Activation::Relu,
            unroll: MAX_WORDS,
            update_bias: -4.0,
        }
    }
}

/// One GRU cell unrolled over the rows of the input; the final hidden
/// state feeds a 4-way dense softmax layer.
#[derive(Debug, Clone)]
pub struct RnnModel<T = f32> {
    pub config: RnnConfig,
    pub cell: GruCell<T>,
    pub output: Layer<T>,
    trace: Option<GruTrace<T>>,
}

/// The default RNN: ReLU candidate, 100 steps.
pub fn build_rnn(input_dim: usize, hidden: usize) -> Result<RnnModel, ModelError> {
    let config = RnnConfig {
        hidden,
        ..RnnConfig::default()
    };
    RnnModel::build(&config, input_dim, 0)
}

impl<T: Scalar> RnnModel<T> {
    pub fn build(config: &RnnConfig, input_dim: usize, seed: u64) -> Result<Self, ModelError> {
        if config.unroll == 0 {
            return Err(ModelError::InvalidConfig("unroll must be ≥ 1".into()));
        }
        let mut rng = seed::rng(seed, "rnn/init");
        let mut cell = GruCell::new(input_dim, config.hidden, config.activation, &mut rng)?;
        let bz = T::from_f64(config.update_bias);
        cell.b.value.data_mut()[..config.hidden].iter_mut().for_each(|b| *b = bz);
        let output = Layer::Dense(Dense::new(config.hidden, StageLabel::COUNT, &mut rng)?);
        Ok(RnnModel {
            config: config.clone(),
            cell,
            output,
            trace: None,
        })
    }

    pub fn unroll(&self) -> usize {
        self.config.unroll
    }
}

impl<T: Scalar> Network<T> for RnnModel<T> {
    fn rows(&self) -> usize {
        self.config.unroll
    }

    fn width(&self) -> usize {
        self.cell.input_dim()
    }

    fn forward(&mut self, x: Tensor<T>, mode: Mode, rng: &mut ChaCha8Rng) -> nncore::Result<Tensor<T>> {
        let (h, trace) = self.cell.forward_sequence(&x, mode == Mode::Train)?;
        self.trace = trace;
        self.output.forward(h, mode, rng)
    }

    fn backward(&mut self, grad_logits: Tensor<T>) -> nncore::Result<()> {
        let gh = self
            .output
            .backward(grad_logits, true)?
            .expect("dense layer returns an input gradient when asked");
        let trace = self
            .trace
            .take()
            .ok_or_else(|| nncore::NnError::Config("backward called without a training-mode forward".into()))?;
        self.cell.backward(&trace, &gh)?;
        Ok(())
    }

    fn infer(&self, x: Tensor<T>) -> nncore::Result<Tensor<T>> {
        let (h, _) = self.cell.forward_sequence(&x, false)?;
        self.output.infer(h)
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut out: Vec<&mut Param<T>> = self.cell.params_mut().into_iter().collect();
        out.extend(self.output.params_mut());
        out
    }

    fn state(&self) -> Vec<&Tensor<T>> {
        let mut out: Vec<&Tensor<T>> = self.cell.params().iter().map(|p| &p.value).collect();
        out.extend(self.output.state());
        out
    }

    fn state_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out: Vec<&mut Tensor<T>> = self.cell.params_mut().into_iter().map(|p| &mut p.value).collect();
        out.extend(self.output.state_mut());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let m = build_rnn(7, 4).unwrap();
        assert_eq!(m.unroll(), 100);
        assert_eq!(m.config.activation, Activation::Relu);
        assert_eq!(m.width(), 7);
    }

    #[test]
    fn zero_inputs_predict_identically() {
        let m = build_rnn(3, 5).unwrap();
        let x = Tensor::<f32>::zeros(&[2, 100, 3]);
        let y = m.infer(x).unwrap();
        assert_eq!(&y.data()[..4], &y.data()[4..]);
    }
}
