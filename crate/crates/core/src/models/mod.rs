//! The neural classifiers: a CNN over the padded embedding matrix and a
//! single GRU cell unrolled over its rows.
//!
//! Both implement [`Network`], so training, prediction and serialization
//! are shared. Inputs are batches of [`EmbeddedMessage`] stacked into an
//! `N × rows × width` tensor.
//!
//! Model files start with one JSON line describing the architecture
//! (`format: "stagegate-nn"`, `version: 1`), followed by the nncore
//! parameter dump in layer order.

mod cnn;
mod rnn;
mod search;

use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::StageLabel;
use crate::features::EmbeddedMessage;
use crate::nncore::{self, read_tensors, softmax, softmax_xent, write_tensors, Mode, NnError, Optimizer, OptimizerKind, Param, Scalar, Tensor};
use crate::parallel::par_map;
use crate::seed;
use crate::svm::argmax_label;

pub use cnn::{build_cnn, CnnConfig, CnnModel, MIN_FEATURE_WIDTH};
pub use rnn::{build_rnn, RnnConfig, RnnModel};
pub use search::{random_search, ParamRange, SearchSpace, Trial, TrialParams};

const MODEL_FORMAT: &str = "stagegate-nn";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("feature width {width} is below the minimum of {min}")]
    FeatureWidthTooSmall { width: usize, min: usize },
    #[error("no training data")]
    EmptyData,
    #[error("{inputs} inputs but {labels} labels")]
    LengthMismatch { inputs: usize, labels: usize },
    #[error("input {index} is {found:?} (rows × width), model expects {expected:?}")]
    InputShape {
        index: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("input {0} has non-zero rows past its true length")]
    NonZeroPadding(usize),
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("search space has no axes")]
    EmptySpace,
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// A classifier producing 4 logits from an `N × rows × width` batch.
pub trait Network<T: Scalar> {
    fn rows(&self) -> usize;
    fn width(&self) -> usize;
    /// Forward pass; in training mode it caches what `backward` needs.
    fn forward(&mut self, x: Tensor<T>, mode: Mode, rng: &mut ChaCha8Rng) -> nncore::Result<Tensor<T>>;
    /// Accumulates parameter gradients from the logit gradient.
    fn backward(&mut self, grad_logits: Tensor<T>) -> nncore::Result<()>;
    /// Inference-mode forward through a shared reference.
    fn infer(&self, x: Tensor<T>) -> nncore::Result<Tensor<T>>;
    fn params_mut(&mut self) -> Vec<&mut Param<T>>;
    /// Everything that is serialized, in a fixed order.
    fn state(&self) -> Vec<&Tensor<T>>;
    fn state_mut(&mut self) -> Vec<&mut Tensor<T>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    /// Hold out `validation_fraction` of the data and stop once its loss
    /// has not improved for `patience` epochs.
    pub early_stopping: bool,
    pub validation_fraction: f64,
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            batch: 50,
            epochs: 10,
            seed: 1,
            optimizer: OptimizerKind::Adam,
            early_stopping: false,
            validation_fraction: 0.1,
            patience: 3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(ModelError::InvalidConfig(format!("lr must be positive, got {}", self.lr)));
        }
        if self.batch == 0 || self.epochs == 0 {
            return Err(ModelError::InvalidConfig("batch and epochs must be ≥ 1".into()));
        }
        if self.early_stopping && !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(ModelError::InvalidConfig("validation_fraction must be in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean minibatch loss per epoch.
    pub loss: Vec<f64>,
    /// Held-out loss per epoch (early stopping only).
    pub validation_loss: Vec<f64>,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: StageLabel,
    pub probabilities: [f64; 4],
}

fn check_inputs<T: Scalar>(model: &impl Network<T>, xs: &[EmbeddedMessage]) -> Result<()> {
    let expected = (model.rows(), model.width());
    for (index, x) in xs.iter().enumerate() {
        if (x.rows, x.width) != expected || x.data.len() != x.rows * x.width {
            return Err(ModelError::InputShape {
                index,
                expected,
                found: (x.rows, x.width),
            });
        }
        if !x.padding_is_zero() {
            return Err(ModelError::NonZeroPadding(index));
        }
    }
    Ok(())
}

/// Stacks messages into an `N × rows × width` tensor.
pub fn batch_tensor<T: Scalar>(xs: &[&EmbeddedMessage]) -> Result<Tensor<T>> {
    let first = xs.first().ok_or(ModelError::EmptyData)?;
    let mut data = Vec::with_capacity(xs.len() * first.data.len());
    for x in xs {
        data.extend(x.data.iter().map(|&v| T::from_f64(v as f64)));
    }
    Ok(Tensor::from_vec(&[xs.len(), first.rows, first.width], data)?)
}

fn mean_loss<N: Network<f32>>(model: &N, xs: &[EmbeddedMessage], ys: &[StageLabel], idx: &[usize], batch: usize) -> Result<f64> {
    let mut total = 0.0;
    for chunk in idx.chunks(batch) {
        let refs: Vec<&EmbeddedMessage> = chunk.iter().map(|&i| &xs[i]).collect();
        let gold: Vec<usize> = chunk.iter().map(|&i| ys[i].index()).collect();
        let logits = model.infer(batch_tensor(&refs)?)?;
        total += softmax_xent(&logits, &gold)?.0 as f64 * chunk.len() as f64;
    }
    Ok(total / idx.len() as f64)
}

/// Minibatch training with seeded per-epoch shuffling; the last short
/// minibatch is kept.
pub fn train_model<N: Network<f32>>(
    model: &mut N,
    xs: &[EmbeddedMessage],
    ys: &[StageLabel],
    cfg: &TrainConfig,
) -> Result<TrainHistory> {
    cfg.validate()?;
    if xs.is_empty() {
        return Err(ModelError::EmptyData);
    }
    if xs.len() != ys.len() {
        return Err(ModelError::LengthMismatch {
            inputs: xs.len(),
            labels: ys.len(),
        });
    }
    check_inputs(model, xs)?;
    let mut shuffle = seed::rng(cfg.seed, "train/shuffle");
    let mut noise = seed::rng(cfg.seed, "train/dropout");
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.lr)?;

    let mut train_idx: Vec<usize> = (0..xs.len()).collect();
    let mut val_idx = Vec::new();
    if cfg.early_stopping {
        if xs.len() < 2 {
            return Err(ModelError::InvalidConfig("early stopping needs at least two examples".into()));
        }
        train_idx.shuffle(&mut seed::rng(cfg.seed, "train/holdout"));
        let hold = ((xs.len() as f64 * cfg.validation_fraction).ceil() as usize).clamp(1, xs.len() - 1);
        val_idx = train_idx.split_off(xs.len() - hold);
        val_idx.sort_unstable();
        train_idx.sort_unstable();
    }

    let mut history = TrainHistory::default();
    let mut best = f64::INFINITY;
    let mut stale = 0;
    for _ in 0..cfg.epochs {
        let mut order = train_idx.clone();
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch) {
            let refs: Vec<&EmbeddedMessage> = chunk.iter().map(|&i| &xs[i]).collect();
            let gold: Vec<usize> = chunk.iter().map(|&i| ys[i].index()).collect();
            let logits = model.forward(batch_tensor(&refs)?, Mode::Train, &mut noise)?;
            let (loss, grad) = softmax_xent(&logits, &gold)?;
            total += loss as f64 * chunk.len() as f64;
            model.backward(grad)?;
            optimizer.step(&mut model.params_mut())?;
        }
        history.loss.push(total / order.len() as f64);
        if cfg.early_stopping {
            let v = mean_loss(model, xs, ys, &val_idx, cfg.batch)?;
            history.validation_loss.push(v);
            if v < best {
                best = v;
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    history.stopped_early = true;
                    break;
                }
            }
        }
    }
    Ok(history)
}

fn to_prediction(row: &[f32]) -> Prediction {
    let mut probabilities = [0.0; 4];
    for (p, &v) in probabilities.iter_mut().zip(row) {
        *p = v as f64;
    }
    Prediction {
        label: argmax_label(&probabilities),
        probabilities,
    }
}

/// Label and class probabilities for one message, in inference mode.
pub fn predict_model<N: Network<f32>>(model: &N, x: &EmbeddedMessage) -> Result<Prediction> {
    check_inputs(model, std::slice::from_ref(x))?;
    let p = softmax(&model.infer(batch_tensor(&[x])?)?)?;
    Ok(to_prediction(p.data()))
}

/// [`predict_model`] over many messages, in batches of 50 spread over `jobs`
/// threads. Output order follows input order.
pub fn predict_batch<N: Network<f32> + Sync>(model: &N, xs: &[EmbeddedMessage], jobs: usize) -> Result<Vec<Prediction>> {
    check_inputs(model, xs)?;
    let chunks: Vec<&[EmbeddedMessage]> = xs.chunks(50).collect();
    let parts = par_map(&chunks, jobs, |chunk| -> Result<Vec<Prediction>> {
        let refs: Vec<&EmbeddedMessage> = chunk.iter().collect();
        let p = softmax(&model.infer(batch_tensor(&refs)?)?)?;
        Ok(p.data().chunks(4).map(to_prediction).collect())
    });
    let mut out = Vec::with_capacity(xs.len());
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// Largest relative error between backpropagated parameter gradients and
/// central differences of the training-mode cross-entropy on `(x, gold)`.
/// Dropout masks are drawn from the same seed for every evaluation.
pub fn network_gradient_check<N>(model: &N, x: &Tensor<f64>, gold: &[usize], eps: f64, seed: u64) -> Result<f64>
where
    N: Network<f64> + Clone,
{
    let loss = |m: &mut N| -> Result<(f64, Tensor<f64>)> {
        let logits = m.forward(x.clone(), Mode::Train, &mut seed::rng(seed, "gradcheck"))?;
        Ok(softmax_xent(&logits, gold)?)
    };
    let mut analytic = model.clone();
    let (_, grad) = loss(&mut analytic)?;
    analytic.backward(grad)?;
    let grads: Vec<Vec<f64>> = analytic
        .params_mut()
        .into_iter()
        .map(|p| p.grad.as_ref().map(|g| g.data().to_vec()).unwrap_or_else(|| vec![0.0; p.value.len()]))
        .collect();
    let mut worst = 0.0f64;
    for (k, g) in grads.iter().enumerate() {
        let mut probe = model.clone();
        let theta = probe.params_mut()[k].value.data().to_vec();
        let err = nncore::gradient_check(&theta, g, eps, |v| {
            probe.params_mut()[k].value.data_mut().copy_from_slice(v);
            loss(&mut probe).map(|(l, _)| l).unwrap_or(f64::NAN)
        });
        worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
    }
    Ok(worst)
}

/// Architecture descriptor stored in the model file header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Architecture {
    Cnn { config: CnnConfig, width: usize },
    Rnn { config: RnnConfig, width: usize },
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    architecture: Architecture,
}

/// A trained CNN or RNN.
#[derive(Debug, Clone)]
pub enum NeuralModel {
    Cnn(CnnModel),
    Rnn(RnnModel),
}

impl NeuralModel {
    pub fn build(arch: &Architecture, seed: u64) -> Result<Self> {
        Ok(match arch {
            Architecture::Cnn { config, width } => NeuralModel::Cnn(CnnModel::build(config, *width, seed)?),
            Architecture::Rnn { config, width } => NeuralModel::Rnn(RnnModel::build(config, *width, seed)?),
        })
    }

    pub fn architecture(&self) -> Architecture {
        match self {
            NeuralModel::Cnn(m) => Architecture::Cnn {
                config: m.config.clone(),
                width: m.width(),
            },
            NeuralModel::Rnn(m) => Architecture::Rnn {
                config: m.config.clone(),
                width: m.width(),
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            NeuralModel::Cnn(_) => "cnn",
            NeuralModel::Rnn(_) => "rnn",
        }
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        let header = Header {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            architecture: self.architecture(),
        };
        let line = serde_json::to_string(&header).map_err(|e| ModelError::Format(e.to_string()))?;
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
        write_tensors(out, &self.state())?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: &mut R) -> Result<Self> {
        let mut line = String::new();
        input.read_line(&mut line)?;
        let header: Header =
            serde_json::from_str(line.trim_end()).map_err(|e| ModelError::Format(format!("header: {e}")))?;
        if header.format != MODEL_FORMAT {
            return Err(ModelError::Format(format!("unexpected format {:?}", header.format)));
        }
        if header.version != MODEL_VERSION {
            return Err(ModelError::Format(format!("unsupported version {}", header.version)));
        }
        let mut model = NeuralModel::build(&header.architecture, 0)?;
        let tensors: Vec<Tensor<f32>> = read_tensors(input)?;
        let mut slots = model.state_mut();
        if slots.len() != tensors.len() {
            return Err(ModelError::Format(format!("{} tensors for {} parameter slots", tensors.len(), slots.len())));
        }
        for (i, (slot, t)) in slots.iter_mut().zip(tensors).enumerate() {
            if slot.shape() != t.shape() {
                return Err(ModelError::Format(format!("tensor {i} has shape {:?}, expected {:?}", t.shape(), slot.shape())));
            }
            **slot = t;
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        NeuralModel::read_from(&mut bytes.as_slice())
    }
}

macro_rules! delegate {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            NeuralModel::Cnn($m) => $e,
            NeuralModel::Rnn($m) => $e,
        }
    };
}

impl Network<f32> for NeuralModel {
    fn rows(&self) -> usize {
        delegate!(self, m => m.rows())
    }

    fn width(&self) -> usize {
        delegate!(self, m => m.width())
    }

    fn forward(&mut self, x: Tensor<f32>, mode: Mode, rng: &mut ChaCha8Rng) -> nncore::Result<Tensor<f32>> {
        delegate!(self, m => m.forward(x, mode, rng))
    }

    fn backward(&mut self, grad_logits: Tensor<f32>) -> nncore::Result<()> {
        delegate!(self, m => m.backward(grad_logits))
    }

    fn infer(&self, x: Tensor<f32>) -> nncore::Result<Tensor<f32>> {
        delegate!(self, m => m.infer(x))
    }

    fn params_mut(&mut self) -> Vec<&mut Param<f32>> {
        delegate!(self, m => m.params_mut())
    }

    fn state(&self) -> Vec<&Tensor<f32>> {
        delegate!(self, m => m.state())
    }

    fn state_mut(&mut self) -> Vec<&mut Tensor<f32>> {
        delegate!(self, m => m.state_mut())
    }
}
