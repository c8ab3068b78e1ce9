//! One-vs-rest linear SVM.
//!
//! Each class c gets a binary problem
//!
//! ```text
//! minimize  ½‖w‖² + ½b² + C · Σᵢ max(0, 1 − yᵢ (w·xᵢ + b))
//! ```
//!
//! with yᵢ = +1 for messages of class c and −1 otherwise. The bias is
//! handled as the weight of a constant feature 1, so it is regularized
//! along with w. Prediction is the argmax of the four decision values, ties
//! going to the earlier class in label order.
//!
//! Two solvers:
//!
//! * [`Solver::DualCd`] (default): dual coordinate descent over the box
//!   0 ≤ αᵢ ≤ C, visiting examples in a seeded random order each epoch. Each
//!   step minimizes the dual exactly along one coordinate, so the recorded
//!   dual objective never increases. Stops when the spread of projected
//!   gradients falls below `tol` or after `max_epochs`.
//! * [`Solver::Subgradient`]: primal subgradient descent. With a batch size
//!   it is Pegasos (step 1/(λt), λ = 1/(C·n)); without one it is full-batch
//!   descent with step halving, which makes the primal objective
//!   non-increasing. Stops at `max_epochs` or when the relative objective
//!   change drops below `tol`.
//!
//! Model files are JSON (`format: "stagegate-svm"`, `version: 1`) holding C,
//! the label order, the sparse per-class weights, biases, the feature names
//! and their SHA-256 fingerprint.

use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::StageLabel;
use crate::eval::{self, EvalError};
use crate::features::{FeatureSpace, SparseVector};
use crate::parallel::par_map;
use crate::seed;

pub const DEFAULT_C: f64 = 0.001;
pub const DEFAULT_FOLDS: usize = 10;
const MODEL_FORMAT: &str = "stagegate-svm";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("training data has a single class; need at least two")]
    SingleClassInput,
    #[error("need at least two training examples")]
    TooFewExamples,
    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("{examples} examples but {labels} labels")]
    LengthMismatch { examples: usize, labels: usize },
    #[error("C must be positive and finite, got {0}")]
    InvalidC(f64),
    #[error("{examples} examples cannot fill {folds} folds")]
    TooFewExamplesForFolds { examples: usize, folds: usize },
    #[error("empty C grid")]
    EmptyGrid,
    #[error("model was trained on a different feature space")]
    SpaceMismatch,
    #[error("svm model file: {0}")]
    Format(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, SvmError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Solver {
    DualCd,
    /// `batch: None` is full-batch descent.
    Subgradient { batch: Option<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmConfig {
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_solver")]
    pub solver: Solver,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_c() -> f64 {
    DEFAULT_C
}
fn default_solver() -> Solver {
    Solver::DualCd
}
fn default_max_epochs() -> usize {
    200
}
fn default_tol() -> f64 {
    1e-8
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: DEFAULT_C,
            solver: Solver::DualCd,
            max_epochs: default_max_epochs(),
            tol: default_tol(),
            seed: 0,
        }
    }
}

/// Per-class convergence record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryDiagnostics {
    pub epochs: usize,
    pub converged: bool,
    /// Dual objective (dual CD) or primal objective (subgradient) per epoch.
    pub objective: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub c: f64,
    weights: Vec<Vec<f64>>,
    bias: [f64; 4],
    space: FeatureSpace,
    pub diagnostics: Vec<BinaryDiagnostics>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    c: f64,
    labels: Vec<StageLabel>,
    dim: usize,
    space_fingerprint: String,
    feature_names: Vec<String>,
    weights: Vec<Vec<(usize, f64)>>,
    bias: [f64; 4],
    diagnostics: Vec<BinaryDiagnostics>,
}

fn check_inputs(xs: &[SparseVector], ys: &[StageLabel], c: f64) -> Result<usize> {
    if xs.len() != ys.len() {
        return Err(SvmError::LengthMismatch {
            examples: xs.len(),
            labels: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(SvmError::TooFewExamples);
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(SvmError::InvalidC(c));
    }
    if ys.iter().all(|&y| y == ys[0]) {
        return Err(SvmError::SingleClassInput);
    }
    let dim = xs[0].dim();
    if let Some(x) = xs.iter().find(|x| x.dim() != dim) {
        return Err(SvmError::DimMismatch {
            expected: dim,
            found: x.dim(),
        });
    }
    Ok(dim)
}

fn decision(w: &[f64], b: f64, x: &SparseVector) -> f64 {
    x.dot(w) + b
}

fn primal_objective(w: &[f64], b: f64, xs: &[SparseVector], ys: &[f64], c: f64) -> f64 {
    let reg = 0.5 * (w.iter().map(|v| v * v).sum::<f64>() + b * b);
    let loss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| (1.0 - y * decision(w, b, x)).max(0.0))
        .sum();
    reg + c * loss
}

struct Binary {
    w: Vec<f64>,
    b: f64,
    diag: BinaryDiagnostics,
}

fn train_dual_cd(xs: &[SparseVector], ys: &[f64], dim: usize, cfg: &SvmConfig, rng: &mut ChaCha8Rng) -> Binary {
    let n = xs.len();
    let c = cfg.c;
    let qd: Vec<f64> = xs.iter().map(|x| x.norm().powi(2) + 1.0).collect();
    let mut alpha = vec![0.0f64; n];
    let mut w = vec![0.0f64; dim];
    let mut b = 0.0f64;
    let mut order: Vec<usize> = (0..n).collect();
    let mut objective = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_epochs {
        order.shuffle(rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let g = ys[i] * decision(&w, b, &xs[i]) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / qd[i]).clamp(0.0, c);
                let d = (alpha[i] - old) * ys[i];
                if d != 0.0 {
                    for (j, x) in xs[i].iter() {
                        w[j] += d * x;
                    }
                    b += d;
                }
            }
        }
        let norm2 = w.iter().map(|v| v * v).sum::<f64>() + b * b;
        objective.push(0.5 * norm2 - alpha.iter().sum::<f64>());
        if pg_max - pg_min <= cfg.tol {
            converged = true;
            break;
        }
    }
    Binary {
        w,
        b,
        diag: BinaryDiagnostics {
            epochs: objective.len(),
            converged,
            objective,
        },
    }
}

fn train_subgradient(
    xs: &[SparseVector],
    ys: &[f64],
    dim: usize,
    cfg: &SvmConfig,
    batch: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Binary {
    let n = xs.len();
    let lambda = 1.0 / (cfg.c * n as f64);
    let mut w = vec![0.0f64; dim];
    let mut b = 0.0f64;
    let mut objective = Vec::new();
    let mut converged = false;
    let mut prev = primal_objective(&w, b, xs, ys, cfg.c);
    match batch {
        Some(batch) => {
            let batch = batch.clamp(1, n);
            let mut order: Vec<usize> = (0..n).collect();
            let mut t = 0usize;
            for _ in 0..cfg.max_epochs {
                order.shuffle(rng);
                for chunk in order.chunks(batch) {
                    t += 1;
                    let eta = 1.0 / (lambda * t as f64);
                    let violators: Vec<usize> = chunk
                        .iter()
                        .copied()
                        .filter(|&i| ys[i] * decision(&w, b, &xs[i]) < 1.0)
                        .collect();
                    let shrink = 1.0 - eta * lambda;
                    w.iter_mut().for_each(|v| *v *= shrink);
                    b *= shrink;
                    let step = eta / chunk.len() as f64;
                    for i in violators {
                        for (j, x) in xs[i].iter() {
                            w[j] += step * ys[i] * x;
                        }
                        b += step * ys[i];
                    }
                }
                let obj = primal_objective(&w, b, xs, ys, cfg.c);
                objective.push(obj);
                if (prev - obj).abs() <= cfg.tol * prev.abs().max(1e-12) {
                    converged = true;
                    break;
                }
                prev = obj;
            }
        }
        None => {
            // objective scaled by 1/(C n): λ/2‖θ‖² + mean hinge
            let mut eta = 1.0 / lambda;
            for _ in 0..cfg.max_epochs {
                let mut gw: Vec<f64> = w.iter().map(|v| lambda * v).collect();
                let mut gb = lambda * b;
                for (x, &y) in xs.iter().zip(ys) {
                    if y * decision(&w, b, x) < 1.0 {
                        for (j, v) in x.iter() {
                            gw[j] -= y * v / n as f64;
                        }
                        gb -= y / n as f64;
                    }
                }
                let mut accepted = None;
                while eta > 1e-14 {
                    let cw: Vec<f64> = w.iter().zip(&gw).map(|(v, g)| v - eta * g).collect();
                    let cb = b - eta * gb;
                    let obj = primal_objective(&cw, cb, xs, ys, cfg.c);
                    if obj < prev {
                        accepted = Some((cw, cb, obj));
                        break;
                    }
                    eta *= 0.5;
                }
                let Some((cw, cb, obj)) = accepted else {
                    converged = true;
                    objective.push(prev);
                    break;
                };
                let rel = (prev - obj) / prev.abs().max(1e-12);
                w = cw;
                b = cb;
                objective.push(obj);
                prev = obj;
                eta *= 2.0;
                if rel < cfg.tol {
                    converged = true;
                    break;
                }
            }
        }
    }
    Binary {
        w,
        b,
        diag: BinaryDiagnostics {
            epochs: objective.len(),
            converged,
            objective,
        },
    }
}

/// Trains the four one-vs-rest problems with `cfg.c`. `space` names the
/// feature coordinates (an empty space is allowed and decodes to `f<index>`).
pub fn train_svm(
    xs: &[SparseVector],
    ys: &[StageLabel],
    space: FeatureSpace,
    cfg: &SvmConfig,
    jobs: usize,
) -> Result<SvmModel> {
    let dim = check_inputs(xs, ys, cfg.c)?;
    if space.dim() != 0 && space.dim() != dim {
        return Err(SvmError::DimMismatch {
            expected: space.dim(),
            found: dim,
        });
    }
    let binaries = par_map(&StageLabel::ALL, jobs, |&class| {
        let targets: Vec<f64> = ys.iter().map(|&y| if y == class { 1.0 } else { -1.0 }).collect();
        let mut rng = seed::rng(cfg.seed, &format!("svm/{}", class.as_str()));
        match cfg.solver {
            Solver::DualCd => train_dual_cd(xs, &targets, dim, cfg, &mut rng),
            Solver::Subgradient { batch } => train_subgradient(xs, &targets, dim, cfg, batch, &mut rng),
        }
    });
    let mut bias = [0.0; 4];
    let mut weights = Vec::with_capacity(4);
    let mut diagnostics = Vec::with_capacity(4);
    for (k, bin) in binaries.into_iter().enumerate() {
        bias[k] = bin.b;
        weights.push(bin.w);
        diagnostics.push(bin.diag);
    }
    Ok(SvmModel {
        c: cfg.c,
        weights,
        bias,
        space,
        diagnostics,
    })
}

impl SvmModel {
    /// Builds a model from explicit parameters.
    pub fn from_parts(c: f64, weights: Vec<Vec<f64>>, bias: [f64; 4], space: FeatureSpace) -> Result<Self> {
        if weights.len() != 4 {
            return Err(SvmError::Format(format!("expected 4 weight vectors, got {}", weights.len())));
        }
        let dim = weights[0].len();
        if let Some(w) = weights.iter().find(|w| w.len() != dim) {
            return Err(SvmError::DimMismatch {
                expected: dim,
                found: w.len(),
            });
        }
        Ok(SvmModel {
            c,
            weights,
            bias,
            space,
            diagnostics: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.weights[0].len()
    }

    pub fn weights(&self, class: StageLabel) -> &[f64] {
        &self.weights[class.index()]
    }

    pub fn bias(&self) -> [f64; 4] {
        self.bias
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    /// Fails unless `space` is the space the model was trained on.
    pub fn check_space(&self, space: &FeatureSpace) -> Result<()> {
        if space.fingerprint() != self.space.fingerprint() {
            return Err(SvmError::SpaceMismatch);
        }
        Ok(())
    }

    /// Raw `w_c·x + b_c` per class, in label order.
    pub fn decision_values(&self, x: &SparseVector) -> Result<[f64; 4]> {
        if x.dim() != self.dim() {
            return Err(SvmError::DimMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        let mut out = [0.0; 4];
        for (k, o) in out.iter_mut().enumerate() {
            *o = decision(&self.weights[k], self.bias[k], x);
        }
        Ok(out)
    }

    pub fn predict(&self, x: &SparseVector) -> Result<StageLabel> {
        Ok(argmax_label(&self.decision_values(x)?))
    }

    /// Multiplies every weight and bias by `factor`.
    pub fn rescale(&mut self, factor: f64) {
        for w in &mut self.weights {
            w.iter_mut().for_each(|v| *v *= factor);
        }
        self.bias.iter_mut().for_each(|b| *b *= factor);
    }

    /// The `k` largest positive weights of `class`, descending, with names.
    pub fn top_features(&self, class: StageLabel, k: usize) -> Vec<(String, f64)> {
        let w = &self.weights[class.index()];
        let mut idx: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
        idx.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
        idx.truncate(k);
        idx.into_iter()
            .map(|i| {
                let name = self.space.name(i).map_or_else(|| format!("f{i}"), str::to_owned);
                (name, w[i])
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            c: self.c,
            labels: StageLabel::ALL.to_vec(),
            dim: self.dim(),
            space_fingerprint: self.space.fingerprint(),
            feature_names: self.space.names().to_vec(),
            weights: self
                .weights
                .iter()
                .map(|w| w.iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect())
                .collect(),
            bias: self.bias,
            diagnostics: self.diagnostics.clone(),
        };
        serde_json::to_string(&file).expect("svm model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| SvmError::Format(e.to_string()))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(SvmError::Format(format!(
                "expected {MODEL_FORMAT} v{MODEL_VERSION}, found {} v{}",
                file.format, file.version
            )));
        }
        if file.labels != StageLabel::ALL {
            return Err(SvmError::Format("unexpected label order".into()));
        }
        let space = FeatureSpace::new(file.feature_names);
        if space.fingerprint() != file.space_fingerprint {
            return Err(SvmError::Format("feature-space fingerprint does not match names".into()));
        }
        let mut weights = vec![vec![0.0; file.dim]; 4];
        for (w, sparse) in weights.iter_mut().zip(file.weights) {
            for (i, v) in sparse {
                *w.get_mut(i)
                    .ok_or_else(|| SvmError::Format(format!("weight index {i} ≥ dim {}", file.dim)))? = v;
            }
        }
        let mut m = SvmModel::from_parts(file.c, weights, file.bias, space)?;
        m.diagnostics = file.diagnostics;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| SvmError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SvmError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

/// Index of the largest score as a label; ties go to the earlier label.
pub fn argmax_label(scores: &[f64; 4]) -> StageLabel {
    let mut best = 0;
    for k in 1..4 {
        if scores[k] > scores[best] {
            best = k;
        }
    }
    StageLabel::ALL[best]
}

/// Cross-validation result for one C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub c: f64,
    pub mean_f1: f64,
    pub fold_f1: Vec<f64>,
}

/// Picks C from `grid` by stratified k-fold mean weighted F1; ties go to
/// the smaller C.
pub fn select_c(
    xs: &[SparseVector],
    ys: &[StageLabel],
    grid: &[f64],
    folds: usize,
    base: &SvmConfig,
    jobs: usize,
) -> Result<(f64, Vec<CvScore>)> {
    if grid.is_empty() {
        return Err(SvmError::EmptyGrid);
    }
    check_inputs(xs, ys, grid[0])?;
    if xs.len() < folds || folds < 2 {
        return Err(SvmError::TooFewExamplesForFolds {
            examples: xs.len(),
            folds,
        });
    }
    let splits = eval::kfold_labels(ys, folds, seed::derive(base.seed, "svm/cv"), true)?;
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut scores = Vec::with_capacity(sorted.len());
    for &c in &sorted {
        let cfg = SvmConfig { c, ..base.clone() };
        let fold_f1 = par_map(&splits, jobs, |(train, valid)| -> Result<f64> {
            let tx: Vec<SparseVector> = train.iter().map(|&i| xs[i].clone()).collect();
            let ty: Vec<StageLabel> = train.iter().map(|&i| ys[i]).collect();
            let m = train_svm(&tx, &ty, FeatureSpace::default(), &cfg, 1)?;
            let preds = valid.iter().map(|&i| m.predict(&xs[i])).collect::<Result<Vec<_>>>()?;
            let golds: Vec<StageLabel> = valid.iter().map(|&i| ys[i]).collect();
            Ok(eval::evaluate(&preds, &golds)?.weighted_f1)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        let mean_f1 = fold_f1.iter().sum::<f64>() / fold_f1.len() as f64;
        scores.push(CvScore { c, mean_f1, fold_f1 });
    }
    let mut best = &scores[0];
    for s in &scores[1..] {
        if s.mean_f1 > best.mean_f1 {
            best = s;
        }
    }
    Ok((best.c, scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use StageLabel::*;

    fn sv(v: &[f64]) -> SparseVector {
        SparseVector::from_dense(v)
    }

    fn separable(n: usize, seed_: u64) -> (Vec<SparseVector>, Vec<StageLabel>) {
        let mut rng = seed::rng(seed_, "sep");
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        while xs.len() < n {
            let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let m = a + b - 0.2;
            if m.abs() < 0.1 {
                continue;
            }
            xs.push(sv(&[a, b]));
            ys.push(if m > 0.0 { Response } else { Engagement });
        }
        (xs, ys)
    }

    #[test]
    fn separable_large_c_has_margins() {
        let (xs, ys) = separable(60, 1);
        let cfg = SvmConfig { c: 1e4, max_epochs: 5000, ..Default::default() };
        let m = train_svm(&xs, &ys, FeatureSpace::default(), &cfg, 1).unwrap();
        for (x, &y) in xs.iter().zip(&ys) {
            assert_eq!(m.predict(x).unwrap(), y);
            for class in [Response, Engagement] {
                let t = if class == y { 1.0 } else { -1.0 };
                let f = m.decision_values(x).unwrap()[class.index()];
                assert!(t * f >= 1.0 - 1e-6, "margin {}", t * f);
            }
        }
    }

    #[test]
    fn identical_vectors_predict_majority() {
        let xs = vec![sv(&[1.0, 2.0]); 10];
        let ys = [vec![Response; 4], vec![Preparedness; 3], vec![Engagement; 3]].concat();
        let m = train_svm(&xs, &ys, FeatureSpace::default(), &SvmConfig::default(), 1).unwrap();
        assert_eq!(m.predict(&xs[0]).unwrap(), Response);
    }

    #[test]
    fn zero_vector_uses_biases() {
        let (xs, ys) = separable(20, 2);
        let m = train_svm(&xs, &ys, FeatureSpace::default(), &SvmConfig::default(), 1).unwrap();
        let z = SparseVector::zeros(2);
        assert_eq!(m.decision_values(&z).unwrap(), m.bias());
        assert_eq!(m.predict(&z).unwrap(), argmax_label(&m.bias()));
    }

    #[test]
    fn input_errors() {
        let xs = vec![sv(&[1.0]), sv(&[2.0])];
        let cfg = SvmConfig::default();
        let sp = FeatureSpace::default;
        assert!(matches!(train_svm(&xs, &[Response, Response], sp(), &cfg, 1), Err(SvmError::SingleClassInput)));
        let bad = vec![sv(&[1.0]), sv(&[1.0, 2.0])];
        assert!(matches!(train_svm(&bad, &[Response, Engagement], sp(), &cfg, 1), Err(SvmError::DimMismatch { .. })));
        let m = train_svm(&xs, &[Response, Engagement], sp(), &cfg, 1).unwrap();
        assert!(matches!(m.predict(&sv(&[1.0, 1.0])), Err(SvmError::DimMismatch { .. })));
    }

    #[test]
    fn dual_objective_never_increases() {
        let (xs, ys) = separable(80, 3);
        let cfg = SvmConfig { c: 10.0, max_epochs: 300, ..Default::default() };
        let m = train_svm(&xs, &ys, FeatureSpace::default(), &cfg, 1).unwrap();
        for d in &m.diagnostics {
            for w in d.objective.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "{:?}", w);
            }
        }
    }

    #[test]
    fn full_batch_subgradient_is_monotone_and_close_to_dual() {
        let (xs, ys) = separable(50, 4);
        let sub = SvmConfig { c: 0.5, solver: Solver::Subgradient { batch: None }, max_epochs: 400, tol: 1e-10, ..Default::default() };
        let m = train_svm(&xs, &ys, FeatureSpace::default(), &sub, 1).unwrap();
        for d in &m.diagnostics {
            assert!(d.objective.windows(2).all(|w| w[1] <= w[0]));
        }
        let dual = train_svm(&xs, &ys, FeatureSpace::default(), &SvmConfig { c: 0.5, ..Default::default() }, 1).unwrap();
        let agree = xs.iter().filter(|x| m.predict(x).unwrap() == dual.predict(x).unwrap()).count();
        assert!(agree as f64 >= 0.95 * xs.len() as f64);
    }

    #[test]
    fn pegasos_minibatch_learns() {
        let (xs, ys) = separable(100, 5);
        let cfg = SvmConfig { c: 1.0, solver: Solver::Subgradient { batch: Some(10) }, max_epochs: 50, ..Default::default() };
        let m = train_svm(&xs, &ys, FeatureSpace::default(), &cfg, 1).unwrap();
        let right = xs.iter().zip(&ys).filter(|(x, y)| m.predict(x).unwrap() == **y).count();
        assert!(right >= 95, "{right}");
    }

    #[test]
    fn deterministic_and_parallel_equal() {
        let (xs, ys) = separable(40, 6);
        let cfg = SvmConfig { c: 1.0, ..Default::default() };
        let a = train_svm(&xs, &ys, FeatureSpace::default(), &cfg, 1).unwrap();
        let b = train_svm(&xs, &ys, FeatureSpace::default(), &cfg, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn top_features_one_hot() {
        // feature 2 fires exactly for Preparedness
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..40 {
            let label = StageLabel::ALL[i % 4];
            let mut v = vec![0.0; 5];
            v[(i * 7) % 2] = 1.0;
            if label == Preparedness {
                v[2] = 1.0;
            }
            xs.push(sv(&v));
            ys.push(label);
        }
        let names = (0..5).map(|i| format!("feat{i}")).collect();
        let m = train_svm(&xs, &ys, FeatureSpace::new(names), &SvmConfig { c: 1.0, ..Default::default() }, 1).unwrap();
        assert_eq!(m.top_features(Preparedness, 3)[0].0, "feat2");
        assert!(m.top_features(Preparedness, 0).is_empty());
        let top = m.top_features(Preparedness, 5);
        assert!(top.windows(2).all(|w| w[0].1 >= w[1].1));
    }

    #[test]
    fn json_round_trip_and_space_check() {
        let (xs, ys) = separable(30, 7);
        let space = FeatureSpace::new(vec!["a".into(), "b".into()]);
        let m = train_svm(&xs, &ys, space.clone(), &SvmConfig::default(), 1).unwrap();
        let back = SvmModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert!(back.check_space(&space).is_ok());
        assert!(matches!(back.check_space(&FeatureSpace::new(vec!["b".into(), "a".into()])), Err(SvmError::SpaceMismatch)));
    }

    #[test]
    fn select_c_grid() {
        let (xs, ys) = separable(60, 8);
        let (c, scores) = select_c(&xs, &ys, &[0.5], 3, &SvmConfig::default(), 1).unwrap();
        assert_eq!(c, 0.5);
        assert_eq!(scores.len(), 1);
        assert!(matches!(select_c(&xs[..4], &ys[..4], &[1.0], 10, &SvmConfig::default(), 1), Err(SvmError::TooFewExamplesForFolds { .. })));
        assert!(matches!(select_c(&xs, &ys, &[], 3, &SvmConfig::default(), 1), Err(SvmError::EmptyGrid)));
    }
}
