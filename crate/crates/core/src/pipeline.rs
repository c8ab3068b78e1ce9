//! Featurizer + classifier bundles with one train/predict/save interface.
//!
//! A saved pipeline is a directory:
//!
//! ```text
//! pipeline.json     featurizer state, model kind, embedding checksum
//! model.json        SVM weights (svm)    | model.nn  CNN/RNN (cnn, rnn)
//! embeddings.bin    word2vec binary table, when the features use one
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Message, StageLabel};
use crate::embeddings::EmbeddingTable;
use crate::eval::{self, EvalReport};
use crate::features::{
    desc_features, embed_matrix_with, mean_embedding_vector, DescScaler, EmbeddedMessage, FeatureSpace,
    SparseFeatureConfig, SparseFeaturizer, SparseVector, MAX_WORDS,
};
use crate::models::{
    self, train_model, Architecture, CnnConfig, CnnModel, NeuralModel, Network, RnnConfig, RnnModel, TrainConfig,
    TrainHistory,
};
use crate::parallel::par_map;
use crate::svm::{self, argmax_label, select_c, train_svm, CvScore, SvmConfig, SvmModel};
use crate::textprep::{Preprocessor, ProcessedMessage};
use crate::{Error, Result};

const FORMAT: &str = "stagegate-pipeline";
const VERSION: u32 = 1;
const EMBEDDINGS_FILE: &str = "embeddings.bin";

/// Which features to build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSpec {
    /// BOW / POS / DESC blocks.
    Sparse {
        #[serde(default)]
        config: SparseFeatureConfig,
    },
    /// Mean word vector, optionally followed by standardized DESC.
    MeanEmbedding {
        #[serde(default)]
        desc: bool,
    },
    /// Padded word-vector matrix, optionally with standardized DESC per row.
    Matrix {
        #[serde(default)]
        desc: bool,
    },
}

/// Which classifier to train on the features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    /// With a non-empty `c_grid`, C is chosen by `folds`-fold CV first.
    Svm {
        #[serde(default)]
        config: SvmConfig,
        #[serde(default)]
        c_grid: Vec<f64>,
        #[serde(default = "default_folds")]
        folds: usize,
    },
    Cnn {
        #[serde(default)]
        config: CnnConfig,
        #[serde(default)]
        train: TrainConfig,
    },
    Rnn {
        #[serde(default)]
        config: RnnConfig,
        #[serde(default)]
        train: TrainConfig,
    },
}

fn default_folds() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSpec {
    pub features: FeatureSpec,
    pub classifier: ClassifierSpec,
}

impl PipelineSpec {
    pub fn validate(&self) -> Result<()> {
        use ClassifierSpec as C;
        use FeatureSpec as F;
        match (&self.features, &self.classifier) {
            (F::Sparse { .. } | F::MeanEmbedding { .. }, C::Svm { .. }) => Ok(()),
            (F::Matrix { .. }, C::Cnn { train, .. } | C::Rnn { train, .. }) => Ok(train.validate()?),
            _ => Err(Error::Config(
                "SVMs take sparse or mean-embedding features; CNN/RNN take the embedding matrix".into(),
            )),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: PipelineSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn needs_embeddings(&self) -> bool {
        !matches!(self.features, FeatureSpec::Sparse { .. })
    }
}

/// Fitted feature extraction state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Featurizer {
    Sparse { featurizer: SparseFeaturizer },
    MeanEmbedding { desc: Option<DescScaler> },
    Matrix { desc: Option<DescScaler>, rows: usize },
}

#[derive(Debug, Clone)]
pub enum ClassifierModel {
    Svm(SvmModel),
    Neural(NeuralModel),
}

impl ClassifierModel {
    pub fn kind(&self) -> &'static str {
        match self {
            ClassifierModel::Svm(_) => "svm",
            ClassifierModel::Neural(m) => m.kind(),
        }
    }
}

/// Output for one message. `scores` are SVM decision values or neural
/// class probabilities, in label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Output {
    pub label: StageLabel,
    pub scores: [f64; 4],
}

/// Side information from fitting.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitInfo {
    pub c: Option<f64>,
    pub cv: Vec<CvScore>,
    pub history: Option<TrainHistory>,
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    featurizer: Featurizer,
    model: ClassifierModel,
    embeddings: Option<EmbeddingTable>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    featurizer: Featurizer,
    model: String,
    embeddings_sha256: Option<String>,
}

fn desc_scaler(train: &[ProcessedMessage]) -> DescScaler {
    let rows: Vec<[f64; 5]> = train.iter().map(|pm| desc_features(&pm.source).to_array()).collect();
    DescScaler::fit(&rows)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

impl Pipeline {
    /// Fits features on `train` and trains the classifier. `embeddings` is
    /// required when the features use word vectors.
    pub fn fit(
        spec: &PipelineSpec,
        train: &[ProcessedMessage],
        labels: &[StageLabel],
        embeddings: Option<EmbeddingTable>,
        jobs: usize,
    ) -> Result<(Pipeline, FitInfo)> {
        spec.validate()?;
        if train.len() != labels.len() {
            return Err(Error::Config(format!("{} messages but {} labels", train.len(), labels.len())));
        }
        if spec.needs_embeddings() && embeddings.is_none() {
            return Err(Error::Config("these features need an embedding table".into()));
        }
        let featurizer = match &spec.features {
            FeatureSpec::Sparse { config } => Featurizer::Sparse {
                featurizer: SparseFeaturizer::fit(config, train)?,
            },
            FeatureSpec::MeanEmbedding { desc } => Featurizer::MeanEmbedding {
                desc: desc.then(|| desc_scaler(train)),
            },
            FeatureSpec::Matrix { desc } => Featurizer::Matrix {
                desc: desc.then(|| desc_scaler(train)),
                rows: match &spec.classifier {
                    ClassifierSpec::Cnn { config, .. } => config.rows,
                    ClassifierSpec::Rnn { config, .. } => config.unroll,
                    ClassifierSpec::Svm { .. } => MAX_WORDS,
                },
            },
        };
        let mut pipeline = Pipeline {
            featurizer,
            model: ClassifierModel::Svm(SvmModel::from_parts(1.0, vec![Vec::new(); 4], [0.0; 4], FeatureSpace::default())?),
            embeddings,
        };
        let mut info = FitInfo::default();
        match &spec.classifier {
            ClassifierSpec::Svm { config, c_grid, folds } => {
                let xs = pipeline.sparse_features(train, jobs)?;
                let mut cfg = config.clone();
                if !c_grid.is_empty() {
                    let (c, scores) = select_c(&xs, labels, c_grid, *folds, config, jobs)?;
                    cfg.c = c;
                    info.cv = scores;
                }
                info.c = Some(cfg.c);
                pipeline.model = ClassifierModel::Svm(train_svm(&xs, labels, pipeline.space(), &cfg, jobs)?);
            }
            ClassifierSpec::Cnn { config, train: tc } => {
                let xs = pipeline.matrix_features(train, jobs)?;
                let width = xs.first().map_or(0, |x| x.width);
                let mut m = NeuralModel::Cnn(CnnModel::build(config, width, tc.seed)?);
                info.history = Some(train_model(&mut m, &xs, labels, tc)?);
                pipeline.model = ClassifierModel::Neural(m);
            }
            ClassifierSpec::Rnn { config, train: tc } => {
                let xs = pipeline.matrix_features(train, jobs)?;
                let width = xs.first().map_or(0, |x| x.width);
                let mut m = NeuralModel::Rnn(RnnModel::build(config, width, tc.seed)?);
                info.history = Some(train_model(&mut m, &xs, labels, tc)?);
                pipeline.model = ClassifierModel::Neural(m);
            }
        }
        Ok((pipeline, info))
    }

    pub fn featurizer(&self) -> &Featurizer {
        &self.featurizer
    }

    pub fn model(&self) -> &ClassifierModel {
        &self.model
    }

    pub fn embeddings(&self) -> Option<&EmbeddingTable> {
        self.embeddings.as_ref()
    }

    fn table(&self) -> Result<&EmbeddingTable> {
        self.embeddings
            .as_ref()
            .ok_or_else(|| Error::Config("pipeline has no embedding table".into()))
    }

    /// Names of the sparse feature columns (empty for matrix features).
    pub fn space(&self) -> FeatureSpace {
        match &self.featurizer {
            Featurizer::Sparse { featurizer } => featurizer.space(),
            Featurizer::MeanEmbedding { desc } => {
                let mut s = FeatureSpace::default();
                let dim = self.embeddings.as_ref().map_or(0, |t| t.dim());
                s.extend("", (0..dim).map(|i| format!("emb:{i}")));
                if desc.is_some() {
                    s.extend("", crate::features::DESC_NAMES);
                }
                s
            }
            Featurizer::Matrix { .. } => FeatureSpace::default(),
        }
    }

    /// Sparse vectors for SVM pipelines.
    pub fn sparse_features(&self, pms: &[ProcessedMessage], jobs: usize) -> Result<Vec<SparseVector>> {
        match &self.featurizer {
            Featurizer::Sparse { featurizer } => Ok(featurizer.transform_all(pms, jobs)?),
            Featurizer::MeanEmbedding { desc } => {
                let table = self.table()?;
                Ok(par_map(pms, jobs, |pm| {
                    let d = desc.as_ref().map(|s| s.apply(desc_features(&pm.source).to_array()));
                    mean_embedding_vector(pm, table, d)
                }))
            }
            Featurizer::Matrix { .. } => Err(Error::Config("matrix features are not sparse".into())),
        }
    }

    /// Padded embedding matrices for CNN/RNN pipelines.
    pub fn matrix_features(&self, pms: &[ProcessedMessage], jobs: usize) -> Result<Vec<EmbeddedMessage>> {
        let Featurizer::Matrix { desc, rows } = &self.featurizer else {
            return Err(Error::Config("sparse features are not matrices".into()));
        };
        let table = self.table()?;
        let out: Vec<EmbeddedMessage> = par_map(pms, jobs, |pm| {
            let d = desc.as_ref().map(|s| s.apply(desc_features(&pm.source).to_array()));
            embed_matrix_with(pm, table, d, *rows)
        })
        .into_iter()
        .collect::<std::result::Result<_, _>>()?;
        assert!(out.iter().all(EmbeddedMessage::padding_is_zero), "embedding matrix padding must be zero");
        Ok(out)
    }

    pub fn predict_processed(&self, pms: &[ProcessedMessage], jobs: usize) -> Result<Vec<Output>> {
        match &self.model {
            ClassifierModel::Svm(m) => {
                let xs = self.sparse_features(pms, jobs)?;
                par_map(&xs, jobs, |x| {
                    let scores = m.decision_values(x)?;
                    Ok(Output {
                        label: argmax_label(&scores),
                        scores,
                    })
                })
                .into_iter()
                .collect::<std::result::Result<_, svm::SvmError>>()
                .map_err(Error::from)
            }
            ClassifierModel::Neural(m) => {
                let xs = self.matrix_features(pms, jobs)?;
                Ok(models::predict_batch(m, &xs, jobs)?
                    .into_iter()
                    .map(|p| Output {
                        label: p.label,
                        scores: p.probabilities,
                    })
                    .collect())
            }
        }
    }

    /// Preprocesses with the bundled tagger and lexicon, then predicts.
    pub fn predict(&self, messages: &[Message], jobs: usize) -> Result<Vec<Output>> {
        let pms = Preprocessor::bundled().process_all(messages, jobs)?;
        self.predict_processed(&pms, jobs)
    }

    pub fn evaluate(&self, pms: &[ProcessedMessage], golds: &[StageLabel], jobs: usize) -> Result<EvalReport> {
        let preds: Vec<StageLabel> = self.predict_processed(pms, jobs)?.into_iter().map(|o| o.label).collect();
        Ok(eval::evaluate(&preds, golds)?)
    }

    /// Writes the pipeline into `dir`, creating it if needed.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let embeddings_sha256 = match &self.embeddings {
            Some(t) => {
                let mut buf = Vec::new();
                t.write_binary(&mut buf).map_err(io_err(dir))?;
                let path = dir.join(EMBEDDINGS_FILE);
                std::fs::write(&path, &buf).map_err(io_err(&path))?;
                Some(sha256_hex(&buf))
            }
            None => None,
        };
        match &self.model {
            ClassifierModel::Svm(m) => m.save(dir.join("model.json"))?,
            ClassifierModel::Neural(m) => m.save(dir.join("model.nn"))?,
        }
        let manifest = Manifest {
            format: FORMAT.into(),
            version: VERSION,
            featurizer: self.featurizer.clone(),
            model: self.model.kind().into(),
            embeddings_sha256,
        };
        let path = dir.join("pipeline.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(io_err(&path))?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join("pipeline.json");
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if manifest.format != FORMAT || manifest.version != VERSION {
            return Err(Error::Config(format!(
                "{}: unsupported pipeline format {} v{}",
                path.display(),
                manifest.format,
                manifest.version
            )));
        }
        let embeddings = match &manifest.embeddings_sha256 {
            Some(expected) => {
                let path = dir.join(EMBEDDINGS_FILE);
                let bytes = std::fs::read(&path).map_err(io_err(&path))?;
                if &sha256_hex(&bytes) != expected {
                    return Err(Error::Config(format!("{}: checksum mismatch", path.display())));
                }
                Some(EmbeddingTable::read_binary(bytes.as_slice())?)
            }
            None => None,
        };
        let model = match manifest.model.as_str() {
            "svm" => ClassifierModel::Svm(SvmModel::load(dir.join("model.json"))?),
            "cnn" | "rnn" => {
                let m = NeuralModel::load(dir.join("model.nn"))?;
                if m.kind() != manifest.model {
                    return Err(Error::Config(format!("model.nn holds a {}, manifest says {}", m.kind(), manifest.model)));
                }
                ClassifierModel::Neural(m)
            }
            other => return Err(Error::Config(format!("unknown model kind {other:?}"))),
        };
        let pipeline = Pipeline {
            featurizer: manifest.featurizer,
            model,
            embeddings,
        };
        if let (ClassifierModel::Svm(m), Featurizer::Sparse { .. } | Featurizer::MeanEmbedding { .. }) =
            (&pipeline.model, &pipeline.featurizer)
        {
            m.check_space(&pipeline.space())?;
        }
        if let ClassifierModel::Neural(m) = &pipeline.model {
            let expected = match m.architecture() {
                Architecture::Cnn { width, .. } | Architecture::Rnn { width, .. } => width,
            };
            let table_dim = pipeline.embeddings.as_ref().map_or(0, |t| t.dim());
            let desc = matches!(pipeline.featurizer, Featurizer::Matrix { desc: Some(_), .. });
            if table_dim + if desc { 5 } else { 0 } != expected || m.width() != expected {
                return Err(Error::Config("model width does not match the embedding table".into()));
            }
        }
        Ok(pipeline)
    }
}
