//! Table-shaped experiment runs.
//!
//! An experiment is a TOML file naming a labeled dataset and a list of
//! tables. Each table expands into one cell per row (e.g. Bool, Freq, Tfidf),
//! every cell trains and evaluates one pipeline, and the rows are merged in
//! declared order. Output layout under `<out>/<name>/`:
//!
//! ```text
//! <table>.csv                  representation,F_prep,F_resp,F_post,F_eng,F_avg
//! summary.txt                  all tables, aligned
//! cw2v.bin                     custom embeddings, when any cell uses them
//! <table>-<row>/report.csv     per-class precision/recall/F1
//! <table>-<row>/report.txt
//! <table>-<row>/trials.json    chosen C and CV scores, or the loss history
//! <table>-<row>/model/         saved pipeline (unless save_models = false)
//! ```
//!
//! All seeds come from the top-level `seed`; per-table `svm.seed` and
//! `train.seed` are overwritten with sub-seeds derived from it.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EvalReport, ResultTable};
use crate::corpus::{load_corpus, split, CorpusFormat, Dataset, StageLabel};
use crate::embeddings::{load_embeddings, train_word2vec, training_sentences, EmbeddingTable, VectorFormat, W2vConfig};
use crate::features::{BowConfig, BowMode, IdfFormula, SparseFeatureConfig};
use crate::models::{CnnConfig, RnnConfig, TrainConfig};
use crate::parallel::par_map;
use crate::pipeline::{ClassifierSpec, FeatureSpec, FitInfo, Pipeline, PipelineSpec};
use crate::seed;
use crate::svm::SvmConfig;
use crate::textprep::{Preprocessor, ProcessedMessage};
use crate::{Error, Result};

pub const BOW_ROWS: [&str; 3] = ["Bool", "Freq", "Tfidf"];
pub const W2V_ROWS: [&str; 4] = ["GW2V", "GW2V+DESC", "CW2V", "CW2V+DESC"];
pub const ABLATION_ROWS: [&str; 3] = ["Unigrams", "Bigrams", "2-letter POS"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    /// SVM on n-gram BOW.
    SvmBow,
    /// SVM on POS counts + DESC.
    SvmPosDesc,
    /// SVM on BOW + POS + DESC.
    SvmCombined,
    /// SVM on mean word vectors.
    SvmW2v,
    /// Tfidf BOW + POS + DESC with fewer n-gram orders or two-letter tags.
    SvmAblation,
    Cnn,
    Rnn,
}

impl TableKind {
    pub fn rows(self) -> &'static [&'static str] {
        match self {
            TableKind::SvmBow | TableKind::SvmPosDesc | TableKind::SvmCombined => &BOW_ROWS,
            TableKind::SvmW2v | TableKind::Cnn | TableKind::Rnn => &W2V_ROWS,
            TableKind::SvmAblation => &ABLATION_ROWS,
        }
    }

    fn title(self) -> &'static str {
        match self {
            TableKind::SvmBow => "SVM on the BOW feature set",
            TableKind::SvmPosDesc => "SVM on the POS + DESC feature set",
            TableKind::SvmCombined => "SVM on the combined BOW + POS + DESC feature set",
            TableKind::SvmW2v => "SVM on generic and custom word2vec sets",
            TableKind::SvmAblation => "Additional SVM experiments (Tfidf)",
            TableKind::Cnn => "Convolutional neural network",
            TableKind::Rnn => "Recurrent neural network",
        }
    }
}

fn default_orders() -> Vec<usize> {
    vec![1, 2, 3]
}
fn default_min_df() -> usize {
    2
}
fn default_folds() -> usize {
    10
}
fn default_true() -> bool {
    true
}
fn default_train_fraction() -> f64 {
    0.699
}

/// Where the labeled data and embedding inputs come from. Relative paths are
/// resolved against the experiment file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    /// Pre-split train/test files.
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Or one labeled file split by `train_fraction`.
    pub corpus: Option<PathBuf>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_true")]
    pub stratified: bool,
    /// Extra messages (labels ignored) added to the custom-embedding corpus.
    pub unlabeled: Option<PathBuf>,
    /// Pretrained table for the GW2V rows.
    pub generic_embeddings: Option<PathBuf>,
    pub generic_format: Option<VectorFormat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub name: String,
    pub kind: TableKind,
    /// Subset of the kind's rows, in any order; default all of them.
    pub rows: Option<Vec<String>>,
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    #[serde(default = "default_min_df")]
    pub min_df: usize,
    #[serde(default)]
    pub idf: IdfFormula,
    /// z-score DESC columns with training statistics (SVM tables).
    #[serde(default = "default_true")]
    pub standardize_desc: bool,
    /// Candidate C values for CV; empty means use `svm.c` as is.
    #[serde(default)]
    pub c_grid: Vec<f64>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub svm: SvmConfig,
    #[serde(default)]
    pub cnn: CnnConfig,
    #[serde(default)]
    pub rnn: RnnConfig,
    #[serde(default)]
    pub train: TrainConfig,
}

impl TableSpec {
    /// Row labels in table order.
    pub fn row_labels(&self) -> Result<Vec<&'static str>> {
        let all = self.kind.rows();
        let Some(wanted) = &self.rows else {
            return Ok(all.to_vec());
        };
        for w in wanted {
            if !all.contains(&w.as_str()) {
                return Err(Error::Config(format!(
                    "table {:?}: row {w:?} is not one of {}",
                    self.name,
                    all.join(", ")
                )));
            }
        }
        Ok(all.iter().copied().filter(|r| wanted.iter().any(|w| w == r)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Output root; a command-line `--out` takes precedence.
    pub out: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub save_models: bool,
    pub data: DataSpec,
    /// Training settings for the CW2V table; `seed` is derived.
    #[serde(default)]
    pub custom_embeddings: W2vConfig,
    #[serde(rename = "table")]
    pub tables: Vec<TableSpec>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut spec: ExperimentSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.base_dir = base_dir.into();
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return Err(Error::Config(format!("experiment name {:?} is not a plain directory name", self.name)));
        }
        if self.tables.is_empty() {
            return Err(Error::Config("no [[table]] entries".into()));
        }
        match (&self.data.train, &self.data.test, &self.data.corpus) {
            (Some(_), Some(_), None) | (None, None, Some(_)) => {}
            _ => return Err(Error::Config("data needs either train + test or corpus".into())),
        }
        let mut names = std::collections::BTreeSet::new();
        for t in &self.tables {
            if t.name.is_empty() || t.name.contains(['/', '\\']) || t.name.starts_with('.') {
                return Err(Error::Config(format!("table name {:?} is not a plain directory name", t.name)));
            }
            if !names.insert(&t.name) {
                return Err(Error::Config(format!("duplicate table name {:?}", t.name)));
            }
            let rows = t.row_labels()?;
            if rows.iter().any(|r| r.starts_with("GW2V")) && self.data.generic_embeddings.is_none() {
                return Err(Error::Config(format!(
                    "table {:?} has GW2V rows but data.generic_embeddings is not set",
                    t.name
                )));
            }
            t.train.validate()?;
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Input files the run reads, resolved.
    pub fn inputs(&self) -> Vec<PathBuf> {
        let d = &self.data;
        [&d.train, &d.test, &d.corpus, &d.unlabeled, &d.generic_embeddings]
            .into_iter()
            .flatten()
            .map(|p| self.resolve(p))
            .collect()
    }

    fn uses_custom(&self) -> Result<bool> {
        for t in &self.tables {
            if t.row_labels()?.iter().any(|r| r.starts_with("CW2V")) {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// One evaluated (table, row) pair.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub table: String,
    pub row: String,
    pub dir: PathBuf,
    pub report: EvalReport,
    pub fit: FitInfo,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub tables: Vec<ResultTable>,
    pub cells: Vec<CellResult>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Embeddings {
    None,
    Generic,
    Custom,
}

struct Cell<'a> {
    table: &'a TableSpec,
    row: &'static str,
}

impl Cell<'_> {
    fn dir_name(&self) -> String {
        let slug: String = self
            .row
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' })
            .collect();
        format!("{}-{slug}", self.table.name)
    }

    fn seed_label(&self) -> String {
        format!("experiment/{}/{}", self.table.name, self.row)
    }

    fn pipeline_spec(&self, master: u64) -> (PipelineSpec, Embeddings) {
        let t = self.table;
        let cell_seed = seed::derive(master, &self.seed_label());
        let bow = |orders: Vec<usize>| {
            Some(BowConfig {
                orders,
                min_df: t.min_df,
            })
        };
        let mode = match self.row {
            "Bool" => BowMode::Bool,
            "Freq" => BowMode::Freq,
            _ => BowMode::Tfidf,
        };
        let sparse = |bow: Option<BowConfig>, pos: Option<bool>, desc: bool| FeatureSpec::Sparse {
            config: SparseFeatureConfig {
                bow,
                pos_two_letter: pos,
                desc,
                standardize_desc: t.standardize_desc,
                mode,
                idf: t.idf,
            },
        };
        let (embeddings, desc) = match self.row {
            "GW2V" => (Embeddings::Generic, false),
            "GW2V+DESC" => (Embeddings::Generic, true),
            "CW2V" => (Embeddings::Custom, false),
            "CW2V+DESC" => (Embeddings::Custom, true),
            _ => (Embeddings::None, false),
        };
        let features = match t.kind {
            TableKind::SvmBow => sparse(bow(t.orders.clone()), None, false),
            TableKind::SvmPosDesc => sparse(None, Some(false), true),
            TableKind::SvmCombined => sparse(bow(t.orders.clone()), Some(false), true),
            TableKind::SvmAblation => match self.row {
                "Unigrams" => sparse(bow(vec![1]), Some(false), true),
                "Bigrams" => sparse(bow(vec![1, 2]), Some(false), true),
                _ => sparse(bow(t.orders.clone()), Some(true), true),
            },
            TableKind::SvmW2v => FeatureSpec::MeanEmbedding { desc },
            TableKind::Cnn | TableKind::Rnn => FeatureSpec::Matrix { desc },
        };
        let classifier = match t.kind {
            TableKind::Cnn => ClassifierSpec::Cnn {
                config: t.cnn.clone(),
                train: TrainConfig {
                    seed: cell_seed,
                    ..t.train.clone()
                },
            },
            TableKind::Rnn => ClassifierSpec::Rnn {
                config: t.rnn.clone(),
                train: TrainConfig {
                    seed: cell_seed,
                    ..t.train.clone()
                },
            },
            _ => ClassifierSpec::Svm {
                config: SvmConfig {
                    seed: cell_seed,
                    ..t.svm.clone()
                },
                c_grid: t.c_grid.clone(),
                folds: t.folds,
            },
        };
        (PipelineSpec { features, classifier }, embeddings)
    }
}

struct Prepared {
    train: Vec<ProcessedMessage>,
    train_labels: Vec<StageLabel>,
    test: Vec<ProcessedMessage>,
    test_labels: Vec<StageLabel>,
    generic: Option<EmbeddingTable>,
    custom: Option<EmbeddingTable>,
}

/// Writes `bytes` to a sibling temp file and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn load(spec: &ExperimentSpec, path: &Path) -> Result<Dataset> {
    let p = spec.resolve(path);
    Ok(load_corpus(&p, CorpusFormat::from_path(&p))?)
}

fn prepare(spec: &ExperimentSpec, out: &Path, jobs: usize) -> Result<Prepared> {
    let (train, test) = match (&spec.data.train, &spec.data.test, &spec.data.corpus) {
        (Some(tr), Some(te), _) => (load(spec, tr)?, load(spec, te)?),
        (_, _, Some(c)) => split(
            &load(spec, c)?,
            spec.data.train_fraction,
            seed::derive(spec.seed, "experiment/split"),
            spec.data.stratified,
        )?,
        _ => unreachable!("validated"),
    };
    let pre = Preprocessor::bundled();
    let train_labels = train.labels()?;
    let test_labels = test.labels()?;
    let train_pm = pre.process_all(train.messages(), jobs)?;
    let test_pm = pre.process_all(test.messages(), jobs)?;

    let generic = match &spec.data.generic_embeddings {
        Some(p) if spec.tables.iter().any(|t| t.row_labels().is_ok_and(|r| r.iter().any(|r| r.starts_with("GW2V")))) => {
            let p = spec.resolve(p);
            let fmt = spec.data.generic_format.unwrap_or_else(|| VectorFormat::from_path(&p));
            Some(load_embeddings(&p, fmt)?)
        }
        _ => None,
    };
    let custom = if spec.uses_custom()? {
        let mut sentences = training_sentences(&train_pm);
        if let Some(u) = &spec.data.unlabeled {
            let extra = load(spec, u)?;
            sentences.extend(training_sentences(&pre.process_all(extra.messages(), jobs)?));
        }
        let cfg = W2vConfig {
            seed: seed::derive(spec.seed, "experiment/cw2v"),
            ..spec.custom_embeddings.clone()
        };
        let table = train_word2vec(&sentences, &cfg)?;
        let mut buf = Vec::new();
        table.write_binary(&mut buf).map_err(|e| Error::io(out, e))?;
        write_atomic(&out.join("cw2v.bin"), &buf)?;
        Some(table)
    } else {
        None
    };
    Ok(Prepared {
        train: train_pm,
        train_labels,
        test: test_pm,
        test_labels,
        generic,
        custom,
    })
}

fn run_cell(spec: &ExperimentSpec, cell: &Cell, data: &Prepared, out: &Path, jobs: usize) -> Result<CellResult> {
    let (pspec, which) = cell.pipeline_spec(spec.seed);
    let table = match which {
        Embeddings::None => None,
        Embeddings::Generic => data.generic.clone(),
        Embeddings::Custom => data.custom.clone(),
    };
    let (pipeline, fit) = Pipeline::fit(&pspec, &data.train, &data.train_labels, table, jobs)?;
    let report = pipeline.evaluate(&data.test, &data.test_labels, jobs)?;
    let dir = out.join(cell.dir_name());
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_atomic(&dir.join("report.csv"), report.to_csv().as_bytes())?;
    write_atomic(&dir.join("report.txt"), report.render().as_bytes())?;
    let trials = serde_json::to_string_pretty(&fit).map_err(|e| Error::Config(e.to_string()))? + "\n";
    write_atomic(&dir.join("trials.json"), trials.as_bytes())?;
    if spec.save_models {
        let model_dir = dir.join("model");
        let tmp = dir.join("model.partial");
        if tmp.exists() {
            std::fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
        }
        pipeline.save(&tmp)?;
        if model_dir.exists() {
            std::fs::remove_dir_all(&model_dir).map_err(|e| Error::io(&model_dir, e))?;
        }
        std::fs::rename(&tmp, &model_dir).map_err(|e| Error::io(&model_dir, e))?;
    }
    Ok(CellResult {
        table: cell.table.name.clone(),
        row: cell.row.to_owned(),
        dir,
        report,
        fit,
    })
}

/// Runs every cell of `spec` and writes the reports under `out_root/<name>/`.
/// Cells run on up to `jobs` threads; results do not depend on `jobs`.
/// When some cells fail, the completed rows are still written and the first
/// error is returned.
pub fn run_experiment(spec: &ExperimentSpec, out_root: &Path, jobs: usize) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let out = out_root.join(&spec.name);
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let data = prepare(spec, &out, jobs)?;

    let mut cells = Vec::new();
    for t in &spec.tables {
        for row in t.row_labels()? {
            cells.push(Cell { table: t, row });
        }
    }
    let inner = if cells.len() > 1 { 1 } else { jobs };
    let results = par_map(&cells, jobs, |c| run_cell(spec, c, &data, &out, inner));

    let mut tables = Vec::new();
    let mut summary = format!("experiment {}\nseed {}\n\n", spec.name, spec.seed);
    let mut done = Vec::new();
    let mut first_err = None;
    let mut it = cells.iter().zip(results);
    for t in &spec.tables {
        let mut table = ResultTable::new(format!("{} ({})", t.name, t.kind.title()));
        for (cell, res) in it.by_ref().take(t.row_labels()?.len()) {
            match res {
                Ok(r) => {
                    table.push(cell.row, r.report.row());
                    done.push(r);
                }
                Err(e) => {
                    let _ = writeln!(summary, "FAILED {} {}: {e}", t.name, cell.row);
                    first_err.get_or_insert(e);
                }
            }
        }
        write_atomic(&out.join(format!("{}.csv", t.name)), table.to_csv().as_bytes())?;
        summary.push_str(&table.render());
        summary.push('\n');
        tables.push(table);
    }
    write_atomic(&out.join("summary.txt"), summary.as_bytes())?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(ExperimentOutcome {
            dir: out,
            tables,
            cells: done,
        }),
    }
}
