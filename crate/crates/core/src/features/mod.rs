//! Classifier inputs: sparse BOW/POS/DESC vectors and dense padded
//! embedding matrices.
//!
//! Tf-idf weighting uses the raw in-message count as tf and, by default,
//! the smoothed `idf = ln((1 + N) / (1 + df)) + 1`; the weighted document
//! vector is L2-normalized. Bool and Freq vectors are not normalized.
//! Vocabularies and idf tables are fit on training messages only.
//!
//! Feature-matrix dump format, for comparing against other
//! implementations:
//!
//! ```text
//! <rows> <dim>
//! 0:1 4:0.5
//! 3:2
//! ```
//!
//! One line per vector of space-separated `index:value` pairs (an empty
//! line is the zero vector).

mod desc;
mod embed;
mod pos;
mod sparse;
mod vocab;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::EmbeddingTable;
use crate::parallel::par_map;
use crate::textprep::ProcessedMessage;

pub use desc::{desc_features, DescFeatures, DescScaler, DESC_NAMES};
pub use embed::{embed_matrix, embed_matrix_with, lookup, mean_embedding, EmbeddedMessage, MAX_WORDS};
pub use pos::{pos_counts, pos_feature_names, pos_features};
pub use sparse::SparseVector;
pub use vocab::{
    bow_vector, build_vocabulary, extract_ngrams, weigh, IdfFormula, IdfTable, TermCounts, Vocabulary,
    NGRAM_SEP,
};

pub(crate) use vocab::fingerprint;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("tf-idf weighting needs a fitted idf table")]
    IdfMissing,
    #[error("idf table was fitted on a different vocabulary")]
    VocabMismatch,
    #[error("nothing to assemble")]
    EmptyParts,
    #[error("embedding table is empty")]
    EmptyEmbeddingTable,
    #[error("n-gram orders must be a non-empty subset of {{1,2,3}}, got {0:?}")]
    InvalidOrders(Vec<usize>),
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("feature dump line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("feature configuration selects no features")]
    NoFeatures,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum BowMode {
    Bool,
    Freq,
    #[default]
    Tfidf,
}

impl BowMode {
    pub const ALL: [BowMode; 3] = [BowMode::Bool, BowMode::Freq, BowMode::Tfidf];

    pub fn as_str(self) -> &'static str {
        match self {
            BowMode::Bool => "Bool",
            BowMode::Freq => "Freq",
            BowMode::Tfidf => "Tfidf",
        }
    }
}

impl std::fmt::Display for BowMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BowMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "bool" => Ok(BowMode::Bool),
            "freq" => Ok(BowMode::Freq),
            "tfidf" => Ok(BowMode::Tfidf),
            other => Err(format!("unknown BOW mode {other:?} (bool|freq|tfidf)")),
        }
    }
}

/// One input to [`assemble`].
#[derive(Debug, Clone, PartialEq)]
pub enum Part {
    Sparse(SparseVector),
    /// Five dense trailing coordinates.
    Desc([f64; 5]),
}

impl From<SparseVector> for Part {
    fn from(v: SparseVector) -> Self {
        Part::Sparse(v)
    }
}

impl From<DescFeatures> for Part {
    fn from(d: DescFeatures) -> Self {
        Part::Desc(d.to_array())
    }
}

/// Concatenates parts, shifting each part's indices past the previous ones.
pub fn assemble(parts: &[Part]) -> Result<SparseVector, FeatureError> {
    let mut iter = parts.iter().map(|p| match p {
        Part::Sparse(v) => v.clone(),
        Part::Desc(d) => SparseVector::from_dense(d),
    });
    let first = iter.next().ok_or(FeatureError::EmptyParts)?;
    Ok(iter.fold(first, |acc, v| acc.concat(&v)))
}

/// Human-readable names for every coordinate of a feature space.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureSpace {
    names: Vec<String>,
}

impl FeatureSpace {
    pub fn new(names: Vec<String>) -> Self {
        FeatureSpace { names }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(self.names.iter().map(String::as_str))
    }

    pub fn extend(&mut self, prefix: &str, names: impl IntoIterator<Item = impl AsRef<str>>) {
        self.names
            .extend(names.into_iter().map(|n| format!("{prefix}{}", n.as_ref())));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BowConfig {
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    #[serde(default = "default_min_df")]
    pub min_df: usize,
}

fn default_orders() -> Vec<usize> {
    vec![1, 2, 3]
}

fn default_min_df() -> usize {
    2
}

impl Default for BowConfig {
    fn default() -> Self {
        BowConfig {
            orders: default_orders(),
            min_df: default_min_df(),
        }
    }
}

/// Which sparse feature blocks to build and how to weight them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseFeatureConfig {
    #[serde(default)]
    pub bow: Option<BowConfig>,
    /// POS counts; `Some(true)` truncates base tags to two letters.
    #[serde(default)]
    pub pos_two_letter: Option<bool>,
    #[serde(default)]
    pub desc: bool,
    #[serde(default)]
    pub standardize_desc: bool,
    /// Weighting applied to the BOW and POS blocks.
    #[serde(default)]
    pub mode: BowMode,
    #[serde(default)]
    pub idf: IdfFormula,
}

impl Default for SparseFeatureConfig {
    fn default() -> Self {
        SparseFeatureConfig {
            bow: Some(BowConfig::default()),
            pos_two_letter: None,
            desc: false,
            standardize_desc: false,
            mode: BowMode::Tfidf,
            idf: IdfFormula::Smooth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WeightedBlock {
    vocab: Vocabulary,
    idf: Option<IdfTable>,
}

impl WeightedBlock {
    fn fit(vocab: Vocabulary, mode: BowMode, formula: IdfFormula) -> Self {
        let idf = (mode == BowMode::Tfidf).then(|| IdfTable::fit(&vocab, formula));
        WeightedBlock { vocab, idf }
    }

    fn apply(&self, counts: &TermCounts, mode: BowMode) -> Result<SparseVector, FeatureError> {
        weigh(counts, &self.vocab, mode, self.idf.as_ref())
    }
}

/// A fitted sparse featurizer: BOW ⊕ POS ⊕ DESC as configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseFeaturizer {
    config: SparseFeatureConfig,
    bow: Option<WeightedBlock>,
    pos: Option<WeightedBlock>,
    desc_scaler: Option<DescScaler>,
}

impl SparseFeaturizer {
    pub fn fit(config: &SparseFeatureConfig, train: &[ProcessedMessage]) -> Result<Self, FeatureError> {
        if config.bow.is_none() && config.pos_two_letter.is_none() && !config.desc {
            return Err(FeatureError::NoFeatures);
        }
        if train.is_empty() {
            return Err(FeatureError::EmptyCorpus);
        }
        let bow = match &config.bow {
            Some(b) => Some(WeightedBlock::fit(
                build_vocabulary(train, &b.orders, b.min_df)?,
                config.mode,
                config.idf,
            )),
            None => None,
        };
        let pos = match config.pos_two_letter {
            Some(two) => {
                let docs: Vec<TermCounts> = train.iter().map(|pm| pos_counts(pm, two)).collect();
                let names = pos_feature_names(two).iter().map(|s| s.to_string()).collect();
                Some(WeightedBlock::fit(Vocabulary::fixed(names, &docs)?, config.mode, config.idf))
            }
            None => None,
        };
        let desc_scaler = (config.desc && config.standardize_desc).then(|| {
            let rows: Vec<[f64; 5]> = train.iter().map(|pm| desc_features(&pm.source).to_array()).collect();
            DescScaler::fit(&rows)
        });
        Ok(SparseFeaturizer {
            config: config.clone(),
            bow,
            pos,
            desc_scaler,
        })
    }

    pub fn config(&self) -> &SparseFeatureConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> Option<&Vocabulary> {
        self.bow.as_ref().map(|b| &b.vocab)
    }

    pub fn dim(&self) -> usize {
        self.bow.as_ref().map_or(0, |b| b.vocab.len())
            + self.pos.as_ref().map_or(0, |b| b.vocab.len())
            + if self.config.desc { 5 } else { 0 }
    }

    pub fn space(&self) -> FeatureSpace {
        let mut space = FeatureSpace::default();
        if let Some(b) = &self.bow {
            space.extend("", b.vocab.terms());
        }
        if let Some(p) = &self.pos {
            space.extend("pos:", p.vocab.terms());
        }
        if self.config.desc {
            space.extend("", DESC_NAMES);
        }
        space
    }

    /// DESC values as fed to the classifier (standardized when configured).
    pub fn desc_values(&self, pm: &ProcessedMessage) -> [f64; 5] {
        let raw = desc_features(&pm.source).to_array();
        match &self.desc_scaler {
            Some(s) => s.apply(raw),
            None => raw,
        }
    }

    pub fn transform(&self, pm: &ProcessedMessage) -> Result<SparseVector, FeatureError> {
        let mut parts = Vec::with_capacity(3);
        if let Some(b) = &self.bow {
            parts.push(Part::Sparse(b.apply(&extract_ngrams(&pm.lemmas(), b.vocab.orders()), self.config.mode)?));
        }
        if let (Some(p), Some(two)) = (&self.pos, self.config.pos_two_letter) {
            parts.push(Part::Sparse(p.apply(&pos_counts(pm, two), self.config.mode)?));
        }
        if self.config.desc {
            parts.push(Part::Desc(self.desc_values(pm)));
        }
        assemble(&parts)
    }

    pub fn transform_all(&self, pms: &[ProcessedMessage], jobs: usize) -> Result<Vec<SparseVector>, FeatureError> {
        par_map(pms, jobs, |pm| self.transform(pm)).into_iter().collect()
    }
}

/// Mean word vector, optionally followed by DESC values, as a sparse vector.
pub fn mean_embedding_vector(pm: &ProcessedMessage, table: &EmbeddingTable, desc: Option<[f64; 5]>) -> SparseVector {
    let mut dense = mean_embedding(pm, table);
    if let Some(d) = desc {
        dense.extend_from_slice(&d);
    }
    SparseVector::from_dense(&dense)
}

/// Writes vectors in the dump format.
pub fn write_feature_matrix<W: Write>(out: &mut W, rows: &[SparseVector]) -> Result<(), FeatureError> {
    let dim = rows.first().map_or(0, |r| r.dim());
    writeln!(out, "{} {}", rows.len(), dim)?;
    for r in rows {
        let line: Vec<String> = r.iter().map(|(i, x)| format!("{i}:{x}")).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Reads the dump format.
pub fn read_feature_matrix<R: BufRead>(reader: R) -> Result<Vec<SparseVector>, FeatureError> {
    let mut lines = reader.lines();
    let bad = |line: usize, reason: String| FeatureError::Format { line, reason };
    let header = lines.next().ok_or_else(|| bad(1, "missing header".into()))??;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|f| f.parse().map_err(|_| bad(1, format!("bad header {header:?}"))))
        .collect::<Result<_, _>>()?;
    let [n, dim] = dims[..] else {
        return Err(bad(1, format!("bad header {header:?}")));
    };
    let mut rows = Vec::with_capacity(n);
    for (k, line) in lines.enumerate() {
        let line_no = k + 2;
        let line = line?;
        let pairs = line
            .split_whitespace()
            .map(|p| {
                let (i, x) = p.split_once(':').ok_or_else(|| bad(line_no, format!("bad pair {p:?}")))?;
                let i: usize = i.parse().map_err(|_| bad(line_no, format!("bad index {i:?}")))?;
                let x: f64 = x.parse().map_err(|_| bad(line_no, format!("bad value {x:?}")))?;
                Ok((i, x))
            })
            .collect::<Result<Vec<_>, FeatureError>>()?;
        rows.push(SparseVector::from_pairs(dim, pairs).map_err(|e| bad(line_no, e.to_string()))?);
    }
    if rows.len() != n {
        return Err(bad(1, format!("header declares {n} rows, found {}", rows.len())));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Message;
    use crate::textprep::Preprocessor;

    #[test]
    fn assemble_dimensions() {
        let bow = SparseVector::from_pairs(10, vec![(2, 1.0)]).unwrap();
        let pos = SparseVector::from_pairs(4, vec![(0, 3.0)]).unwrap();
        let d = DescFeatures {
            word_count: 3,
            likes: 0,
            exclamation_count: 1,
            question_count: 0,
            capital_ratio: 0.5,
        };
        let out = assemble(&[bow.clone().into(), pos.into(), d.into()]).unwrap();
        assert_eq!(out.dim(), 19);
        assert_eq!(out.nnz(), 5);
        assert_eq!(out.get(10), 3.0);
        assert_eq!(out.get(16), 1.0);
        assert_eq!(assemble(&[bow.clone().into()]).unwrap(), bow);
        assert!(matches!(assemble(&[]), Err(FeatureError::EmptyParts)));
    }

    #[test]
    fn dump_round_trip() {
        let rows = vec![
            SparseVector::from_pairs(6, vec![(0, 1.0), (4, 0.123456789)]).unwrap(),
            SparseVector::zeros(6),
        ];
        let mut buf = Vec::new();
        write_feature_matrix(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8_lossy(&buf), "2 6\n0:1 4:0.123456789\n\n");
        assert_eq!(read_feature_matrix(&buf[..]).unwrap(), rows);
        assert!(read_feature_matrix("1 2\n5:1\n".as_bytes()).is_err());
    }

    #[test]
    fn combined_featurizer() {
        let pp = Preprocessor::bundled();
        let msgs = [
            "Road closed due to flooding!",
            "Road open again after the flooding",
            "Thank you to our community",
        ];
        let pms: Vec<_> = msgs
            .iter()
            .enumerate()
            .map(|(i, t)| pp.process(&Message::new(i.to_string(), *t)).unwrap())
            .collect();
        let cfg = SparseFeatureConfig {
            bow: Some(BowConfig { orders: vec![1, 2], min_df: 1 }),
            pos_two_letter: Some(true),
            desc: true,
            ..Default::default()
        };
        let f = SparseFeaturizer::fit(&cfg, &pms).unwrap();
        let space = f.space();
        assert_eq!(space.dim(), f.dim());
        let x = f.transform(&pms[0]).unwrap();
        assert_eq!(x.dim(), f.dim());
        assert_eq!(x.get(f.dim() - 5), 5.0);
        assert!(space.names().iter().any(|n| n == "road close"));
        assert!(space.names().iter().any(|n| n == "pos:NN"));
        assert_eq!(f.transform_all(&pms, 3).unwrap()[2], f.transform(&pms[2]).unwrap());
        let none = SparseFeatureConfig { bow: None, ..Default::default() };
        assert!(matches!(SparseFeaturizer::fit(&none, &pms), Err(FeatureError::NoFeatures)));
    }
}
