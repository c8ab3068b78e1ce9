//! Word embeddings: skip-gram negative-sampling training, vector-table IO and
//! cosine nearest neighbors.
//!
//! Text format: an optional header line `vocab_size d`, then one
//! `word f1 ... fd` line per word. A first line of exactly two integers is
//! read as the header.
//!
//! Binary format (the layout of the original word2vec tool and the common
//! pretrained-vector distributions): ASCII header `vocab_size d\n`, then per
//! entry the UTF-8 word terminated by a single space, `d` little-endian f32
//! values, and a `\n`. Readers skip any whitespace before a word, so files
//! without the trailing newline also load.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("no word reaches min_count; nothing to train")]
    EmptyCorpusAfterFiltering,
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("line {line}: expected {expected} components, found {found}")]
    InconsistentDimension {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("word {0:?} is not in the embedding table")]
    WordNotFound(String),
    #[error("duplicate word {0:?} in embedding table")]
    DuplicateWord(String),
    #[error("invalid word2vec configuration: {0}")]
    InvalidConfig(String),
    #[error("embedding table is empty")]
    EmptyTable,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, EmbeddingError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EmbeddingError + '_ {
    move |source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorFormat {
    Text,
    Binary,
}

impl FromStr for VectorFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "text" | "txt" => Ok(VectorFormat::Text),
            "binary" | "bin" => Ok(VectorFormat::Binary),
            other => Err(format!("unknown vector format {other:?} (text|binary)")),
        }
    }
}

impl VectorFormat {
    /// `.bin` means binary, anything else text.
    pub fn from_path(path: &Path) -> VectorFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => VectorFormat::Binary,
            _ => VectorFormat::Text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct W2vConfig {
    pub dim: usize,
    /// Maximum context radius; each position draws a radius in 1..=window.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: usize,
    /// Frequent-word subsampling threshold; 0 disables subsampling.
    pub subsample: f64,
    pub lr_start: f64,
    pub lr_end: f64,
    pub seed: u64,
    /// 1 is bit-reproducible; more threads use unsynchronized updates.
    pub threads: usize,
}

impl Default for W2vConfig {
    fn default() -> Self {
        W2vConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            min_count: 5,
            subsample: 1e-3,
            lr_start: 0.025,
            lr_end: 0.025 * 1e-4,
            seed: 1,
            threads: 1,
        }
    }
}

impl W2vConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(EmbeddingError::InvalidConfig(what.to_owned()));
        if self.dim == 0 {
            return bad("dim must be ≥ 1");
        }
        if self.window == 0 {
            return bad("window must be ≥ 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be ≥ 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be ≥ 1");
        }
        if !(self.lr_start > 0.0 && self.lr_end >= 0.0 && self.lr_end <= self.lr_start) {
            return bad("need lr_start > 0 and 0 ≤ lr_end ≤ lr_start");
        }
        if self.subsample < 0.0 {
            return bad("subsample must be ≥ 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub config: W2vConfig,
    pub corpus_tokens: u64,
}

/// Word → dense vector map with a fixed dimensionality.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    vectors: Vec<f32>,
    index: HashMap<String, usize>,
    meta: Option<TrainingMeta>,
}

impl PartialEq for EmbeddingTable {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.words == other.words && self.vectors == other.vectors
    }
}

impl EmbeddingTable {
    /// `vectors` is row-major, `words.len() × dim`.
    pub fn new(dim: usize, words: Vec<String>, vectors: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(EmbeddingError::InvalidConfig("dimension must be ≥ 1".into()));
        }
        if vectors.len() != words.len() * dim {
            return Err(EmbeddingError::InconsistentDimension {
                line: 0,
                expected: words.len() * dim,
                found: vectors.len(),
            });
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(EmbeddingError::DuplicateWord(w.clone()));
            }
        }
        Ok(EmbeddingTable {
            dim,
            words,
            vectors,
            index,
            meta: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn meta(&self) -> Option<&TrainingMeta> {
        self.meta.as_ref()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.words.iter().enumerate().map(|(i, w)| (w.as_str(), self.row(i)))
    }

    /// Cosine similarity of two stored words.
    pub fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        let va = self.get(a).ok_or_else(|| EmbeddingError::WordNotFound(a.to_owned()))?;
        let vb = self.get(b).ok_or_else(|| EmbeddingError::WordNotFound(b.to_owned()))?;
        Ok(cosine(va, vb))
    }

    /// The `k` most cosine-similar other words, descending; ties broken by
    /// word order.
    pub fn nearest(&self, word: &str, k: usize) -> Result<Vec<(String, f64)>> {
        let &wi = self
            .index
            .get(word)
            .ok_or_else(|| EmbeddingError::WordNotFound(word.to_owned()))?;
        let query = self.row(wi);
        let mut scored: Vec<(usize, f64)> = (0..self.len())
            .filter(|&i| i != wi)
            .map(|i| (i, cosine(query, self.row(i))))
            .collect();
        scored.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.words[a.0].cmp(&self.words[b.0]))
        });
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(i, s)| (self.words[i].clone(), s))
            .collect())
    }

    pub fn save(&self, path: impl AsRef<Path>, format: VectorFormat) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(io_err(path))?;
        let mut out = BufWriter::new(file);
        match format {
            VectorFormat::Text => self.write_text(&mut out),
            VectorFormat::Binary => self.write_binary(&mut out),
        }
        .and_then(|_| out.flush())
        .map_err(io_err(path))
    }

    pub fn write_text<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (w, v) in self.iter() {
            write!(out, "{w}")?;
            for x in v {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn write_binary<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (w, v) in self.iter() {
            out.write_all(w.as_bytes())?;
            out.write_all(b" ")?;
            for &x in v {
                out.write_f32::<LittleEndian>(x)?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut words = Vec::new();
        let mut vectors = Vec::new();
        let mut dim: Option<usize> = None;
        let mut declared: Option<usize> = None;
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| EmbeddingError::Format {
                line: line_no,
                reason: e.to_string(),
            })?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if i == 0 && fields.len() == 2 {
                if let (Ok(n), Ok(d)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                    declared = Some(n);
                    dim = Some(d);
                    continue;
                }
            }
            let values = fields[1..]
                .iter()
                .map(|f| f.parse::<f32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| EmbeddingError::Format {
                    line: line_no,
                    reason: e.to_string(),
                })?;
            match dim {
                None if values.is_empty() => {
                    return Err(EmbeddingError::Format {
                        line: line_no,
                        reason: "row has no vector components".into(),
                    })
                }
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(EmbeddingError::InconsistentDimension {
                        line: line_no,
                        expected: d,
                        found: values.len(),
                    })
                }
                Some(_) => {}
            }
            words.push(fields[0].to_owned());
            vectors.extend(values);
        }
        if let Some(n) = declared {
            if n != words.len() {
                return Err(EmbeddingError::Format {
                    line: 1,
                    reason: format!("header declares {n} words, file has {}", words.len()),
                });
            }
        }
        let dim = dim.ok_or(EmbeddingError::EmptyTable)?;
        EmbeddingTable::new(dim, words, vectors)
    }

    pub fn read_binary<R: Read>(reader: R) -> Result<Self> {
        let mut r = BufReader::new(reader);
        let mut header = String::new();
        r.read_line(&mut header).map_err(|e| EmbeddingError::Format {
            line: 1,
            reason: e.to_string(),
        })?;
        let fields: Vec<usize> = header
            .split_whitespace()
            .map(|f| f.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| EmbeddingError::Format {
                line: 1,
                reason: format!("bad header {:?}", header.trim()),
            })?;
        let [n, dim] = fields[..] else {
            return Err(EmbeddingError::Format {
                line: 1,
                reason: format!("bad header {:?}", header.trim()),
            });
        };
        let mut words = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n * dim);
        for entry in 0..n {
            let bad = |reason: String| EmbeddingError::Format {
                line: entry + 2,
                reason,
            };
            let mut word = Vec::new();
            loop {
                let b = r.read_u8().map_err(|e| bad(e.to_string()))?;
                match b {
                    b' ' if !word.is_empty() => break,
                    b'\n' | b'\r' | b'\t' | b' ' if word.is_empty() => {}
                    _ => word.push(b),
                }
            }
            let word = String::from_utf8(word).map_err(|e| bad(e.to_string()))?;
            for _ in 0..dim {
                vectors.push(r.read_f32::<LittleEndian>().map_err(|e| bad(e.to_string()))?);
            }
            words.push(word);
        }
        EmbeddingTable::new(dim, words, vectors)
    }
}

/// Loads a vector table from a file.
pub fn load_embeddings(path: impl AsRef<Path>, format: VectorFormat) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    match format {
        VectorFormat::Text => EmbeddingTable::read_text(BufReader::new(file)),
        VectorFormat::Binary => EmbeddingTable::read_binary(file),
    }
}

/// Cosine similarity, 0 when either vector is zero.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// Shared f32 storage updated without locks.
struct SharedWeights(Vec<AtomicU32>);

impl SharedWeights {
    fn new(values: impl IntoIterator<Item = f32>) -> Self {
        SharedWeights(values.into_iter().map(|x| AtomicU32::new(x.to_bits())).collect())
    }

    #[inline]
    fn get(&self, i: usize) -> f32 {
        f32::from_bits(self.0[i].load(Ordering::Relaxed))
    }

    #[inline]
    fn add(&self, i: usize, delta: f32) {
        self.0[i].store((self.get(i) + delta).to_bits(), Ordering::Relaxed);
    }

    fn into_vec(self) -> Vec<f32> {
        self.0.into_iter().map(|a| f32::from_bits(a.into_inner())).collect()
    }
}

struct Trainer<'a> {
    cfg: &'a W2vConfig,
    input: SharedWeights,
    output: SharedWeights,
    /// Cumulative unigram^0.75 distribution for negative sampling.
    noise_cdf: Vec<f64>,
    keep_prob: Vec<f64>,
    total_steps: f64,
    processed: AtomicU64,
}

impl Trainer<'_> {
    fn sample_negative(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen::<f64>() * self.noise_cdf.last().copied().unwrap_or(1.0);
        self.noise_cdf.partition_point(|&c| c <= u).min(self.noise_cdf.len() - 1)
    }

    fn lr(&self, done: u64) -> f32 {
        let frac = (done as f64 / self.total_steps).min(1.0);
        (self.cfg.lr_start - (self.cfg.lr_start - self.cfg.lr_end) * frac) as f32
    }

    fn train_pair(&self, center: usize, context: usize, lr: f32, rng: &mut impl Rng, grad: &mut [f32]) {
        let d = self.cfg.dim;
        let ci = center * d;
        grad.iter_mut().for_each(|g| *g = 0.0);
        for n in 0..=self.cfg.negatives {
            let (target, label) = if n == 0 {
                (context, 1.0f32)
            } else {
                let t = self.sample_negative(rng);
                if t == context {
                    continue;
                }
                (t, 0.0)
            };
            let ti = target * d;
            let mut f = 0.0f32;
            for k in 0..d {
                f += self.input.get(ci + k) * self.output.get(ti + k);
            }
            let sig = 1.0 / (1.0 + (-f).exp());
            let g = (label - sig) * lr;
            for (k, gk) in grad.iter_mut().enumerate() {
                *gk += g * self.output.get(ti + k);
                self.output.add(ti + k, g * self.input.get(ci + k));
            }
        }
        for (k, &gk) in grad.iter().enumerate() {
            self.input.add(ci + k, gk);
        }
    }

    fn run(&self, sentences: &[Vec<usize>], epochs: usize, thread: usize) {
        let mut rng = seed::rng(self.cfg.seed, &format!("w2v/thread{thread}"));
        let mut grad = vec![0.0f32; self.cfg.dim];
        let mut kept = Vec::new();
        for _ in 0..epochs {
            for sent in sentences {
                kept.clear();
                for &w in sent {
                    if self.keep_prob[w] >= 1.0 || rng.gen::<f64>() < self.keep_prob[w] {
                        kept.push(w);
                    }
                }
                let done = self.processed.fetch_add(sent.len() as u64, Ordering::Relaxed);
                let lr = self.lr(done);
                for (pos, &center) in kept.iter().enumerate() {
                    let radius = rng.gen_range(1..=self.cfg.window);
                    let lo = pos.saturating_sub(radius);
                    let hi = (pos + radius).min(kept.len() - 1);
                    for (cpos, &context) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                        if cpos != pos {
                            self.train_pair(center, context, lr, &mut rng, &mut grad);
                        }
                    }
                }
            }
        }
    }
}

/// Lowercased word tokens of each message, the sentence form the
/// embedding trainer and [`crate::features::lookup`] agree on.
pub fn training_sentences(pms: &[crate::textprep::ProcessedMessage]) -> Vec<Vec<String>> {
    pms.iter()
        .map(|pm| pm.words().map(|t| t.surface.to_lowercase()).collect())
        .collect()
}

/// Trains skip-gram embeddings with negative sampling.
pub fn train_word2vec<S: AsRef<str>>(corpus: &[Vec<S>], cfg: &W2vConfig) -> Result<EmbeddingTable> {
    cfg.validate()?;
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for sent in corpus {
        for w in sent {
            *counts.entry(w.as_ref()).or_default() += 1;
        }
    }
    let mut vocab: Vec<(&str, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= cfg.min_count as u64)
        .collect();
    if vocab.is_empty() {
        return Err(EmbeddingError::EmptyCorpusAfterFiltering);
    }
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, &(w, _))| (w, i)).collect();
    let sentences: Vec<Vec<usize>> = corpus
        .iter()
        .map(|s| s.iter().filter_map(|w| index.get(w.as_ref()).copied()).collect())
        .collect();
    let total: u64 = vocab.iter().map(|&(_, c)| c).sum();

    let keep_prob = vocab
        .iter()
        .map(|&(_, c)| {
            if cfg.subsample <= 0.0 {
                return 1.0;
            }
            let t = cfg.subsample * total as f64;
            ((c as f64 / t).sqrt() + 1.0) * t / c as f64
        })
        .collect();
    let mut acc = 0.0;
    let noise_cdf = vocab
        .iter()
        .map(|&(_, c)| {
            acc += (c as f64).powf(0.75);
            acc
        })
        .collect();

    let d = cfg.dim;
    let mut init_rng = seed::rng(cfg.seed, "w2v/init");
    let input = SharedWeights::new((0..vocab.len() * d).map(|_| (init_rng.gen::<f32>() - 0.5) / d as f32));
    let output = SharedWeights::new(std::iter::repeat(0.0).take(vocab.len() * d));
    let trainer = Trainer {
        cfg,
        input,
        output,
        noise_cdf,
        keep_prob,
        total_steps: (total * cfg.epochs as u64).max(1) as f64,
        processed: AtomicU64::new(0),
    };

    let threads = cfg.threads.max(1).min(sentences.len().max(1));
    if threads == 1 {
        trainer.run(&sentences, cfg.epochs, 0);
    } else {
        let chunk = sentences.len().div_ceil(threads);
        std::thread::scope(|s| {
            for (t, part) in sentences.chunks(chunk).enumerate() {
                let trainer = &trainer;
                s.spawn(move || trainer.run(part, cfg.epochs, t));
            }
        });
    }

    let words = vocab.iter().map(|&(w, _)| w.to_owned()).collect();
    let mut table = EmbeddingTable::new(d, words, trainer.input.into_vec())?;
    table.meta = Some(TrainingMeta {
        config: cfg.clone(),
        corpus_tokens: total,
    });
    Ok(table)
}
