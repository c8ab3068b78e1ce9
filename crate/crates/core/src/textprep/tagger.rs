//! Averaged-perceptron POS tagger.
//!
//! Greedy left-to-right tagging with the feature templates of the classic
//! averaged-perceptron tagger (word, affixes, the two previous tags and a
//! ±2 word window). Frequent unambiguous words are resolved by a tag
//! dictionary before the perceptron is consulted.
//!
//! Training input is one sentence per line of whitespace-separated
//! `token/TAG` pairs (the tag is everything after the last `/`); lines
//! starting with `#` are comments.
//!
//! Model files are JSON:
//!
//! ```text
//! {"format": "stagegate-perceptron-tagger", "version": 1,
//!  "classes": ["CC", ...], "tagdict": {"the": "DT", ...},
//!  "weights": {"i suffix ing": {"VBG": 1.25, ...}, ...}}
//! ```

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{normalize::is_generic_term, PosTag, TextError, Token};
use crate::seed;

const BUNDLED_CORPUS: &str = include_str!("../../data/tagged_seed.txt");
const MODEL_FORMAT: &str = "stagegate-perceptron-tagger";
const MODEL_VERSION: u32 = 1;
const START: [&str; 2] = ["-START-", "-START2-"];
const END: [&str; 2] = ["-END-", "-END2-"];

pub type TaggedSentence = Vec<(String, PosTag)>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaggerTrainConfig {
    pub iterations: usize,
    /// Minimum corpus frequency for a word to enter the tag dictionary.
    pub tagdict_min_freq: usize,
    /// Minimum share of the word's majority tag for dictionary entry.
    pub tagdict_min_ratio: f64,
    pub seed: u64,
}

impl Default for TaggerTrainConfig {
    fn default() -> Self {
        TaggerTrainConfig {
            iterations: 5,
            tagdict_min_freq: 20,
            tagdict_min_ratio: 0.97,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PerceptronTagger {
    classes: Vec<PosTag>,
    tagdict: HashMap<String, PosTag>,
    weights: HashMap<String, Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    classes: Vec<PosTag>,
    tagdict: BTreeMap<String, PosTag>,
    weights: BTreeMap<String, BTreeMap<String, f64>>,
}

/// Accumulators for weight averaging.
#[derive(Clone)]
struct Averaging {
    totals: Vec<f64>,
    stamps: Vec<u64>,
}

fn feature_word(word: &str) -> String {
    if is_generic_term(word) {
        word.to_ascii_lowercase()
    } else if word.contains('-') && !word.starts_with('-') {
        "!HYPHEN".to_owned()
    } else if word.len() == 4 && word.bytes().all(|b| b.is_ascii_digit()) {
        "!YEAR".to_owned()
    } else if word.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        "!DIGITS".to_owned()
    } else {
        word.to_lowercase()
    }
}

fn suffix3(s: &str) -> &str {
    let n = s.chars().count();
    match s.char_indices().nth(n.saturating_sub(3)) {
        Some((i, _)) => &s[i..],
        None => s,
    }
}

fn features(i: usize, word: &str, context: &[String], prev: &str, prev2: &str) -> Vec<String> {
    // context is START + words + END, so word i sits at i + 2
    let i = i + 2;
    let first: String = word.chars().take(1).collect();
    vec![
        "bias".to_owned(),
        format!("i suffix {}", suffix3(word)),
        format!("i pref1 {first}"),
        format!("i-1 tag {prev}"),
        format!("i-2 tag {prev2}"),
        format!("i tag+i-2 tag {prev} {prev2}"),
        format!("i word {}", context[i]),
        format!("i-1 tag+i word {prev} {}", context[i]),
        format!("i-1 word {}", context[i - 1]),
        format!("i-1 suffix {}", suffix3(&context[i - 1])),
        format!("i-2 word {}", context[i - 2]),
        format!("i+1 word {}", context[i + 1]),
        format!("i+1 suffix {}", suffix3(&context[i + 1])),
        format!("i+2 word {}", context[i + 2]),
    ]
}

fn context_of<'a>(words: impl Iterator<Item = &'a str>) -> Vec<String> {
    START
        .iter()
        .map(|s| s.to_string())
        .chain(words.map(feature_word))
        .chain(END.iter().map(|s| s.to_string()))
        .collect()
}

impl PerceptronTagger {
    /// A tagger with no model; tagging fails with `TaggerModelMissing`.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_loaded(&self) -> bool {
        !self.classes.is_empty()
    }

    pub fn classes(&self) -> &[PosTag] {
        &self.classes
    }

    /// The model trained on the bundled seed corpus (built once per process).
    pub fn bundled() -> &'static PerceptronTagger {
        static BUNDLED: OnceLock<PerceptronTagger> = OnceLock::new();
        BUNDLED.get_or_init(|| {
            let sentences = parse_tagged_corpus(BUNDLED_CORPUS).expect("bundled corpus parses");
            let cfg = TaggerTrainConfig {
                iterations: 8,
                tagdict_min_freq: 2,
                tagdict_min_ratio: 0.97,
                seed: 0,
            };
            PerceptronTagger::train(&sentences, &cfg)
        })
    }

    /// Trains from tagged sentences.
    pub fn train(sentences: &[TaggedSentence], cfg: &TaggerTrainConfig) -> PerceptronTagger {
        let mut counts: HashMap<String, BTreeMap<PosTag, usize>> = HashMap::new();
        for sent in sentences {
            for (w, t) in sent {
                *counts.entry(w.clone()).or_default().entry(*t).or_default() += 1;
            }
        }
        let mut classes: Vec<PosTag> = counts
            .values()
            .flat_map(|m| m.keys().copied())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        classes.sort();
        let mut tagdict = HashMap::new();
        for (word, tags) in &counts {
            let total: usize = tags.values().sum();
            let (tag, n) = tags
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .expect("word has a tag");
            if total >= cfg.tagdict_min_freq && *n as f64 / total as f64 >= cfg.tagdict_min_ratio {
                tagdict.insert(word.clone(), *tag);
            }
        }

        let class_index: HashMap<PosTag, usize> =
            classes.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let mut tagger = PerceptronTagger {
            classes,
            tagdict,
            weights: HashMap::new(),
        };
        let nclass = tagger.classes.len();
        let mut avg: HashMap<String, Averaging> = HashMap::new();
        let mut instances: u64 = 0;
        let mut order: Vec<usize> = (0..sentences.len()).collect();
        let mut rng = seed::rng(cfg.seed, "tagger/train");

        for _ in 0..cfg.iterations {
            for &si in &order {
                let sent = &sentences[si];
                let context = context_of(sent.iter().map(|(w, _)| w.as_str()));
                let (mut prev, mut prev2) = (START[0].to_owned(), START[1].to_owned());
                for (i, (word, truth)) in sent.iter().enumerate() {
                    let guess = match tagger.tagdict.get(word) {
                        Some(&t) => t,
                        None => {
                            let feats = features(i, word, &context, &prev, &prev2);
                            let guess = tagger.predict(&feats);
                            instances += 1;
                            if guess != *truth {
                                let (ti, gi) = (class_index[truth], class_index[&guess]);
                                for f in feats {
                                    let w = tagger.weights.entry(f.clone()).or_insert_with(|| vec![0.0; nclass]);
                                    let a = avg.entry(f).or_insert_with(|| Averaging {
                                        totals: vec![0.0; nclass],
                                        stamps: vec![0; nclass],
                                    });
                                    for (ci, delta) in [(ti, 1.0), (gi, -1.0)] {
                                        a.totals[ci] += (instances - a.stamps[ci]) as f64 * w[ci];
                                        a.stamps[ci] = instances;
                                        w[ci] += delta;
                                    }
                                }
                            }
                            guess
                        }
                    };
                    prev2 = std::mem::replace(&mut prev, guess.as_str().to_owned());
                }
            }
            order.shuffle(&mut rng);
        }

        // average
        if instances > 0 {
            for (f, w) in tagger.weights.iter_mut() {
                let a = &avg[f];
                for ci in 0..nclass {
                    let total = a.totals[ci] + (instances - a.stamps[ci]) as f64 * w[ci];
                    w[ci] = total / instances as f64;
                }
            }
        }
        tagger.weights.retain(|_, w| w.iter().any(|&x| x != 0.0));
        tagger
    }

    fn predict(&self, feats: &[String]) -> PosTag {
        let mut scores = vec![0.0f64; self.classes.len()];
        for f in feats {
            if let Some(w) = self.weights.get(f) {
                for (s, x) in scores.iter_mut().zip(w) {
                    *s += x;
                }
            }
        }
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        self.classes[best]
    }

    /// One base tag per token.
    pub fn tag(&self, tokens: &[Token]) -> Result<Vec<PosTag>, TextError> {
        if !self.is_loaded() {
            return Err(TextError::TaggerModelMissing);
        }
        let context = context_of(tokens.iter().map(|t| t.surface.as_str()));
        let (mut prev, mut prev2) = (START[0].to_owned(), START[1].to_owned());
        let mut tags = Vec::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            let tag = match self.tagdict.get(&tok.surface) {
                Some(&t) => t,
                None => self.predict(&features(i, &tok.surface, &context, &prev, &prev2)),
            };
            prev2 = std::mem::replace(&mut prev, tag.as_str().to_owned());
            tags.push(tag);
        }
        Ok(tags)
    }

    /// Convenience: tokenize-free tagging of a whitespace-separated string.
    pub fn tag_words(&self, text: &str) -> Result<Vec<PosTag>, TextError> {
        let tokens: Vec<Token> = text
            .split_whitespace()
            .enumerate()
            .map(|(i, w)| Token::new(w, i))
            .collect();
        self.tag(&tokens)
    }

    pub fn to_json(&self) -> String {
        let model = ModelFile {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            classes: self.classes.clone(),
            tagdict: self.tagdict.iter().map(|(k, v)| (k.clone(), *v)).collect(),
            weights: self
                .weights
                .iter()
                .map(|(f, w)| {
                    let per_class = self
                        .classes
                        .iter()
                        .zip(w)
                        .filter(|(_, &x)| x != 0.0)
                        .map(|(c, &x)| (c.as_str().to_owned(), x))
                        .collect();
                    (f.clone(), per_class)
                })
                .collect(),
        };
        serde_json::to_string(&model).expect("tagger model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TextError> {
        let model: ModelFile =
            serde_json::from_str(text).map_err(|e| TextError::ModelFormat(e.to_string()))?;
        if model.format != MODEL_FORMAT || model.version != MODEL_VERSION {
            return Err(TextError::ModelFormat(format!(
                "expected {MODEL_FORMAT} v{MODEL_VERSION}, found {} v{}",
                model.format, model.version
            )));
        }
        let index: HashMap<&str, usize> = model
            .classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let mut weights = HashMap::with_capacity(model.weights.len());
        for (f, per_class) in model.weights {
            let mut w = vec![0.0; model.classes.len()];
            for (c, x) in per_class {
                let i = *index
                    .get(c.as_str())
                    .ok_or_else(|| TextError::ModelFormat(format!("weight for unknown class {c}")))?;
                w[i] = x;
            }
            weights.insert(f, w);
        }
        Ok(PerceptronTagger {
            classes: model.classes,
            tagdict: model.tagdict.into_iter().collect(),
            weights,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TextError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| TextError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TextError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| TextError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_json(&text)
    }
}

/// Parses the `token/TAG` training format.
pub fn parse_tagged_corpus(text: &str) -> Result<Vec<TaggedSentence>, TextError> {
    let mut sentences = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut sent = Vec::new();
        for pair in line.split_whitespace() {
            let (word, tag) = pair.rsplit_once('/').ok_or_else(|| TextError::TaggedCorpus {
                line: i + 1,
                reason: format!("{pair:?} is not token/TAG"),
            })?;
            let tag: PosTag = tag.parse().map_err(|reason| TextError::TaggedCorpus {
                line: i + 1,
                reason,
            })?;
            if word.is_empty() || tag.is_composite() {
                return Err(TextError::TaggedCorpus {
                    line: i + 1,
                    reason: format!("invalid pair {pair:?}"),
                });
            }
            sent.push((word.to_owned(), tag));
        }
        sentences.push(sent);
    }
    Ok(sentences)
}

impl PerceptronTagger {
    pub fn train_from_file(path: impl AsRef<Path>, cfg: &TaggerTrainConfig) -> Result<Self, TextError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| TextError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(Self::train(&parse_tagged_corpus(&text)?, cfg))
    }
}
