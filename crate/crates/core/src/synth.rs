//! Synthetic corpora with known structure.
//!
//! [`generate`] builds labeled message sets where each class owns a set of
//! exclusive keywords and all classes share a filler vocabulary. Every
//! message carries at least one keyword of its class, so a bag-of-words
//! classifier can in principle reach F1 = 1 on noiseless data.
//!
//! [`cooccurrence_corpus`] builds tokenized sentences drawn mostly from
//! one word group each, for checking that trained embeddings place
//! co-occurring words closer together than random pairs.
//!
//! Words are pronounceable lowercase pseudo-words ending in a vowel, so
//! normalization, tokenization and lemmatization leave them unchanged.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Message, StageLabel};
use crate::seed;
use crate::{Error, Result};

const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "v", "z", "br", "dr", "gl", "kr", "pl", "st", "tr",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

/// `count` distinct pseudo-words of 2–3 syllables, deterministic in `label`.
/// Words already in `taken` are skipped and the new ones added to it.
fn pseudo_words(count: usize, label: &str, taken: &mut BTreeSet<String>) -> Vec<String> {
    let mut rng = seed::rng(0, label);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let syllables = rng.gen_range(2..=3);
        let w: String = (0..syllables)
            .map(|_| format!("{}{}", ONSETS[rng.gen_range(0..ONSETS.len())], VOWELS[rng.gen_range(0..VOWELS.len())]))
            .collect();
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Number of classes used, taken in label order (2–4).
    pub classes: usize,
    pub train: usize,
    pub test: usize,
    pub seed: u64,
    pub keywords_per_class: usize,
    pub filler_words: usize,
    pub min_words: usize,
    pub max_words: usize,
    /// Probability that a position holds a class keyword.
    pub keyword_rate: f64,
    /// Probability that a message's label is replaced by another class.
    pub noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            classes: 4,
            train: 2000,
            test: 500,
            seed: 7,
            keywords_per_class: 30,
            filler_words: 300,
            min_words: 5,
            max_words: 80,
            keyword_rate: 0.15,
            noise: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(2..=StageLabel::COUNT).contains(&self.classes) {
            return bad(format!("classes must be between 2 and 4, got {}", self.classes));
        }
        if self.keywords_per_class == 0 || self.filler_words == 0 {
            return bad("keyword and filler vocabularies must be non-empty".into());
        }
        if self.min_words == 0 || self.min_words > self.max_words {
            return bad(format!("need 1 ≤ min_words ≤ max_words, got {}..{}", self.min_words, self.max_words));
        }
        if !(0.0..=1.0).contains(&self.keyword_rate) || !(0.0..=1.0).contains(&self.noise) {
            return bad("keyword_rate and noise must be in [0, 1]".into());
        }
        Ok(())
    }
}

/// The fixed vocabularies: per-class keywords (label order) and filler.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthVocabulary {
    pub keywords: Vec<Vec<String>>,
    pub filler: Vec<String>,
}

impl SynthVocabulary {
    pub fn new(cfg: &SynthConfig) -> Self {
        let mut taken = BTreeSet::new();
        let keywords = StageLabel::ALL
            .iter()
            .take(cfg.classes)
            .map(|l| pseudo_words(cfg.keywords_per_class, &format!("synth/keywords/{}", l.as_str()), &mut taken))
            .collect();
        let filler = pseudo_words(cfg.filler_words, "synth/filler", &mut taken);
        SynthVocabulary { keywords, filler }
    }

    /// The class owning `word`, if it is a keyword.
    pub fn class_of(&self, word: &str) -> Option<StageLabel> {
        self.keywords
            .iter()
            .position(|ks| ks.iter().any(|k| k == word))
            .and_then(StageLabel::from_index)
    }
}

fn message<R: Rng>(id: String, label: StageLabel, cfg: &SynthConfig, vocab: &SynthVocabulary, rng: &mut R) -> Message {
    let keys = &vocab.keywords[label.index()];
    let len = rng.gen_range(cfg.min_words..=cfg.max_words);
    let mut words: Vec<&str> = (0..len)
        .map(|_| {
            if rng.gen::<f64>() < cfg.keyword_rate {
                keys[rng.gen_range(0..keys.len())].as_str()
            } else {
                vocab.filler[rng.gen_range(0..vocab.filler.len())].as_str()
            }
        })
        .collect();
    if !words.iter().any(|w| keys.iter().any(|k| k == w)) {
        let pos = rng.gen_range(0..len);
        words[pos] = keys[rng.gen_range(0..keys.len())].as_str();
    }
    let mut text = words.join(" ");
    if let Some(first) = text.get(..1) {
        text = first.to_uppercase() + &text[1..];
    }
    text.push('.');
    Message::new(id, text).with_likes(rng.gen_range(0..200)).with_label(label)
}

fn split_set(name: &str, n: usize, cfg: &SynthConfig, vocab: &SynthVocabulary) -> Result<Dataset> {
    let mut rng = seed::rng(cfg.seed, &format!("synth/{name}"));
    let mut labels: Vec<StageLabel> = (0..n).map(|i| StageLabel::ALL[i % cfg.classes]).collect();
    labels.shuffle(&mut rng);
    // Label noise has its own stream so texts do not depend on it.
    let mut noise = seed::rng(cfg.seed, &format!("synth/{name}/noise"));
    let messages = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let mut m = message(format!("{name}-{:05}", i + 1), label, cfg, vocab, &mut rng);
            if noise.gen::<f64>() < cfg.noise {
                let others: Vec<StageLabel> =
                    StageLabel::ALL[..cfg.classes].iter().copied().filter(|&l| l != label).collect();
                m.label = Some(others[noise.gen_range(0..others.len())]);
            }
            m
        })
        .collect();
    Ok(Dataset::new(messages)?)
}

/// Balanced train and test sets (classes dealt round-robin, then shuffled).
pub fn generate(cfg: &SynthConfig) -> Result<(Dataset, Dataset)> {
    cfg.validate()?;
    let vocab = SynthVocabulary::new(cfg);
    Ok((split_set("train", cfg.train, cfg, &vocab)?, split_set("test", cfg.test, cfg, &vocab)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CooccurrenceConfig {
    pub groups: usize,
    pub words_per_group: usize,
    pub sentences: usize,
    pub sentence_length: usize,
    /// Probability that a position draws from the sentence's own group.
    pub in_group_rate: f64,
    pub seed: u64,
}

impl Default for CooccurrenceConfig {
    fn default() -> Self {
        CooccurrenceConfig {
            groups: 20,
            words_per_group: 10,
            sentences: 4000,
            sentence_length: 12,
            in_group_rate: 0.9,
            seed: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceCorpus {
    pub sentences: Vec<Vec<String>>,
    pub groups: Vec<Vec<String>>,
}

impl CooccurrenceCorpus {
    /// All unordered same-group word pairs.
    pub fn cooccurring_pairs(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        for g in &self.groups {
            for i in 0..g.len() {
                for j in i + 1..g.len() {
                    out.push((g[i].as_str(), g[j].as_str()));
                }
            }
        }
        out
    }

    /// `n` seeded pairs of words drawn uniformly from the whole vocabulary.
    pub fn random_pairs(&self, n: usize, seed_value: u64) -> Vec<(&str, &str)> {
        let all: Vec<&str> = self.groups.iter().flatten().map(String::as_str).collect();
        let mut rng = seed::rng(seed_value, "synth/random-pairs");
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let (a, b) = (all[rng.gen_range(0..all.len())], all[rng.gen_range(0..all.len())]);
            if a != b {
                out.push((a, b));
            }
        }
        out
    }
}

/// Sentences that each draw mostly from one word group.
pub fn cooccurrence_corpus(cfg: &CooccurrenceConfig) -> Result<CooccurrenceCorpus> {
    if cfg.groups < 2 || cfg.words_per_group < 2 || cfg.sentences == 0 || cfg.sentence_length < 2 {
        return Err(Error::Config("co-occurrence corpus needs ≥ 2 groups of ≥ 2 words and sentences of ≥ 2 words".into()));
    }
    let mut taken = BTreeSet::new();
    let groups: Vec<Vec<String>> = (0..cfg.groups)
        .map(|g| pseudo_words(cfg.words_per_group, &format!("synth/group/{g}"), &mut taken))
        .collect();
    let mut rng = seed::rng(cfg.seed, "synth/cooccurrence");
    let sentences = (0..cfg.sentences)
        .map(|_| {
            let own = rng.gen_range(0..cfg.groups);
            (0..cfg.sentence_length)
                .map(|_| {
                    let g = if rng.gen::<f64>() < cfg.in_group_rate { own } else { rng.gen_range(0..cfg.groups) };
                    groups[g][rng.gen_range(0..cfg.words_per_group)].clone()
                })
                .collect()
        })
        .collect();
    Ok(CooccurrenceCorpus { sentences, groups })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            train: 40,
            test: 12,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn sizes_balance_and_keywords() {
        let cfg = small();
        let (train, test) = generate(&cfg).unwrap();
        assert_eq!((train.len(), test.len()), (40, 12));
        assert_eq!(train.class_counts(), [10; 4]);
        let vocab = SynthVocabulary::new(&cfg);
        for m in train.iter().chain(test.iter()) {
            let n = m.word_count();
            assert!((5..=80).contains(&n), "{n}");
            let words: Vec<String> = m.text.trim_end_matches('.').split(' ').map(|w| w.to_lowercase()).collect();
            let classes: BTreeSet<_> = words.iter().filter_map(|w| vocab.class_of(w)).collect();
            assert_eq!(classes.into_iter().collect::<Vec<_>>(), vec![m.label.unwrap()]);
        }
    }

    #[test]
    fn vocabularies_are_disjoint() {
        let v = SynthVocabulary::new(&SynthConfig::default());
        let mut all = BTreeSet::new();
        for w in v.keywords.iter().flatten().chain(&v.filler) {
            assert!(all.insert(w.clone()));
            assert!(w.chars().all(|c| c.is_ascii_lowercase()));
        }
        assert_eq!(all.len(), 4 * 30 + 300);
    }

    #[test]
    fn seeded_and_noisy() {
        assert_eq!(generate(&small()).unwrap(), generate(&small()).unwrap());
        let noisy = SynthConfig { noise: 1.0, ..small() };
        let (a, _) = generate(&small()).unwrap();
        let (b, _) = generate(&noisy).unwrap();
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.label != y.label && x.text == y.text));
    }

    #[test]
    fn two_class_corpus() {
        let (train, _) = generate(&SynthConfig { classes: 2, ..small() }).unwrap();
        assert_eq!(train.class_counts(), [20, 20, 0, 0]);
        assert!(generate(&SynthConfig { classes: 5, ..small() }).is_err());
    }

    #[test]
    fn preprocessing_keeps_pseudo_words() {
        let (train, _) = generate(&small()).unwrap();
        let pre = crate::textprep::Preprocessor::bundled();
        for m in train.iter() {
            let pm = pre.process(m).unwrap();
            let lemmas: Vec<&str> = pm.words().map(|t| t.lemma.as_str()).collect();
            let words: Vec<String> = m.text.trim_end_matches('.').split(' ').map(|w| w.to_lowercase()).collect();
            assert_eq!(lemmas, words);
        }
    }

    #[test]
    fn cooccurrence_shape() {
        let c = cooccurrence_corpus(&CooccurrenceConfig::default()).unwrap();
        assert_eq!(c.sentences.len(), 4000);
        assert_eq!(c.cooccurring_pairs().len(), 20 * 45);
        assert_eq!(c.random_pairs(50, 1).len(), 50);
    }
}
