use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BowMode, FeatureError, SparseVector};
use crate::textprep::ProcessedMessage;

/// Term → in-document count.
pub type TermCounts = BTreeMap<String, usize>;

/// Separator between the lemmas of one n-gram.
pub const NGRAM_SEP: &str = " ";

/// All contiguous n-grams of the requested orders, with multiplicity.
pub fn extract_ngrams<S: AsRef<str>>(tokens: &[S], orders: &[usize]) -> TermCounts {
    let mut out = TermCounts::new();
    for &n in orders {
        if n == 0 || n > tokens.len() {
            continue;
        }
        for w in tokens.windows(n) {
            let gram = w.iter().map(|t| t.as_ref()).collect::<Vec<_>>().join(NGRAM_SEP);
            *out.entry(gram).or_default() += 1;
        }
    }
    out
}

pub(crate) fn validate_orders(orders: &[usize]) -> Result<(), FeatureError> {
    if orders.is_empty() || orders.iter().any(|&n| !(1..=3).contains(&n)) {
        return Err(FeatureError::InvalidOrders(orders.to_vec()));
    }
    Ok(())
}

/// Indexed term space with document frequencies from the fit corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    orders: Vec<usize>,
    min_df: usize,
    n_docs: usize,
    terms: Vec<String>,
    df: Vec<usize>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    orders: Vec<usize>,
    min_df: usize,
    n_docs: usize,
    terms: Vec<String>,
    df: Vec<usize>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let index = r.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            orders: r.orders,
            min_df: r.min_df,
            n_docs: r.n_docs,
            terms: r.terms,
            df: r.df,
            index,
        }
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            orders: v.orders,
            min_df: v.min_df,
            n_docs: v.n_docs,
            terms: v.terms,
            df: v.df,
        }
    }
}

impl Vocabulary {
    /// Fits over per-document term counts. Terms are indexed in
    /// lexicographic order; terms in fewer than `min_df` documents are dropped.
    pub fn fit(docs: &[TermCounts], orders: &[usize], min_df: usize) -> Result<Self, FeatureError> {
        if docs.is_empty() {
            return Err(FeatureError::EmptyCorpus);
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for d in docs {
            for term in d.keys() {
                *df.entry(term).or_default() += 1;
            }
        }
        let (terms, df): (Vec<String>, Vec<usize>) = df
            .into_iter()
            .filter(|&(_, n)| n >= min_df)
            .map(|(t, n)| (t.to_owned(), n))
            .unzip();
        Ok(Vocabulary::from(VocabularyRepr {
            orders: orders.to_vec(),
            min_df,
            n_docs: docs.len(),
            terms,
            df,
        }))
    }

    /// A vocabulary over a fixed term list (in the given order), with
    /// document frequencies counted over `docs`.
    pub fn fixed(terms: Vec<String>, docs: &[TermCounts]) -> Result<Self, FeatureError> {
        if docs.is_empty() {
            return Err(FeatureError::EmptyCorpus);
        }
        let df = terms
            .iter()
            .map(|t| docs.iter().filter(|d| d.contains_key(t)).count())
            .collect();
        let unique: BTreeSet<&String> = terms.iter().collect();
        assert_eq!(unique.len(), terms.len(), "fixed vocabulary terms must be unique");
        Ok(Vocabulary::from(VocabularyRepr {
            orders: Vec::new(),
            min_df: 0,
            n_docs: docs.len(),
            terms,
            df,
        }))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn min_df(&self) -> usize {
        self.min_df
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn df(&self, index: usize) -> usize {
        self.df[index]
    }

    /// SHA-256 over the ordered term list, hex-encoded.
    pub fn fingerprint(&self) -> String {
        fingerprint(self.terms.iter().map(String::as_str))
    }
}

pub(crate) fn fingerprint<'a>(names: impl Iterator<Item = &'a str>) -> String {
    let mut h = Sha256::new();
    for n in names {
        h.update(n.as_bytes());
        h.update([0u8]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Builds the n-gram vocabulary over the lemmas of `corpus`.
pub fn build_vocabulary(
    corpus: &[ProcessedMessage],
    orders: &[usize],
    min_df: usize,
) -> Result<Vocabulary, FeatureError> {
    validate_orders(orders)?;
    let docs: Vec<TermCounts> = corpus
        .iter()
        .map(|pm| extract_ngrams(&pm.lemmas(), orders))
        .collect();
    Vocabulary::fit(&docs, orders, min_df)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdfFormula {
    /// `ln((1 + N) / (1 + df)) + 1`
    #[default]
    Smooth,
    /// `ln(N / df)`
    Plain,
}

impl std::str::FromStr for IdfFormula {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "smooth" => Ok(IdfFormula::Smooth),
            "plain" => Ok(IdfFormula::Plain),
            other => Err(format!("unknown idf formula {other:?} (smooth|plain)")),
        }
    }
}

impl IdfFormula {
    pub fn idf(self, n_docs: usize, df: usize) -> f64 {
        let (n, df) = (n_docs as f64, df as f64);
        match self {
            IdfFormula::Smooth => ((1.0 + n) / (1.0 + df)).ln() + 1.0,
            IdfFormula::Plain if df == 0.0 => 0.0,
            IdfFormula::Plain => (n / df).ln(),
        }
    }
}

/// Inverse document frequencies tied to one vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdfTable {
    pub formula: IdfFormula,
    pub vocab_fingerprint: String,
    pub values: Vec<f64>,
}

impl IdfTable {
    pub fn fit(vocab: &Vocabulary, formula: IdfFormula) -> Self {
        IdfTable {
            formula,
            vocab_fingerprint: vocab.fingerprint(),
            values: (0..vocab.len())
                .map(|i| formula.idf(vocab.n_docs(), vocab.df(i)))
                .collect(),
        }
    }
}

/// Weights a document's term counts over `vocab`; out-of-vocabulary terms
/// are ignored.
pub fn weigh(
    counts: &TermCounts,
    vocab: &Vocabulary,
    mode: BowMode,
    idf: Option<&IdfTable>,
) -> Result<SparseVector, FeatureError> {
    let idf = match mode {
        BowMode::Tfidf => {
            let idf = idf.ok_or(FeatureError::IdfMissing)?;
            if idf.values.len() != vocab.len() || idf.vocab_fingerprint != vocab.fingerprint() {
                return Err(FeatureError::VocabMismatch);
            }
            Some(idf)
        }
        _ => None,
    };
    let pairs: Vec<(usize, f64)> = counts
        .iter()
        .filter_map(|(term, &c)| {
            let i = vocab.index_of(term)?;
            let x = match mode {
                BowMode::Bool => 1.0,
                BowMode::Freq => c as f64,
                BowMode::Tfidf => c as f64 * idf.expect("checked above").values[i],
            };
            Some((i, x))
        })
        .collect();
    let mut v = SparseVector::from_pairs(vocab.len(), pairs)?;
    if mode == BowMode::Tfidf {
        let norm = v.norm();
        if norm > 0.0 {
            v.scale(1.0 / norm);
        }
    }
    Ok(v)
}

/// BOW vector of a processed message's lemma n-grams.
pub fn bow_vector(
    pm: &ProcessedMessage,
    vocab: &Vocabulary,
    mode: BowMode,
    idf: Option<&IdfTable>,
) -> Result<SparseVector, FeatureError> {
    weigh(&extract_ngrams(&pm.lemmas(), vocab.orders()), vocab, mode, idf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(texts: &[&str], orders: &[usize]) -> Vec<TermCounts> {
        texts
            .iter()
            .map(|t| extract_ngrams(&t.split_whitespace().collect::<Vec<_>>(), orders))
            .collect()
    }

    #[test]
    fn ngram_examples() {
        let g = extract_ngrams(&["a", "b", "c"], &[3]);
        assert_eq!(g.len(), 1);
        assert_eq!(g["a b c"], 1);
        let g = extract_ngrams(&["a", "a", "b"], &[1]);
        assert_eq!((g["a"], g["b"]), (2, 1));
        let g = extract_ngrams(&["a", "b", "c", "d"], &[2]);
        assert_eq!(g.values().sum::<usize>(), 3);
        assert!(extract_ngrams(&["a"], &[2, 3]).is_empty());
    }

    #[test]
    fn min_df_threshold() {
        let v = Vocabulary::fit(&docs(&["x shared", "shared y"], &[1]), &[1], 2).unwrap();
        assert_eq!(v.terms(), ["shared"]);
        assert!(matches!(Vocabulary::fit(&[], &[1], 1), Err(FeatureError::EmptyCorpus)));
    }

    #[test]
    fn lexicographic_indices() {
        let v = Vocabulary::fit(&docs(&["b a c", "c a"], &[1, 2]), &[1, 2], 1).unwrap();
        assert_eq!(v.terms(), ["a", "a c", "b", "b a", "c", "c a"]);
        assert_eq!(v.df(v.index_of("a").unwrap()), 2);
    }

    #[test]
    fn idf_formulas() {
        assert_eq!(IdfFormula::Plain.idf(5, 5), 0.0);
        assert_eq!(IdfFormula::Smooth.idf(5, 5), 1.0);
        assert!((IdfFormula::Smooth.idf(3, 1) - (2.0f64.ln() + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn term_in_every_document_gets_zero_plain_weight() {
        let d = docs(&["all x", "all y", "all z"], &[1]);
        let v = Vocabulary::fit(&d, &[1], 1).unwrap();
        let idf = IdfTable::fit(&v, IdfFormula::Plain);
        let x = weigh(&d[0], &v, BowMode::Tfidf, Some(&idf)).unwrap();
        assert_eq!(x.get(v.index_of("all").unwrap()), 0.0);
        assert!((x.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn modes_and_errors() {
        let d = docs(&["a a b", "b c"], &[1]);
        let v = Vocabulary::fit(&d, &[1], 1).unwrap();
        assert_eq!(weigh(&d[0], &v, BowMode::Bool, None).unwrap().values(), &[1.0, 1.0]);
        assert_eq!(weigh(&d[0], &v, BowMode::Freq, None).unwrap().values(), &[2.0, 1.0]);
        assert!(matches!(weigh(&d[0], &v, BowMode::Tfidf, None), Err(FeatureError::IdfMissing)));
        let other = Vocabulary::fit(&docs(&["q"], &[1]), &[1], 1).unwrap();
        let idf = IdfTable::fit(&other, IdfFormula::Smooth);
        assert!(matches!(weigh(&d[0], &v, BowMode::Tfidf, Some(&idf)), Err(FeatureError::VocabMismatch)));
        let oov = docs(&["zzz"], &[1]);
        assert!(weigh(&oov[0], &v, BowMode::Freq, None).unwrap().is_zero());
    }
}
