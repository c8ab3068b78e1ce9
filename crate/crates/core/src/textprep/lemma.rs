//! POS-aware suffix-stripping lemmatizer with an exception lexicon.
//!
//! Lookup order: exception lexicon (exact tag, then `VB*`-style prefix
//! patterns, then `*`), then the suffix rules for the tag:
//!
//! * `NNS`/`NNPS`, `VBZ`: `-ies` → `-y`, sibilant `-es` → ``, `-s` → ``
//! * `VBG`: `-ing`; `VBD`/`VBN`: `-ied` → `-y`, `-ed`
//! * `JJR`/`RBR`: `-ier` → `-y`, `-er`; `JJS`/`RBS`: `-iest` → `-y`, `-est`
//!
//! After stripping, a doubled final consonant is undoubled (`running` →
//! `run`) unless it is `l`, `s`, `z` or `f`, and a final `e` is restored for
//! stems that commonly carry one (`driving` → `drive`, `larger` → `large`).
//! Output is always lowercased; generic terms pass through case-folded.

use std::collections::HashMap;
use std::path::Path;

use super::{normalize::is_generic_term, PosTag, TextError};

const BUNDLED_EXCEPTIONS: &str = include_str!("../../data/lemma_exceptions.tsv");

#[derive(Debug, Clone, Default)]
pub struct Lemmatizer {
    exact: HashMap<(String, String), String>,
    prefix: Vec<(String, String, String)>,
    any: HashMap<String, String>,
}

impl Lemmatizer {
    /// Lemmatizer with the bundled exception lexicon.
    pub fn bundled() -> Self {
        Self::from_tsv(BUNDLED_EXCEPTIONS).expect("bundled lexicon parses")
    }

    /// Rules only, no exceptions.
    pub fn rules_only() -> Self {
        Self::default()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TextError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| TextError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_tsv(&text)
    }

    /// Parses `surface<TAB>tag<TAB>lemma` lines; `#` starts a comment line.
    pub fn from_tsv(text: &str) -> Result<Self, TextError> {
        let mut lex = Lemmatizer::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [surface, tag, lemma] = fields[..] else {
                return Err(TextError::Lexicon {
                    line: i + 1,
                    reason: format!("expected 3 tab-separated fields, got {}", fields.len()),
                });
            };
            lex.insert(surface, tag, lemma);
        }
        Ok(lex)
    }

    pub fn insert(&mut self, surface: &str, tag: &str, lemma: &str) {
        let surface = surface.to_lowercase();
        let lemma = lemma.to_lowercase();
        if tag == "*" {
            self.any.insert(surface, lemma);
        } else if let Some(prefix) = tag.strip_suffix('*') {
            self.prefix.push((surface, prefix.to_owned(), lemma));
        } else {
            self.exact.insert((surface, tag.to_owned()), lemma);
        }
    }

    fn lookup(&self, lower: &str, tag: PosTag) -> Option<&str> {
        if let Some(l) = self.exact.get(&(lower.to_owned(), tag.as_str().to_owned())) {
            return Some(l);
        }
        if let Some((_, _, l)) = self
            .prefix
            .iter()
            .find(|(s, p, _)| s == lower && tag.as_str().starts_with(p.as_str()))
        {
            return Some(l);
        }
        self.any.get(lower).map(String::as_str)
    }

    /// Lemma of `surface` under `tag`.
    pub fn lemmatize(&self, surface: &str, tag: PosTag) -> String {
        let lower = surface.to_lowercase();
        if is_generic_term(surface) || !lower.chars().any(char::is_alphabetic) {
            return lower;
        }
        if let Some(l) = self.lookup(&lower, tag) {
            return l.to_owned();
        }
        let lemma = match tag {
            PosTag::NNS | PosTag::NNPS | PosTag::VBZ => strip_plural(&lower),
            PosTag::VBG => strip_suffix_rule(&lower, "ing", None),
            PosTag::VBD | PosTag::VBN => strip_suffix_rule(&lower, "ed", Some("ied")),
            PosTag::JJR | PosTag::RBR => strip_suffix_rule(&lower, "er", Some("ier")),
            PosTag::JJS | PosTag::RBS => strip_suffix_rule(&lower, "est", Some("iest")),
            _ => None,
        };
        match lemma {
            Some(l) if !l.is_empty() => l,
            _ => lower,
        }
    }
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

fn has_vowel(s: &str) -> bool {
    s.bytes().any(|c| is_vowel(c) || c == b'y')
}

fn vowel_groups(s: &str) -> usize {
    let b = s.as_bytes();
    (0..b.len())
        .filter(|&i| is_vowel(b[i]) && (i == 0 || !is_vowel(b[i - 1])))
        .count()
}

fn strip_plural(w: &str) -> Option<String> {
    if w.len() <= 3 || !w.is_ascii() {
        return None;
    }
    if w.ends_with("ss") || w.ends_with("us") || w.ends_with("is") {
        return None;
    }
    if let Some(stem) = w.strip_suffix("ies") {
        return Some(format!("{stem}y"));
    }
    for sib in ["sses", "xes", "ches", "shes", "zzes"] {
        if w.ends_with(sib) {
            return Some(w[..w.len() - 2].to_owned());
        }
    }
    w.strip_suffix('s').map(str::to_owned)
}

/// Whether a bare stem (suffix already removed) conventionally ends in `e`.
fn needs_final_e(stem: &str) -> bool {
    let b = stem.as_bytes();
    let n = b.len();
    if n < 2 {
        return false;
    }
    let last = b[n - 1];
    let prev = b[n - 2];
    if matches!(last, b'v' | b'c') && !stem.ends_with("ic") {
        return true;
    }
    if stem.ends_with("iz") || stem.ends_with("yz") || stem.ends_with("dg") || stem.ends_with("rg") {
        return true;
    }
    if (stem.ends_with("ur") || stem.ends_with("uir")) && n >= 4 {
        return true;
    }
    if stem.ends_with("ang") && n >= 5 {
        return true;
    }
    if last == b'l' && matches!(prev, b'b' | b'p' | b't' | b'd' | b'k' | b'g' | b'z' | b'f' | b'c') {
        return true;
    }
    if stem.ends_with("at") && n >= 4 && !is_vowel(b[n - 3]) {
        return true;
    }
    // single-syllable consonant-vowel-consonant: driv, rid, mak, clos
    if n >= 3 && vowel_groups(stem) == 1 {
        let c1 = b[n - 3];
        return !is_vowel(c1) && is_vowel(prev) && !is_vowel(last) && !matches!(last, b'w' | b'x' | b'y');
    }
    false
}

fn strip_suffix_rule(w: &str, suffix: &str, y_form: Option<&str>) -> Option<String> {
    if !w.is_ascii() {
        return None;
    }
    if let Some(yf) = y_form {
        if let Some(stem) = w.strip_suffix(yf) {
            if stem.len() >= 2 {
                return Some(format!("{stem}y"));
            }
        }
    }
    let stem = w.strip_suffix(suffix)?;
    if stem.len() < 2 || !has_vowel(stem) {
        return None;
    }
    let b = stem.as_bytes();
    let n = b.len();
    if b[n - 1] == b[n - 2] && !is_vowel(b[n - 1]) && !matches!(b[n - 1], b'l' | b's' | b'z' | b'f') {
        return Some(stem[..n - 1].to_owned());
    }
    if needs_final_e(stem) {
        return Some(format!("{stem}e"));
    }
    Some(stem.to_owned())
}
