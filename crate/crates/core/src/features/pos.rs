use std::sync::OnceLock;

use super::vocab::TermCounts;
use super::SparseVector;
use crate::textprep::{PosTag, ProcessedMessage};

/// POS feature names in index order: base tags in tag order (deduplicated
/// after truncation in two-letter mode), then the composite clause tags.
pub fn pos_feature_names(two_letter: bool) -> &'static [&'static str] {
    static FULL: OnceLock<Vec<&'static str>> = OnceLock::new();
    static SHORT: OnceLock<Vec<&'static str>> = OnceLock::new();
    let cell = if two_letter { &SHORT } else { &FULL };
    cell.get_or_init(|| {
        let mut names: Vec<&'static str> = Vec::new();
        for t in PosTag::ALL {
            let name = t.feature_name(two_letter);
            if !names.contains(&name) {
                names.push(name);
            }
        }
        names
    })
}

/// Tag-name counts: one per token tag plus one per clause span.
pub fn pos_counts(pm: &ProcessedMessage, two_letter: bool) -> TermCounts {
    let mut out = TermCounts::new();
    let names = pm
        .tags
        .iter()
        .chain(pm.clauses.iter().map(|c| &c.tag))
        .map(|t| t.feature_name(two_letter));
    for name in names {
        *out.entry(name.to_owned()).or_default() += 1;
    }
    out
}

/// Raw POS counts over the fixed tag-name space.
pub fn pos_features(pm: &ProcessedMessage, two_letter: bool) -> SparseVector {
    let names = pos_feature_names(two_letter);
    let pairs = pos_counts(pm, two_letter)
        .into_iter()
        .map(|(name, c)| {
            let i = names.iter().position(|n| *n == name).expect("tag name in space");
            (i, c as f64)
        })
        .collect();
    SparseVector::from_pairs(names.len(), pairs).expect("indices within the tag space")
}
