//! Auxiliary + verb tense clauses.
//!
//! | pattern                                   | tag           |
//! |-------------------------------------------|---------------|
//! | has/have/had + VBN                        | `VerbPast`    |
//! | is/are/am/was/were + VBG                  | `VerbPresent` |
//! | will/shall + VB or VBG, or + be + VBG     | `VerbFuture`  |
//!
//! Adverbs (RB) and negations between the auxiliary and the verb are
//! allowed, so `has not yet completed` is one clause. Matching is
//! leftmost-longest and spans never overlap.

use serde::{Deserialize, Serialize};

use super::{PosTag, TextError, Token};

/// Half-open token range `[start, end)` carrying a composite tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseSpan {
    pub start: usize,
    pub end: usize,
    pub tag: PosTag,
}

fn word(t: &Token) -> String {
    t.surface.to_lowercase()
}

fn skip_adverbs(tokens: &[Token], tags: &[PosTag], mut i: usize) -> usize {
    while i < tokens.len() && (tags[i] == PosTag::RB || word(&tokens[i]) == "n't") {
        i += 1;
    }
    i
}

/// End (exclusive) of the clause starting at `i`, if any.
fn match_at(tokens: &[Token], tags: &[PosTag], i: usize) -> Option<(usize, PosTag)> {
    let aux = word(&tokens[i]);
    let j = skip_adverbs(tokens, tags, i + 1);
    let next_tag = *tags.get(j)?;
    match aux.as_str() {
        "has" | "have" | "had" if next_tag == PosTag::VBN => Some((j + 1, PosTag::VerbPast)),
        "is" | "are" | "am" | "was" | "were" if next_tag == PosTag::VBG => {
            Some((j + 1, PosTag::VerbPresent))
        }
        "will" | "shall" => {
            if word(&tokens[j]) == "be" {
                let k = skip_adverbs(tokens, tags, j + 1);
                if tags.get(k) == Some(&PosTag::VBG) {
                    return Some((k + 1, PosTag::VerbFuture));
                }
            }
            matches!(next_tag, PosTag::VB | PosTag::VBG).then_some((j + 1, PosTag::VerbFuture))
        }
        _ => None,
    }
}

/// Finds tense clauses in a tagged token sequence.
pub fn detect_verb_clauses(tokens: &[Token], tags: &[PosTag]) -> Result<Vec<ClauseSpan>, TextError> {
    if tokens.len() != tags.len() {
        return Err(TextError::LengthMismatch {
            tokens: tokens.len(),
            tags: tags.len(),
        });
    }
    let mut spans = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        match match_at(tokens, tags, i) {
            Some((end, tag)) => {
                spans.push(ClauseSpan { start: i, end, tag });
                i = end;
            }
            None => i += 1,
        }
    }
    Ok(spans)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::tokenize;
    use PosTag::*;

    fn detect(text: &str, tags: &[PosTag]) -> Vec<ClauseSpan> {
        detect_verb_clauses(&tokenize(text), tags).unwrap()
    }

    #[test]
    fn three_tenses() {
        assert_eq!(
            detect("has completed", &[VBZ, VBN]),
            [ClauseSpan { start: 0, end: 2, tag: VerbPast }]
        );
        assert_eq!(
            detect("is doing", &[VBZ, VBG]),
            [ClauseSpan { start: 0, end: 2, tag: VerbPresent }]
        );
        assert_eq!(
            detect("will be doing", &[MD, VB, VBG]),
            [ClauseSpan { start: 0, end: 3, tag: VerbFuture }]
        );
        assert_eq!(
            detect("will close", &[MD, VB]),
            [ClauseSpan { start: 0, end: 2, tag: VerbFuture }]
        );
    }

    #[test]
    fn adverbs_between() {
        assert_eq!(
            detect("has not yet completed", &[VBZ, RB, RB, VBN]),
            [ClauseSpan { start: 0, end: 4, tag: VerbPast }]
        );
    }

    #[test]
    fn non_clauses() {
        assert!(detect("has cars", &[VBZ, NNS]).is_empty());
        assert!(detect("is", &[VBZ]).is_empty());
        assert!(detect("", &[]).is_empty());
    }

    #[test]
    fn multiple_spans_do_not_overlap() {
        let spans = detect(
            "Crews have restored power and are working",
            &[NNS, VBP, VBN, NN, CC, VBP, VBG],
        );
        assert_eq!(spans.len(), 2);
        assert_eq!((spans[0].start, spans[0].end), (1, 3));
        assert_eq!((spans[1].start, spans[1].end), (5, 7));
    }

    #[test]
    fn length_mismatch() {
        let err = detect_verb_clauses(&tokenize("a b"), &[DT]).unwrap_err();
        assert!(matches!(err, TextError::LengthMismatch { tokens: 2, tags: 1 }));
    }
}
