//! Rule-based tokenizer for normalized text.
//!
//! Rules, applied to each whitespace-separated chunk left to right:
//!
//! 1. A bracketed generic term such as `[URL]` is one token.
//! 2. A word is a run of letters/digits; single internal hyphens
//!    (`4-door`, `Wal-Mart`) and single internal periods between letters
//!    (`S.R`, `p.m`) keep it together.
//! 3. Clitics are split Penn-Treebank style: `don't` → `do` `n't`,
//!    `can't` → `ca` `n't`, `Mike's` → `Mike` `'s`; likewise `'re`, `'ve`,
//!    `'ll`, `'d`, `'m`. Both `'` and `’` are accepted.
//! 4. Any other character is a single-character punctuation token.
//!
//! Tokens are exact substrings of the input, so concatenating them gives back
//! the input without whitespace.

use super::Token;

const APOSTROPHE_CLITICS: [&str; 6] = ["s", "re", "ve", "ll", "d", "m"];

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Length in bytes of a bracketed generic term at the start of `s`.
fn generic_term_len(s: &str) -> Option<usize> {
    let rest = s.strip_prefix('[')?;
    let close = rest.find(']')?;
    let inner = &rest[..close];
    (!inner.is_empty() && inner.chars().all(|c| c.is_ascii_alphabetic())).then_some(close + 2)
}

/// Length in bytes of the word starting at `s` (rule 2), 0 if none.
fn word_len(s: &str) -> usize {
    let chars: Vec<(usize, char)> = s.char_indices().collect();
    let mut end = 0;
    for (i, &(pos, c)) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            end = pos + c.len_utf8();
            continue;
        }
        let prev = i.checked_sub(1).map(|j| chars[j].1);
        let next = chars.get(i + 1).map(|x| x.1);
        let joins = match (prev, next) {
            (Some(p), Some(n)) if c == '-' => p.is_alphanumeric() && n.is_alphanumeric(),
            (Some(p), Some(n)) if c == '.' => p.is_alphabetic() && n.is_alphabetic(),
            _ => false,
        };
        if !joins {
            break;
        }
    }
    end
}

fn ends_run(s: &str) -> bool {
    s.chars().next().is_none_or(|c| !c.is_alphanumeric())
}

/// Byte length of an apostrophe clitic (`'s`, `'re`, ...) at the start of `s`.
fn apostrophe_clitic_len(s: &str) -> Option<usize> {
    let first = s.chars().next().filter(|&c| is_apostrophe(c))?;
    let rest = &s[first.len_utf8()..];
    APOSTROPHE_CLITICS.iter().find_map(|cl| {
        let candidate = rest.get(..cl.len())?;
        (candidate.eq_ignore_ascii_case(cl) && ends_run(&rest[cl.len()..]))
            .then_some(first.len_utf8() + cl.len())
    })
}

/// For a word ending in `n` followed by `'t`, the byte length of `n't`.
fn negation_clitic_len(word: &str, after: &str) -> Option<usize> {
    if word.len() < 2 || !word.ends_with(['n', 'N']) {
        return None;
    }
    let apo = after.chars().next().filter(|&c| is_apostrophe(c))?;
    let rest = &after[apo.len_utf8()..];
    (rest.starts_with(['t', 'T']) && ends_run(&rest[1..])).then_some(1 + apo.len_utf8() + 1)
}

fn split_chunk(chunk: &str, base: usize, out: &mut Vec<(usize, usize)>) {
    let mut pos = 0;
    while pos < chunk.len() {
        let rest = &chunk[pos..];
        if let Some(len) = generic_term_len(rest) {
            out.push((base + pos, len));
            pos += len;
            continue;
        }
        let w = word_len(rest);
        if w == 0 {
            let c = rest.chars().next().expect("non-empty rest");
            out.push((base + pos, c.len_utf8()));
            pos += c.len_utf8();
            continue;
        }
        let (word, after) = rest.split_at(w);
        if let Some(cl) = negation_clitic_len(word, after) {
            out.push((base + pos, w - 1));
            out.push((base + pos + w - 1, cl));
            pos += w - 1 + cl;
        } else if let Some(cl) = apostrophe_clitic_len(after) {
            out.push((base + pos, w));
            out.push((base + pos + w, cl));
            pos += w + cl;
        } else {
            out.push((base + pos, w));
            pos += w;
        }
    }
}

/// Byte spans `(start, len)` of the tokens of `text`.
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                split_chunk(&text[s..i], s, &mut spans);
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        split_chunk(&text[s..], s, &mut spans);
    }
    spans
}

/// Tokenizes normalized text. Lemmas are initialized to the lowercased
/// surface form; lemmatization refines them after tagging.
pub fn tokenize(text: &str) -> Vec<Token> {
    token_spans(text)
        .into_iter()
        .enumerate()
        .map(|(position, (start, len))| Token::new(&text[start..start + len], position))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn punctuation_split() {
        assert_eq!(surfaces("Road closed!"), ["Road", "closed", "!"]);
        assert_eq!(surfaces("STOP!! Now?"), ["STOP", "!", "!", "Now", "?"]);
    }

    #[test]
    fn generic_terms_are_atomic() {
        assert_eq!(surfaces("[URL]"), ["[URL]"]);
        assert_eq!(surfaces("at [Number]-[Number]."), ["at", "[Number]", "-", "[Number]", "."]);
        assert_eq!(surfaces("([URL])"), ["(", "[URL]", ")"]);
    }

    #[test]
    fn contraction_rule() {
        assert_eq!(surfaces("don't"), ["do", "n't"]);
        assert_eq!(surfaces("can't"), ["ca", "n't"]);
        assert_eq!(surfaces("won\u{2019}t"), ["wo", "n\u{2019}t"]);
        assert_eq!(surfaces("Mike's car"), ["Mike", "'s", "car"]);
        assert_eq!(surfaces("we're here"), ["we", "'re", "here"]);
        assert_eq!(surfaces("I'm"), ["I", "'m"]);
        assert_eq!(surfaces("'quoted'"), ["'", "quoted", "'"]);
    }

    #[test]
    fn hyphens_and_abbreviations() {
        assert_eq!(surfaces("4-door Wal-Mart"), ["4-door", "Wal-Mart"]);
        assert_eq!(surfaces("S.R. 16"), ["S.R", ".", "16"]);
        assert_eq!(surfaces("end. Next"), ["end", ".", "Next"]);
        assert_eq!(surfaces("a - b"), ["a", "-", "b"]);
    }

    #[test]
    fn positions_and_lemmas() {
        let toks = tokenize("Road Closed");
        assert_eq!(toks[1].position, 1);
        assert_eq!(toks[1].lemma, "closed");
    }

    proptest! {
        #[test]
        fn tokens_recover_non_whitespace(s in "[ a-zA-Z0-9'.,!?\\-\\[\\]’]{0,50}") {
            let toks = tokenize(&s);
            prop_assert!(toks.iter().all(|t| !t.surface.is_empty()));
            let joined: String = toks.iter().map(|t| t.surface.as_str()).collect();
            let expected: String = s.chars().filter(|c| !c.is_whitespace()).collect();
            prop_assert_eq!(joined, expected);
        }
    }
}
