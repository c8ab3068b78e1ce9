//! Generic-term replacement.
//!
//! Patterns are applied in a fixed precedence order, most specific first:
//! email, URL, @-handle, phone, date, number, day of week, month. The
//! replacement pass is repeated until the text stops changing, which makes
//! [`normalize`] idempotent by construction.
//!
//! Day and month names match case-insensitively as whole words, including
//! the usual abbreviations with an optional trailing period. Names that are
//! also common English words (`May`, `Mar`, `Sat`, `Sun`, `Wed`) only match
//! when capitalized.

use std::sync::OnceLock;

use regex::Regex;

pub const URL: &str = "[URL]";
pub const EMAIL: &str = "[Email]";
pub const HANDLE: &str = "[Handle]";
pub const PHONE: &str = "[Phone]";
pub const DATE: &str = "[Date]";
pub const NUMBER: &str = "[Number]";
pub const DAY_OF_WEEK: &str = "[DayOfWeek]";
pub const MONTH: &str = "[Month]";

/// All generic terms produced by [`normalize`].
pub const GENERIC_TERMS: [&str; 8] = [URL, EMAIL, HANDLE, PHONE, DATE, NUMBER, DAY_OF_WEEK, MONTH];

const MONTHS: &str = r"(?:(?i:january|february|april|june|july|august|september|october|november|december)\b|(?i:jan|feb|apr|jun|jul|aug|sept?|oct|nov|dec)\b\.?|(?:May|March)\b|Mar\b\.?)";
const DAYS: &str = r"(?:(?i:monday|tuesday|wednesday|thursday|friday|saturday|sunday)\b|(?i:mon|tues?|thu(?:rs?)?|fri)\b\.?|(?:Wed|Sat|Sun)\b\.?)";

struct Rules {
    ordered: Vec<(Regex, &'static str)>,
}

fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| {
        let email = r"[A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,}";
        let url = r#"(?i:\b(?:https?://|www\.))[^\s<>"\[\]]*[^\s<>"\[\].,;:!?)']"#;
        let handle = r"\B@[A-Za-z0-9_]+";
        let phone = r"(?:\+?1[\-.\s]?)?(?:\(\d{3}\)\s?|\b\d{3}[\-.\s])\d{3}[\-.]\d{4}\b";
        let date = format!(
            r"\b\d{{4}}-\d{{1,2}}-\d{{1,2}}\b|\b\d{{1,2}}[/\-]\d{{1,2}}[/\-]\d{{2,4}}\b|\b{MONTHS}\s+\d{{1,2}}(?:st|nd|rd|th)?(?:,?\s+\d{{4}})?\b"
        );
        let number = r"\b\d+(?:[.,]\d+)*(?:st|nd|rd|th|s)?\b";
        let day = format!(r"\b{DAYS}");
        let month = format!(r"\b{MONTHS}");
        let compile = |p: &str| Regex::new(p).expect("normalization pattern compiles");
        Rules {
            ordered: vec![
                (compile(email), EMAIL),
                (compile(url), URL),
                (compile(handle), HANDLE),
                (compile(phone), PHONE),
                (compile(&date), DATE),
                (compile(number), NUMBER),
                (compile(&day), DAY_OF_WEEK),
                (compile(&month), MONTH),
            ],
        }
    })
}

fn pass(text: &str) -> String {
    let mut out = text.to_owned();
    for (re, term) in &rules().ordered {
        if re.is_match(&out) {
            out = re.replace_all(&out, *term).into_owned();
        }
    }
    out
}

/// Replaces URLs, emails, handles, phone numbers, dates, numbers, day names
/// and month names by their bracketed generic terms.
pub fn normalize(text: &str) -> String {
    let mut current = pass(text);
    // every pass removes matched characters, so this terminates quickly
    for _ in 0..8 {
        let next = pass(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// True when `s` is one of the bracketed generic terms.
pub fn is_generic_term(s: &str) -> bool {
    GENERIC_TERMS.iter().any(|t| t.eq_ignore_ascii_case(s))
}
