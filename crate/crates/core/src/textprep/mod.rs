//! Text preprocessing: normalize → tokenize → POS-tag → lemmatize, plus
//! detection of auxiliary+verb tense clauses.

mod clauses;
mod lemma;
pub mod normalize;
mod tagger;
mod tokenize;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Message;

pub use clauses::{detect_verb_clauses, ClauseSpan};
pub use lemma::Lemmatizer;
pub use normalize::normalize;
pub use tagger::{PerceptronTagger, TaggerTrainConfig, TaggedSentence};
pub use tokenize::{token_spans, tokenize};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("no POS tagger model is loaded")]
    TaggerModelMissing,
    #[error("tags and tokens differ in length ({tokens} tokens, {tags} tags)")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("tagged corpus line {line}: {reason}")]
    TaggedCorpus { line: usize, reason: String },
    #[error("lemma lexicon line {line}: {reason}")]
    Lexicon { line: usize, reason: String },
    #[error("tagger model: {0}")]
    ModelFormat(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

macro_rules! pos_tags {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// Penn Treebank tags plus the three composite verb-clause tags.
        #[allow(clippy::upper_case_acronyms)]
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum PosTag {
            $($variant),+
        }

        impl PosTag {
            pub const ALL: &'static [PosTag] = &[$(PosTag::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(PosTag::$variant => $name),+
                }
            }
        }

        impl FromStr for PosTag {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(PosTag::$variant),)+
                    other => Err(format!("unknown POS tag {other:?}")),
                }
            }
        }
    };
}

pos_tags! {
    CC => "CC", CD => "CD", DT => "DT", EX => "EX", FW => "FW", IN => "IN",
    JJ => "JJ", JJR => "JJR", JJS => "JJS", LS => "LS", MD => "MD",
    NN => "NN", NNS => "NNS", NNP => "NNP", NNPS => "NNPS", PDT => "PDT",
    POS => "POS", PRP => "PRP", PRPS => "PRP$", RB => "RB", RBR => "RBR",
    RBS => "RBS", RP => "RP", SYM => "SYM", TO => "TO", UH => "UH",
    VB => "VB", VBD => "VBD", VBG => "VBG", VBN => "VBN", VBP => "VBP",
    VBZ => "VBZ", WDT => "WDT", WP => "WP", WPS => "WP$", WRB => "WRB",
    Period => ".", Comma => ",", Colon => ":", OpenQuote => "``",
    CloseQuote => "''", LeftParen => "(", RightParen => ")", Hash => "#",
    Dollar => "$",
    VerbPast => "VerbPast", VerbPresent => "VerbPresent", VerbFuture => "VerbFuture",
}

impl PosTag {
    /// Composite clause tags are produced only by clause detection.
    pub fn is_composite(self) -> bool {
        matches!(self, PosTag::VerbPast | PosTag::VerbPresent | PosTag::VerbFuture)
    }

    /// Tags the base tagger may emit.
    pub fn base_tags() -> impl Iterator<Item = PosTag> {
        PosTag::ALL.iter().copied().filter(|t| !t.is_composite())
    }

    /// The feature name of this tag, truncated to two characters when
    /// `two_letter` is set. Composite tags are never truncated.
    pub fn feature_name(self, two_letter: bool) -> &'static str {
        let s = self.as_str();
        if two_letter && !self.is_composite() && s.len() > 2 {
            &s[..2]
        } else {
            s
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for PosTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for PosTag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub position: usize,
}

impl Token {
    pub fn new(surface: &str, position: usize) -> Token {
        Token {
            surface: surface.to_owned(),
            lemma: surface.to_lowercase(),
            position,
        }
    }

    /// True for tokens made only of punctuation/symbols.
    pub fn is_punctuation(&self) -> bool {
        !self.surface.chars().any(char::is_alphanumeric)
    }
}

/// A message after normalization, tokenization, tagging and lemmatization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessedMessage {
    pub source: Message,
    pub normalized_text: String,
    pub tokens: Vec<Token>,
    pub tags: Vec<PosTag>,
    pub clauses: Vec<ClauseSpan>,
}

impl ProcessedMessage {
    pub fn lemmas(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.lemma.as_str()).collect()
    }

    /// Tokens that carry at least one letter or digit (punctuation dropped).
    pub fn words(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| !t.is_punctuation())
    }
}

/// The full preprocessing chain with a loaded tagger and lexicon.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    tagger: Arc<PerceptronTagger>,
    lemmatizer: Arc<Lemmatizer>,
}

impl Preprocessor {
    pub fn new(tagger: PerceptronTagger, lemmatizer: Lemmatizer) -> Self {
        Preprocessor {
            tagger: Arc::new(tagger),
            lemmatizer: Arc::new(lemmatizer),
        }
    }

    /// Bundled tagger model and exception lexicon.
    pub fn bundled() -> Self {
        Preprocessor {
            tagger: Arc::new(PerceptronTagger::bundled().clone()),
            lemmatizer: Arc::new(Lemmatizer::bundled()),
        }
    }

    pub fn tagger(&self) -> &PerceptronTagger {
        &self.tagger
    }

    pub fn process(&self, message: &Message) -> Result<ProcessedMessage, TextError> {
        let normalized_text = normalize(&message.text);
        let mut tokens = tokenize(&normalized_text);
        let tags = self.tagger.tag(&tokens)?;
        for (tok, &tag) in tokens.iter_mut().zip(&tags) {
            tok.lemma = self.lemmatizer.lemmatize(&tok.surface, tag);
        }
        let clauses = detect_verb_clauses(&tokens, &tags)?;
        Ok(ProcessedMessage {
            source: message.clone(),
            normalized_text,
            tokens,
            tags,
            clauses,
        })
    }

    /// Processes many messages, optionally across `jobs` threads; output
    /// order matches input order.
    pub fn process_all(
        &self,
        messages: &[Message],
        jobs: usize,
    ) -> Result<Vec<ProcessedMessage>, TextError> {
        let jobs = jobs.max(1);
        if jobs == 1 || messages.len() < 2 * jobs {
            return messages.iter().map(|m| self.process(m)).collect();
        }
        let chunk = messages.len().div_ceil(jobs);
        std::thread::scope(|s| {
            let handles: Vec<_> = messages
                .chunks(chunk)
                .map(|part| s.spawn(move || part.iter().map(|m| self.process(m)).collect::<Result<Vec<_>, _>>()))
                .collect();
            let mut out = Vec::with_capacity(messages.len());
            for h in handles {
                out.extend(h.join().expect("preprocessing thread panicked")?);
            }
            Ok(out)
        })
    }
}

/// Tags `tokens` with `tagger`.
pub fn pos_tag(tagger: &PerceptronTagger, tokens: &[Token]) -> Result<Vec<PosTag>, TextError> {
    tagger.tag(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tag_names_round_trip() {
        for &t in PosTag::ALL {
            assert_eq!(t.as_str().parse::<PosTag>().unwrap(), t);
        }
        assert_eq!(PosTag::ALL.len(), 48);
        assert_eq!(PosTag::base_tags().count(), 45);
    }

    #[test]
    fn two_letter_truncation() {
        assert_eq!(PosTag::NNS.feature_name(true), "NN");
        assert_eq!(PosTag::PRPS.feature_name(true), "PR");
        assert_eq!(PosTag::Period.feature_name(true), ".");
        assert_eq!(PosTag::VerbFuture.feature_name(true), "VerbFuture");
        assert_eq!(PosTag::NNS.feature_name(false), "NNS");
    }

    #[test]
    fn end_to_end_processing() {
        let pp = Preprocessor::bundled();
        let m = Message::new("1", "The water company has completed repairs. Call 555-123-4567!");
        let pm = pp.process(&m).unwrap();
        assert_eq!(pm.tokens.len(), pm.tags.len());
        assert!(pm.normalized_text.contains("[Phone]"));
        let lemmas = pm.lemmas();
        assert!(lemmas.contains(&"repair"), "{lemmas:?}");
        assert!(lemmas.contains(&"[phone]"));
        assert!(pm.clauses.iter().any(|c| c.tag == PosTag::VerbPast));
    }

    #[test]
    fn parallel_processing_matches_serial() {
        let pp = Preprocessor::bundled();
        let msgs: Vec<Message> = (0..40)
            .map(|i| Message::new(i.to_string(), format!("Officer {i} is doing a great job on Monday")))
            .collect();
        assert_eq!(pp.process_all(&msgs, 1).unwrap(), pp.process_all(&msgs, 4).unwrap());
    }
}
