use serde::{Deserialize, Serialize};

use crate::corpus::Message;

pub const DESC_NAMES: [&str; 5] = [
    "desc:word_count",
    "desc:likes",
    "desc:exclamations",
    "desc:questions",
    "desc:capital_ratio",
];

/// The five descriptive message features.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DescFeatures {
    pub word_count: usize,
    pub likes: u64,
    pub exclamation_count: usize,
    pub question_count: usize,
    /// Uppercase letters over alphabetic letters; 0 without letters.
    pub capital_ratio: f64,
}

impl DescFeatures {
    pub fn to_array(&self) -> [f64; 5] {
        [
            self.word_count as f64,
            self.likes as f64,
            self.exclamation_count as f64,
            self.question_count as f64,
            self.capital_ratio,
        ]
    }
}

/// Computes DESC features from the raw message text.
pub fn desc_features(msg: &Message) -> DescFeatures {
    let text = &msg.text;
    let (mut letters, mut upper) = (0usize, 0usize);
    for c in text.chars().filter(|c| c.is_alphabetic()) {
        letters += 1;
        if c.is_uppercase() {
            upper += 1;
        }
    }
    DescFeatures {
        word_count: text.split_whitespace().count(),
        likes: msg.likes,
        exclamation_count: text.matches('!').count(),
        question_count: text.matches('?').count(),
        capital_ratio: if letters == 0 {
            0.0
        } else {
            upper as f64 / letters as f64
        },
    }
}

/// Per-feature standardization fitted on training messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescScaler {
    pub mean: [f64; 5],
    pub sd: [f64; 5],
}

impl DescScaler {
    pub fn fit(rows: &[[f64; 5]]) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = [0.0; 5];
        let mut sd = [0.0; 5];
        for r in rows {
            for k in 0..5 {
                mean[k] += r[k] / n;
            }
        }
        for r in rows {
            for k in 0..5 {
                sd[k] += (r[k] - mean[k]).powi(2) / n;
            }
        }
        for s in &mut sd {
            *s = s.sqrt();
        }
        DescScaler { mean, sd }
    }

    /// Constant features (sd 0) map to 0.
    pub fn apply(&self, x: [f64; 5]) -> [f64; 5] {
        let mut out = [0.0; 5];
        for k in 0..5 {
            out[k] = if self.sd[k] > 0.0 {
                (x[k] - self.mean[k]) / self.sd[k]
            } else {
                0.0
            };
        }
        out
    }
}
