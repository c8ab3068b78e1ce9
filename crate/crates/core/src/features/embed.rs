use serde::{Deserialize, Serialize};

use super::desc::desc_features;
use super::FeatureError;
use crate::embeddings::EmbeddingTable;
use crate::textprep::{ProcessedMessage, Token};

/// Word positions per message; longer messages are truncated, shorter ones
/// zero-padded.
pub const MAX_WORDS: usize = 100;

/// A padded `rows × width` matrix, row-major. Rows at or beyond
/// `true_length` are all zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedMessage {
    pub rows: usize,
    pub width: usize,
    pub true_length: usize,
    pub data: Vec<f32>,
}

impl EmbeddedMessage {
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    /// True when every row at or beyond `true_length` is zero.
    pub fn padding_is_zero(&self) -> bool {
        self.data[self.true_length * self.width..].iter().all(|&x| x == 0.0)
    }
}

/// Vector for a token: exact surface form, then lowercase, then lemma.
pub fn lookup<'t>(table: &'t EmbeddingTable, token: &Token) -> Option<&'t [f32]> {
    table
        .get(&token.surface)
        .or_else(|| table.get(&token.surface.to_lowercase()))
        .or_else(|| table.get(&token.lemma))
}

/// Stacks the vectors of the message's first 100 word tokens (punctuation
/// excluded); unknown words get zero vectors. With `with_desc`, the raw DESC
/// values are appended to every non-padded row.
pub fn embed_matrix(
    pm: &ProcessedMessage,
    table: &EmbeddingTable,
    with_desc: bool,
) -> Result<EmbeddedMessage, FeatureError> {
    let desc = with_desc.then(|| desc_features(&pm.source).to_array());
    embed_matrix_with(pm, table, desc, MAX_WORDS)
}

/// [`embed_matrix`] with explicit (e.g. standardized) DESC values and row count.
pub fn embed_matrix_with(
    pm: &ProcessedMessage,
    table: &EmbeddingTable,
    desc: Option<[f64; 5]>,
    rows: usize,
) -> Result<EmbeddedMessage, FeatureError> {
    if table.is_empty() {
        return Err(FeatureError::EmptyEmbeddingTable);
    }
    let d = table.dim();
    let width = d + if desc.is_some() { 5 } else { 0 };
    let mut data = vec![0.0f32; rows * width];
    let mut true_length = 0;
    for (r, tok) in pm.words().take(rows).enumerate() {
        let row = &mut data[r * width..(r + 1) * width];
        if let Some(v) = lookup(table, tok) {
            row[..d].copy_from_slice(v);
        }
        if let Some(desc) = desc {
            for (dst, &x) in row[d..].iter_mut().zip(&desc) {
                *dst = x as f32;
            }
        }
        true_length = r + 1;
    }
    Ok(EmbeddedMessage {
        rows,
        width,
        true_length,
        data,
    })
}

/// Mean vector of the message's in-table words (zero when none are known).
pub fn mean_embedding(pm: &ProcessedMessage, table: &EmbeddingTable) -> Vec<f64> {
    let mut sum = vec![0.0f64; table.dim()];
    let mut n = 0usize;
    for v in pm.words().filter_map(|t| lookup(table, t)) {
        for (s, &x) in sum.iter_mut().zip(v) {
            *s += x as f64;
        }
        n += 1;
    }
    if n > 0 {
        sum.iter_mut().for_each(|s| *s /= n as f64);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Message;
    use crate::textprep::{tokenize, PosTag};

    fn pm(text: &str) -> ProcessedMessage {
        let tokens = tokenize(text);
        ProcessedMessage {
            source: Message::new("1", text).with_likes(4),
            normalized_text: text.to_owned(),
            tags: vec![PosTag::NN; tokens.len()],
            tokens,
            clauses: Vec::new(),
        }
    }

    fn table(dim: usize) -> EmbeddingTable {
        let words: Vec<String> = (0..200).map(|i| format!("w{i}")).collect();
        let vectors = (0..200 * dim).map(|i| 1.0 + i as f32).collect();
        EmbeddingTable::new(dim, words, vectors).unwrap()
    }

    #[test]
    fn short_message_is_padded() {
        let t = table(100);
        let e = embed_matrix(&pm("w1 w2 w3"), &t, false).unwrap();
        assert_eq!((e.rows, e.width, e.true_length), (100, 100, 3));
        assert_eq!(e.row(1), t.get("w2").unwrap());
        assert!(e.padding_is_zero());
    }

    #[test]
    fn long_message_is_truncated() {
        let text: Vec<String> = (0..150).map(|i| format!("w{i}")).collect();
        let t = table(4);
        let e = embed_matrix(&pm(&text.join(" ")), &t, false).unwrap();
        assert_eq!(e.true_length, 100);
        assert_eq!(e.row(99), t.get("w99").unwrap());
    }

    #[test]
    fn desc_columns_and_width() {
        let e = embed_matrix(&pm("w1 , unknown !"), &table(300), true).unwrap();
        assert_eq!(e.width, 305);
        assert_eq!(e.data.len(), 30_500);
        assert_eq!(e.true_length, 2);
        // unknown word: zero vector part, DESC still present
        assert!(e.row(1)[..300].iter().all(|&x| x == 0.0));
        assert_eq!(e.row(1)[301], 4.0);
        assert!(e.padding_is_zero());
    }

    #[test]
    fn mean_of_known_words() {
        let words = vec!["a".to_owned(), "b".to_owned()];
        let t = EmbeddingTable::new(2, words, vec![1.0, 2.0, 3.0, 6.0]).unwrap();
        assert_eq!(mean_embedding(&pm("a b zzz"), &t), vec![2.0, 4.0]);
        assert_eq!(mean_embedding(&pm("zzz"), &t), vec![0.0, 0.0]);
    }
}
