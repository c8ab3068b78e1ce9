//! Labeled message datasets: loading, saving, splitting and summary statistics.
//!
//! The native interchange format is JSONL, one object per line:
//!
//! ```text
//! {"id": "1", "text": "UPDATE: road open", "likes": 12, "label": "post_emergency"}
//! ```
//!
//! `likes`, `label` and `created_at` are optional. CSV input uses a header row
//! with the same column names; empty cells mean "absent".

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("line {line}: {reason}")]
    RecordInvalid { line: usize, reason: String },
    #[error("duplicate message id {0:?}")]
    DuplicateId(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("split would leave the {0} side empty")]
    DegenerateSplit(&'static str),
    #[error("message {0:?} has no label")]
    Unlabeled(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, CorpusError>;

/// The four emergency stages. The declaration order is the fixed class order
/// used for tie-breaking and for every per-class table column.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum StageLabel {
    Preparedness,
    Response,
    PostEmergency,
    Engagement,
}

impl StageLabel {
    pub const ALL: [StageLabel; 4] = [
        StageLabel::Preparedness,
        StageLabel::Response,
        StageLabel::PostEmergency,
        StageLabel::Engagement,
    ];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<StageLabel> {
        Self::ALL.get(i).copied()
    }

    /// Wire name used in JSONL/CSV.
    pub fn as_str(self) -> &'static str {
        match self {
            StageLabel::Preparedness => "preparedness",
            StageLabel::Response => "response",
            StageLabel::PostEmergency => "post_emergency",
            StageLabel::Engagement => "engagement",
        }
    }

    /// Short column suffix: `prep`, `resp`, `post`, `eng`.
    pub fn short(self) -> &'static str {
        match self {
            StageLabel::Preparedness => "prep",
            StageLabel::Response => "resp",
            StageLabel::PostEmergency => "post",
            StageLabel::Engagement => "eng",
        }
    }
}

impl fmt::Display for StageLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StageLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        StageLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown label {s:?}"))
    }
}

/// One social-media post.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub likes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<StageLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
}

impl Message {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Message {
            id: id.into(),
            text: text.into(),
            likes: 0,
            label: None,
            created_at: None,
        }
    }

    pub fn with_label(mut self, label: StageLabel) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_likes(mut self, likes: u64) -> Self {
        self.likes = likes;
        self
    }

    /// Whitespace-token count of the raw text.
    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub source: String,
    pub loaded_at: String,
}

/// An ordered collection of messages with unique ids.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    messages: Vec<Message>,
    pub provenance: Provenance,
}

impl PartialEq for Dataset {
    /// Content equality; provenance is ignored.
    fn eq(&self, other: &Self) -> bool {
        self.messages == other.messages
    }
}

impl Dataset {
    pub fn new(messages: Vec<Message>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(messages.len());
        for m in &messages {
            if !seen.insert(m.id.as_str()) {
                return Err(CorpusError::DuplicateId(m.id.clone()));
            }
        }
        Ok(Dataset {
            messages,
            provenance: Provenance::default(),
        })
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn into_messages(self) -> Vec<Message> {
        self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Message> {
        self.messages.iter()
    }

    /// Per-class counts in label order; unlabeled messages are not counted.
    pub fn class_counts(&self) -> [usize; StageLabel::COUNT] {
        let mut counts = [0; StageLabel::COUNT];
        for m in &self.messages {
            if let Some(l) = m.label {
                counts[l.index()] += 1;
            }
        }
        counts
    }

    /// Labels of every message; fails on the first unlabeled one.
    pub fn labels(&self) -> Result<Vec<StageLabel>> {
        self.messages
            .iter()
            .map(|m| m.label.ok_or_else(|| CorpusError::Unlabeled(m.id.clone())))
            .collect()
    }

    /// A sub-dataset made of the messages at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            messages: indices.iter().map(|&i| self.messages[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Writes the native JSONL form.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for m in &self.messages {
            serde_json::to_writer(&mut out, m)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_jsonl(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| io_err(path, e))
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Message;
    type IntoIter = std::slice::Iter<'a, Message>;

    fn into_iter(self) -> Self::IntoIter {
        self.messages.iter()
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guesses the format from a file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> CorpusFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(format!("unknown corpus format {other:?}")),
        }
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<serde_json::Value>,
    text: Option<String>,
    likes: Option<serde_json::Value>,
    label: Option<String>,
    created_at: Option<String>,
}

fn record_to_message(raw: RawRecord, line: usize) -> Result<Message> {
    let invalid = |reason: String| CorpusError::RecordInvalid { line, reason };
    let id = match raw.id {
        Some(serde_json::Value::String(s)) => s,
        Some(serde_json::Value::Number(n)) => n.to_string(),
        Some(_) => return Err(invalid("id must be a string".into())),
        None => return Err(invalid("missing id".into())),
    };
    if id.is_empty() {
        return Err(invalid("empty id".into()));
    }
    let text = raw.text.ok_or_else(|| invalid("missing text".into()))?;
    let likes = match raw.likes {
        None | Some(serde_json::Value::Null) => 0,
        Some(serde_json::Value::Number(n)) => n
            .as_u64()
            .ok_or_else(|| invalid(format!("likes must be a non-negative integer, got {n}")))?,
        Some(serde_json::Value::String(s)) if s.trim().is_empty() => 0,
        Some(serde_json::Value::String(s)) => s
            .trim()
            .parse()
            .map_err(|_| invalid(format!("likes must be a non-negative integer, got {s:?}")))?,
        Some(other) => return Err(invalid(format!("invalid likes value {other}"))),
    };
    let label = match raw.label.as_deref().map(str::trim) {
        None | Some("") => None,
        Some(s) => Some(s.parse::<StageLabel>().map_err(invalid)?),
    };
    let created_at = raw.created_at.filter(|s| !s.is_empty());
    Ok(Message {
        id,
        text,
        likes,
        label,
        created_at,
    })
}

/// Loads a dataset, keeping file order. Blank JSONL lines are skipped.
pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Dataset> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(CorpusError::FileNotFound(path.display().to_string()));
    }
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let messages = match format {
        CorpusFormat::Jsonl => read_jsonl(BufReader::new(file))?,
        CorpusFormat::Csv => read_csv(file)?,
    };
    let mut ds = Dataset::new(messages)?;
    ds.provenance = Provenance {
        source: path.display().to_string(),
        loaded_at: chrono::Utc::now().to_rfc3339(),
    };
    Ok(ds)
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<Message>> {
    let mut messages = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| CorpusError::RecordInvalid {
            line: lineno,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::RecordInvalid {
                line: lineno,
                reason: e.to_string(),
            })?;
        messages.push(record_to_message(raw, lineno)?);
    }
    Ok(messages)
}

fn read_csv<R: std::io::Read>(reader: R) -> Result<Vec<Message>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CorpusError::RecordInvalid {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (id_col, text_col) = (col("id"), col("text"));
    let (likes_col, label_col, created_col) = (col("likes"), col("label"), col("created_at"));

    let mut messages = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        // header is line 1
        let lineno = i + 2;
        let rec = rec.map_err(|e| CorpusError::RecordInvalid {
            line: lineno,
            reason: e.to_string(),
        })?;
        let field = |c: Option<usize>| c.and_then(|c| rec.get(c)).map(str::to_owned);
        let raw = RawRecord {
            id: field(id_col).map(serde_json::Value::String),
            text: field(text_col),
            likes: field(likes_col).map(serde_json::Value::String),
            label: field(label_col),
            created_at: field(created_col),
        };
        messages.push(record_to_message(raw, lineno)?);
    }
    Ok(messages)
}

/// Splits `d` into (train, test).
///
/// The train side gets `round(len * train_fraction)` messages. Stratified
/// splits allocate each class its floor quota, then hand the remaining slots to
/// the classes with the largest fractional remainders (ties in class order).
/// Unlabeled messages form their own stratum.
pub fn split(
    d: &Dataset,
    train_fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<(Dataset, Dataset)> {
    if d.is_empty() {
        return Err(CorpusError::EmptyDataset);
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::DegenerateSplit(if train_fraction <= 0.0 {
            "train"
        } else {
            "test"
        }));
    }
    let n = d.len();
    let target = (n as f64 * train_fraction).round() as usize;
    if target == 0 {
        return Err(CorpusError::DegenerateSplit("train"));
    }
    if target == n {
        return Err(CorpusError::DegenerateSplit("test"));
    }
    let mut rng = seed::rng(seed, "corpus/split");

    let mut train_idx: Vec<usize> = Vec::with_capacity(target);
    if stratified {
        let mut strata: BTreeMap<Option<StageLabel>, Vec<usize>> = BTreeMap::new();
        for (i, m) in d.iter().enumerate() {
            strata.entry(m.label).or_default().push(i);
        }
        let quotas: Vec<f64> = strata
            .values()
            .map(|v| v.len() as f64 * target as f64 / n as f64)
            .collect();
        let mut alloc: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let mut remaining = target - alloc.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..quotas.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = quotas[a] - quotas[a].floor();
            let fb = quotas[b] - quotas[b].floor();
            fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
        });
        for &s in order.iter().cycle() {
            if remaining == 0 {
                break;
            }
            let size = strata.values().nth(s).unwrap().len();
            if alloc[s] < size {
                alloc[s] += 1;
                remaining -= 1;
            }
        }
        for (members, take) in strata.into_values().zip(alloc) {
            let mut members = members;
            members.shuffle(&mut rng);
            train_idx.extend_from_slice(&members[..take]);
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        train_idx.extend_from_slice(&all[..target]);
    }

    let mut in_train = vec![false; n];
    for &i in &train_idx {
        in_train[i] = true;
    }
    // both sides keep the original file order
    let train: Vec<usize> = (0..n).filter(|&i| in_train[i]).collect();
    let test: Vec<usize> = (0..n).filter(|&i| !in_train[i]).collect();
    Ok((d.subset(&train), d.subset(&test)))
}

/// Order statistics for one measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureStats {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
    /// Population standard deviation.
    pub sd: f64,
}

impl MeasureStats {
    fn from_values(mut values: Vec<f64>) -> MeasureStats {
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = values.len();
        let median = if n % 2 == 1 {
            values[n / 2]
        } else {
            (values[n / 2 - 1] + values[n / 2]) / 2.0
        };
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        MeasureStats {
            min: values[0],
            median,
            mean,
            max: values[n - 1],
            sd: var.sqrt(),
        }
    }
}

/// Descriptive statistics of a dataset (words per message and likes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub words: MeasureStats,
    pub likes: MeasureStats,
}

impl CorpusStats {
    /// Renders an aligned table with one row per measure.
    pub fn render(&self) -> String {
        let mut out = format!(
            "{:<18} {:>10} {:>10} {:>10} {:>10} {:>10}\n",
            "Measure", "Min", "Median", "Mean", "Max", "St. dev."
        );
        for (name, s) in [("Words in message", &self.words), ("Message likes", &self.likes)] {
            out.push_str(&format!(
                "{:<18} {:>10} {:>10} {:>10.1} {:>10} {:>10.1}\n",
                name,
                fmt_num(s.min),
                fmt_num(s.median),
                s.mean,
                fmt_num(s.max),
                s.sd
            ));
        }
        out
    }
}

fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.1}")
    }
}

pub fn stats(d: &Dataset) -> Result<CorpusStats> {
    if d.is_empty() {
        return Err(CorpusError::EmptyDataset);
    }
    let words = d.iter().map(|m| m.word_count() as f64).collect();
    let likes = d.iter().map(|m| m.likes as f64).collect();
    Ok(CorpusStats {
        words: MeasureStats::from_values(words),
        likes: MeasureStats::from_values(likes),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn labeled(n: usize, label: StageLabel, prefix: &str) -> Vec<Message> {
        (0..n)
            .map(|i| Message::new(format!("{prefix}{i}"), "x").with_label(label))
            .collect()
    }

    #[test]
    fn single_jsonl_record() {
        let line = r#"{"id":"1","text":"UPDATE: road open","likes":12,"label":"post_emergency"}"#;
        let msgs = read_jsonl(Cursor::new(line)).unwrap();
        assert_eq!(msgs.len(), 1);
        assert_eq!(msgs[0].label, Some(StageLabel::PostEmergency));
        assert_eq!(msgs[0].likes, 12);
    }

    #[test]
    fn missing_text_is_invalid() {
        let err = read_jsonl(Cursor::new("{\"id\":\"1\"}\n")).unwrap_err();
        assert!(matches!(err, CorpusError::RecordInvalid { line: 1, .. }));
    }

    #[test]
    fn unknown_label_is_invalid() {
        let err = read_jsonl(Cursor::new(
            "{\"id\":\"1\",\"text\":\"a\"}\n{\"id\":\"2\",\"text\":\"b\",\"label\":\"fire\"}\n",
        ))
        .unwrap_err();
        assert!(matches!(err, CorpusError::RecordInvalid { line: 2, .. }));
    }

    #[test]
    fn missing_likes_default_to_zero() {
        let msgs = read_jsonl(Cursor::new("{\"id\":\"a\",\"text\":\"t\"}")).unwrap();
        assert_eq!(msgs[0].likes, 0);
        assert_eq!(msgs[0].label, None);
    }

    #[test]
    fn csv_ingest() {
        let csv = "id,text,likes,label\n1,\"Road closed, use detour\",,response\n2,hello,7,\n";
        let msgs = read_csv(Cursor::new(csv)).unwrap();
        assert_eq!(msgs.len(), 2);
        assert_eq!(msgs[0].text, "Road closed, use detour");
        assert_eq!(msgs[0].likes, 0);
        assert_eq!(msgs[0].label, Some(StageLabel::Response));
        assert_eq!(msgs[1].likes, 7);
        assert_eq!(msgs[1].label, None);
        let err = read_csv(Cursor::new("id,likes\n1,3\n")).unwrap_err();
        assert!(matches!(err, CorpusError::RecordInvalid { line: 2, .. }));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let msgs = vec![Message::new("a", "x"), Message::new("a", "y")];
        assert!(matches!(Dataset::new(msgs), Err(CorpusError::DuplicateId(id)) if id == "a"));
    }

    #[test]
    fn missing_file() {
        let err = load_corpus("/nonexistent/never.jsonl", CorpusFormat::Jsonl).unwrap_err();
        assert!(matches!(err, CorpusError::FileNotFound(_)));
    }

    #[test]
    fn label_names_round_trip() {
        for l in StageLabel::ALL {
            assert_eq!(l.as_str().parse::<StageLabel>().unwrap(), l);
            let json = serde_json::to_string(&l).unwrap();
            assert_eq!(json, format!("\"{}\"", l.as_str()));
            assert_eq!(serde_json::from_str::<StageLabel>(&json).unwrap(), l);
        }
    }

    #[test]
    fn split_of_five_thousand_matches_table_sizes() {
        let mut msgs = labeled(839, StageLabel::Preparedness, "p");
        msgs.extend(labeled(503, StageLabel::Response, "r"));
        msgs.extend(labeled(1320, StageLabel::PostEmergency, "o"));
        msgs.extend(labeled(2338, StageLabel::Engagement, "e"));
        let d = Dataset::new(msgs).unwrap();
        assert_eq!(d.class_counts().iter().sum::<usize>(), 5000);
        for stratified in [false, true] {
            let (tr, te) = split(&d, 0.699, 11, stratified).unwrap();
            assert_eq!((tr.len(), te.len()), (3495, 1505));
        }
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let d = Dataset::new(labeled(50, StageLabel::Response, "m")).unwrap();
        let ids = |ds: &Dataset| ds.iter().map(|m| m.id.clone()).collect::<Vec<_>>();
        let (a, _) = split(&d, 0.6, 3, false).unwrap();
        let (b, _) = split(&d, 0.6, 3, false).unwrap();
        let (c, _) = split(&d, 0.6, 4, false).unwrap();
        assert_eq!(ids(&a), ids(&b));
        assert_ne!(ids(&a), ids(&c));
    }

    #[test]
    fn stratified_split_keeps_class_proportions() {
        let mut msgs = labeled(40, StageLabel::Preparedness, "a");
        msgs.extend(labeled(60, StageLabel::Engagement, "b"));
        let d = Dataset::new(msgs).unwrap();
        for seed in 0..20 {
            let (tr, te) = split(&d, 0.5, seed, true).unwrap();
            for side in [&tr, &te] {
                let c = side.class_counts();
                assert!(c[0].abs_diff(20) <= 1, "{c:?}");
                assert!(c[3].abs_diff(30) <= 1, "{c:?}");
            }
        }
    }

    #[test]
    fn degenerate_splits() {
        let d = Dataset::new(labeled(3, StageLabel::Response, "m")).unwrap();
        assert!(matches!(split(&d, 0.1, 0, false), Err(CorpusError::DegenerateSplit(_))));
        assert!(matches!(split(&d, 0.9, 0, true), Err(CorpusError::DegenerateSplit(_))));
        let empty = Dataset::default();
        assert!(matches!(split(&empty, 0.5, 0, false), Err(CorpusError::EmptyDataset)));
    }

    #[test]
    fn stats_of_tiny_dataset() {
        let d = Dataset::new(vec![
            Message::new("1", "a"),
            Message::new("2", "a b"),
            Message::new("3", "a b c"),
        ])
        .unwrap();
        let s = stats(&d).unwrap();
        assert_eq!(s.words.min, 1.0);
        assert_eq!(s.words.median, 2.0);
        assert_eq!(s.words.mean, 2.0);
        assert_eq!(s.words.max, 3.0);
        assert_eq!(s.likes, MeasureStats { min: 0.0, median: 0.0, mean: 0.0, max: 0.0, sd: 0.0 });
    }

    #[test]
    fn stats_table_has_measure_rows() {
        let d = Dataset::new(vec![Message::new("1", "a b").with_likes(4)]).unwrap();
        let table = stats(&d).unwrap().render();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].contains("Median") && lines[0].contains("St. dev."));
        assert!(lines[1].starts_with("Words in message"));
        assert!(lines[2].starts_with("Message likes"));
    }

    #[test]
    fn empty_stats_rejected() {
        assert!(matches!(stats(&Dataset::default()), Err(CorpusError::EmptyDataset)));
    }
}
