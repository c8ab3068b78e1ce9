//! Metrics, cross-validation folds and table-shaped reports.
//!
//! F_avg is the support-weighted mean of the per-class F1 scores. Micro F1
//! (equal to accuracy for single-label data) is reported alongside it.
//! Precision, recall or F1 of the form 0/0 are defined as 0 and flagged
//! `degenerate`.

pub mod experiment;
mod report;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Dataset, StageLabel};
use crate::seed;

pub use experiment::{run_experiment, ExperimentOutcome, ExperimentSpec, TableKind, TableSpec};
pub use report::{format_fixed, ResultRow, ResultTable, COLUMNS};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{preds} predictions but {golds} gold labels")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("all supports are zero")]
    ZeroSupports,
    #[error("k = {k} folds needs k ≥ 2 and at least k items, got {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("class index {index} out of range for {n} classes")]
    ClassIndex { index: usize, n: usize },
}

/// Square count matrix, rows = gold, columns = predicted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    n: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n: usize) -> Self {
        ConfusionMatrix {
            n,
            counts: vec![0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "confusion matrix must be square");
        ConfusionMatrix {
            n,
            counts: rows.concat(),
        }
    }

    /// From class indices in `0..n`.
    pub fn from_indices(preds: &[usize], golds: &[usize], n: usize) -> Result<Self, EvalError> {
        if preds.len() != golds.len() {
            return Err(EvalError::LengthMismatch {
                preds: preds.len(),
                golds: golds.len(),
            });
        }
        if preds.is_empty() {
            return Err(EvalError::Empty);
        }
        let mut cm = ConfusionMatrix::new(n);
        for (&p, &g) in preds.iter().zip(golds) {
            if let Some(&index) = [p, g].iter().find(|&&i| i >= n) {
                return Err(EvalError::ClassIndex { index, n });
            }
            cm.counts[g * n + p] += 1;
        }
        Ok(cm)
    }

    pub fn classes(&self) -> usize {
        self.n
    }

    pub fn get(&self, gold: usize, pred: usize) -> u64 {
        self.counts[gold * self.n + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.n).map(<[u64]>::to_vec).collect()
    }

    pub fn support(&self, class: usize) -> u64 {
        (0..self.n).map(|p| self.get(class, p)).sum()
    }

    pub fn predicted(&self, class: usize) -> u64 {
        (0..self.n).map(|g| self.get(g, class)).sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.n).map(|c| self.get(c, c)).sum()
    }
}

/// Confusion matrix over the four stage labels.
pub fn confusion(preds: &[StageLabel], golds: &[StageLabel]) -> Result<ConfusionMatrix, EvalError> {
    let p: Vec<usize> = preds.iter().map(|l| l.index()).collect();
    let g: Vec<usize> = golds.iter().map(|l| l.index()).collect();
    ConfusionMatrix::from_indices(&p, &g, StageLabel::COUNT)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Some ratio was 0/0 and was set to 0.
    pub degenerate: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Per-class precision, recall and F1.
pub fn prf(cm: &ConfusionMatrix) -> Vec<ClassScores> {
    (0..cm.classes())
        .map(|c| {
            let tp = cm.get(c, c);
            let (precision, d1) = ratio(tp, cm.predicted(c));
            let (recall, d2) = ratio(tp, cm.support(c));
            let (f1, d3) = if precision + recall == 0.0 {
                (0.0, true)
            } else {
                (2.0 * precision * recall / (precision + recall), false)
            };
            ClassScores {
                precision,
                recall,
                f1,
                support: cm.support(c),
                degenerate: d1 || d2 || d3,
            }
        })
        .collect()
}

/// Support-weighted mean of per-class F1.
pub fn weighted_f1(per_class_f1: &[f64], supports: &[u64]) -> Result<f64, EvalError> {
    if per_class_f1.len() != supports.len() {
        return Err(EvalError::LengthMismatch {
            preds: per_class_f1.len(),
            golds: supports.len(),
        });
    }
    let total: u64 = supports.iter().sum();
    if total == 0 {
        return Err(EvalError::ZeroSupports);
    }
    let sum: f64 = per_class_f1.iter().zip(supports).map(|(f, &n)| f * n as f64).sum();
    Ok(sum / total as f64)
}

/// Held-out evaluation of one classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassScores>,
    pub weighted_f1: f64,
    pub micro_f1: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub folds: Vec<FoldScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub fold: usize,
    pub train_size: usize,
    pub valid_size: usize,
    pub weighted_f1: f64,
}

impl EvalReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Result<Self, EvalError> {
        let per_class = prf(&confusion);
        let f1s: Vec<f64> = per_class.iter().map(|c| c.f1).collect();
        let supports: Vec<u64> = per_class.iter().map(|c| c.support).collect();
        let weighted_f1 = weighted_f1(&f1s, &supports)?;
        let micro_f1 = confusion.correct() as f64 / confusion.total() as f64;
        Ok(EvalReport {
            confusion,
            per_class,
            weighted_f1,
            micro_f1,
            folds: Vec::new(),
        })
    }

    /// F_prep, F_resp, F_post, F_eng, F_avg.
    pub fn row(&self) -> [f64; 5] {
        let mut out = [0.0; 5];
        for (o, c) in out.iter_mut().zip(&self.per_class) {
            *o = c.f1;
        }
        out[4] = self.weighted_f1;
        out
    }

    pub fn degenerate_classes(&self) -> Vec<StageLabel> {
        self.per_class
            .iter()
            .enumerate()
            .filter(|(_, c)| c.degenerate)
            .filter_map(|(i, _)| StageLabel::from_index(i))
            .collect()
    }

    /// `class,precision,recall,f1,support,degenerate` rows plus summary rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("class,precision,recall,f1,support,degenerate\n");
        for (i, c) in self.per_class.iter().enumerate() {
            let name = StageLabel::from_index(i).map_or_else(|| i.to_string(), |l| l.as_str().to_owned());
            s.push_str(&format!(
                "{name},{},{},{},{},{}\n",
                format_fixed(c.precision),
                format_fixed(c.recall),
                format_fixed(c.f1),
                c.support,
                c.degenerate
            ));
        }
        s.push_str(&format!("weighted_f1,,,{},{},\n", format_fixed(self.weighted_f1), self.confusion.total()));
        s.push_str(&format!("micro_f1,,,{},{},\n", format_fixed(self.micro_f1), self.confusion.total()));
        s
    }

    /// Aligned text: the F-measure row, then the confusion matrix.
    pub fn render(&self) -> String {
        let mut table = ResultTable::new("F measure by class");
        table.push("model", self.row());
        let mut s = table.render();
        s.push_str(&format!("micro F1 (accuracy): {:.3}\n\n", self.micro_f1));
        s.push_str("confusion (rows gold, columns predicted)\n");
        s.push_str(&format!("{:>8}", ""));
        for l in StageLabel::ALL {
            s.push_str(&format!("{:>8}", l.short()));
        }
        s.push('\n');
        for (g, row) in self.confusion.rows().iter().enumerate() {
            let name = StageLabel::from_index(g).map_or("?", |l| l.short());
            s.push_str(&format!("{name:>8}"));
            for v in row {
                s.push_str(&format!("{v:>8}"));
            }
            s.push('\n');
        }
        let degenerate = self.degenerate_classes();
        if !degenerate.is_empty() {
            let names: Vec<&str> = degenerate.iter().map(|l| l.as_str()).collect();
            s.push_str(&format!("degenerate (0/0 set to 0): {}\n", names.join(", ")));
        }
        s
    }
}

/// Confusion, per-class scores and F_avg for one prediction list.
pub fn evaluate(preds: &[StageLabel], golds: &[StageLabel]) -> Result<EvalReport, EvalError> {
    EvalReport::from_confusion(confusion(preds, golds)?)
}

/// `(train, validation)` index pairs.
pub type Folds = Vec<(Vec<usize>, Vec<usize>)>;

/// k folds over `labels`. Items are shuffled (within each class when
/// stratified) and dealt round-robin, so fold sizes differ by at most one.
pub fn kfold_labels(labels: &[StageLabel], k: usize, seed_: u64, stratified: bool) -> Result<Folds, EvalError> {
    let n = labels.len();
    if k < 2 || n < k {
        return Err(EvalError::KTooLarge { k, n });
    }
    let mut rng = seed::rng(seed_, "eval/kfold");
    let groups: Vec<Vec<usize>> = if stratified {
        StageLabel::ALL
            .iter()
            .map(|&c| (0..n).filter(|&i| labels[i] == c).collect())
            .collect()
    } else {
        vec![(0..n).collect()]
    };
    let mut assignment = vec![0usize; n];
    let mut next = 0usize;
    for mut g in groups {
        g.shuffle(&mut rng);
        for i in g {
            assignment[i] = next % k;
            next += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (valid, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| assignment[i] == f);
            (train, valid)
        })
        .collect())
}

/// k folds over a dataset. Stratification needs every message labeled.
pub fn kfold(d: &Dataset, k: usize, seed_: u64, stratified: bool) -> crate::Result<Folds> {
    let labels = if stratified {
        d.labels()?
    } else {
        vec![StageLabel::Preparedness; d.len()]
    };
    Ok(kfold_labels(&labels, k, seed_, stratified)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use StageLabel::*;

    #[test]
    fn perfect_and_single_column() {
        let g = [Preparedness, Response, PostEmergency, Engagement];
        let cm = confusion(&g, &g).unwrap();
        assert_eq!(cm.rows(), vec![vec![1, 0, 0, 0], vec![0, 1, 0, 0], vec![0, 0, 1, 0], vec![0, 0, 0, 1]]);
        assert!(prf(&cm).iter().all(|c| c.f1 == 1.0));
        let cm = confusion(&[Response; 4], &g).unwrap();
        for r in cm.rows() {
            assert_eq!(r, vec![0, 1, 0, 0]);
        }
        assert!(matches!(confusion(&[], &[]), Err(EvalError::Empty)));
        assert!(matches!(confusion(&[Response], &[]), Err(EvalError::LengthMismatch { .. })));
    }

    #[test]
    fn hand_counted_fixture() {
        let golds = [Preparedness, Preparedness, Response, Response, Response, PostEmergency, Engagement, Engagement];
        let preds = [Preparedness, Response, Response, Response, Engagement, PostEmergency, Engagement, Preparedness];
        let cm = confusion(&preds, &golds).unwrap();
        assert_eq!(
            cm.rows(),
            vec![vec![1, 1, 0, 0], vec![0, 2, 0, 1], vec![0, 0, 1, 0], vec![1, 0, 0, 1]]
        );
    }

    #[test]
    fn two_class_prf() {
        let cm = ConfusionMatrix::from_rows(&[vec![3, 1], vec![2, 4]]);
        let s = prf(&cm);
        assert!((s[0].precision - 0.6).abs() < 1e-12);
        assert!((s[0].recall - 0.75).abs() < 1e-12);
        assert!((s[0].f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_zero_is_flagged() {
        let cm = confusion(&[Response, Response], &[Response, Preparedness]).unwrap();
        let s = prf(&cm);
        assert_eq!((s[2].precision, s[2].recall, s[2].f1), (0.0, 0.0, 0.0));
        assert!(s[2].degenerate);
        assert!(!s[1].degenerate);
    }

    #[test]
    fn weighted_examples() {
        assert_eq!(weighted_f1(&[1.0; 4], &[3, 5, 0, 2]).unwrap(), 1.0);
        assert_eq!(weighted_f1(&[0.2, 0.7, 0.1, 0.9], &[0, 0, 7, 0]).unwrap(), 0.1);
        assert!(matches!(weighted_f1(&[0.5; 4], &[0; 4]), Err(EvalError::ZeroSupports)));
        let a = weighted_f1(&[0.1, 0.4, 0.6, 0.8], &[1, 2, 3, 4]).unwrap();
        let b = weighted_f1(&[0.1, 0.4, 0.6, 0.8], &[7, 14, 21, 28]).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn fold_sizes() {
        let labels = vec![Response; 100];
        let folds = kfold_labels(&labels, 10, 1, false).unwrap();
        assert!(folds.iter().all(|(_, v)| v.len() == 10));
        let folds = kfold_labels(&labels[..10], 3, 1, false).unwrap();
        let mut sizes: Vec<usize> = folds.iter().map(|(_, v)| v.len()).collect();
        sizes.sort();
        assert_eq!(sizes, [3, 3, 4]);
        assert!(matches!(kfold_labels(&labels[..3], 4, 1, false), Err(EvalError::KTooLarge { .. })));
    }

    #[test]
    fn folds_partition_and_stratify() {
        let labels: Vec<StageLabel> = (0..57).map(|i| StageLabel::ALL[(i * i) % 4]).collect();
        let folds = kfold_labels(&labels, 5, 9, true).unwrap();
        let mut seen = vec![0; labels.len()];
        for (train, valid) in &folds {
            assert_eq!(train.len() + valid.len(), labels.len());
            for &i in valid {
                seen[i] += 1;
                assert!(!train.contains(&i));
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
        let sizes: Vec<usize> = folds.iter().map(|f| f.1.len()).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert_eq!(folds, kfold_labels(&labels, 5, 9, true).unwrap());
    }

    #[test]
    fn report_row_and_csv() {
        let g = [Preparedness, Response, Response, Engagement];
        let r = evaluate(&g, &g).unwrap();
        assert_eq!(r.row(), [1.0, 1.0, 0.0, 1.0, 1.0]);
        assert!(r.to_csv().contains("weighted_f1,,,1.000000,4,"));
        assert!(r.render().contains("degenerate"));
    }
}
