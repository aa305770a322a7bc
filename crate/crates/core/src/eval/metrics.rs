use std::fmt;

use serde::{Deserialize, Serialize};

use crate::models::{Algorithm, Predictions};
use crate::vectorize::Task;
use crate::{Error, Matrix, Result};

/// `counts[i][j]` = rows of true class `i` predicted as class `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    class_names: Vec<String>,
    counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(predicted: &[usize], truth: &[usize], class_names: &[String]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::Dimension {
                expected: truth.len(),
                got: predicted.len(),
            });
        }
        let k = class_names.len();
        let mut counts = vec![vec![0; k]; k];
        for (&p, &t) in predicted.iter().zip(truth) {
            if p >= k || t >= k {
                return Err(Error::Data(format!("label {} outside the {k} classes", p.max(t))));
            }
            counts[t][p] += 1;
        }
        Ok(ConfusionMatrix {
            class_names: class_names.to_vec(),
            counts,
        })
    }

    /// Same as [`ConfusionMatrix::new`] with labels given by name.
    pub fn from_names<S: AsRef<str>>(predicted: &[S], truth: &[S], class_names: &[String]) -> Result<Self> {
        let id = |s: &S| {
            class_names
                .iter()
                .position(|c| c == s.as_ref())
                .ok_or_else(|| Error::Data(format!("unknown label '{}'", s.as_ref())))
        };
        let p = predicted.iter().map(id).collect::<Result<Vec<_>>>()?;
        let t = truth.iter().map(id).collect::<Result<Vec<_>>>()?;
        Self::new(&p, &t, class_names)
    }

    pub fn from_counts(counts: Vec<Vec<usize>>, class_names: &[String]) -> Result<Self> {
        let k = class_names.len();
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(Error::Data(format!("confusion counts must be {k}x{k}")));
        }
        Ok(ConfusionMatrix {
            class_names: class_names.to_vec(),
            counts,
        })
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, k: usize) -> usize {
        self.counts[k].iter().sum()
    }

    pub fn predicted_count(&self, k: usize) -> usize {
        self.counts.iter().map(|r| r[k]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let correct: usize = (0..self.n_classes()).map(|k| self.counts[k][k]).sum();
        correct as f64 / total as f64
    }

    /// `None` when class `k` has no true rows.
    pub fn recall(&self, k: usize) -> Option<f64> {
        let support = self.support(k);
        (support > 0).then(|| self.counts[k][k] as f64 / support as f64)
    }

    pub fn precision(&self, k: usize) -> f64 {
        let predicted = self.predicted_count(k);
        if predicted == 0 {
            0.0
        } else {
            self.counts[k][k] as f64 / predicted as f64
        }
    }

    /// One-vs-rest F1 of class `k`, written as `2tp / (2tp + fp + fn)`, which
    /// equals `2PR/(P+R)` and is 0 when `P + R = 0`.
    pub fn f1(&self, k: usize) -> f64 {
        let tp = self.counts[k][k];
        let fp = self.predicted_count(k) - tp;
        let fn_ = self.support(k) - tp;
        let denom = 2 * tp + fp + fn_;
        if denom == 0 {
            0.0
        } else {
            (2 * tp) as f64 / denom as f64
        }
    }

    pub fn per_class_recall(&self) -> Vec<Option<f64>> {
        (0..self.n_classes()).map(|k| self.recall(k)).collect()
    }
}

/// Why an AUC could not be computed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Undefined(pub String);

impl fmt::Display for Undefined {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// ROC AUC by trapezoidal integration. Rows are visited in descending score
/// order and tied scores enter the curve together, so ties count one half.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> std::result::Result<f64, Undefined> {
    if scores.len() != positive.len() {
        return Err(Undefined(format!(
            "{} scores for {} labels",
            scores.len(),
            positive.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Undefined("non-finite score".into()));
    }
    let n_pos = positive.iter().filter(|&&p| p).count() as u64;
    let n_neg = positive.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Undefined(format!(
            "only one true class present ({n_pos} positive, {n_neg} negative)"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    // twice the area in units of (1/n_neg) x (1/n_pos)
    let (mut tp, mut fp, mut area2) = (0u64, 0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let (tp0, fp0) = (tp, fp);
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += (fp - fp0) * (tp + tp0);
    }
    Ok(area2 as f64 / (2 * n_pos * n_neg) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMetrics {
    pub accuracy: f64,
    pub f1: f64,
    pub auc: std::result::Result<f64, Undefined>,
}

/// `scores` are positive-class scores aligned with `truth`.
pub fn binary_metrics(
    confusion: &ConfusionMatrix,
    scores: &[f64],
    truth: &[usize],
    positive: usize,
) -> Result<BinaryMetrics> {
    if confusion.n_classes() != 2 || positive > 1 {
        return Err(Error::Parameter("binary metrics need exactly two classes".into()));
    }
    let labels: Vec<bool> = truth.iter().map(|&t| t == positive).collect();
    Ok(BinaryMetrics {
        accuracy: confusion.accuracy(),
        f1: confusion.f1(positive),
        auc: roc_auc(scores, &labels),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassMetrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub macro_auc: std::result::Result<f64, Undefined>,
    /// Classes left out of the macro means for lack of support.
    pub excluded: Vec<String>,
}

/// Macro means run over classes with at least one true row.
pub fn multiclass_metrics(confusion: &ConfusionMatrix, scores: &Matrix, truth: &[usize]) -> Result<MulticlassMetrics> {
    let k = confusion.n_classes();
    if scores.cols() != k || scores.rows() != truth.len() {
        return Err(Error::Dimension {
            expected: k,
            got: scores.cols(),
        });
    }
    let supported: Vec<usize> = (0..k).filter(|&c| confusion.support(c) > 0).collect();
    let excluded: Vec<String> = (0..k)
        .filter(|&c| confusion.support(c) == 0)
        .map(|c| confusion.class_names()[c].clone())
        .collect();
    if !excluded.is_empty() {
        log::warn!("classes without support left out of macro metrics: {}", excluded.join(", "));
    }
    let macro_f1 = if supported.is_empty() {
        0.0
    } else {
        supported.iter().map(|&c| confusion.f1(c)).sum::<f64>() / supported.len() as f64
    };
    let aucs: Vec<f64> = supported
        .iter()
        .filter_map(|&c| {
            let column: Vec<f64> = scores.iter_rows().map(|r| r[c]).collect();
            let labels: Vec<bool> = truth.iter().map(|&t| t == c).collect();
            roc_auc(&column, &labels).ok()
        })
        .collect();
    let macro_auc = if aucs.is_empty() {
        Err(Undefined("no class has both positive and negative rows".into()))
    } else {
        Ok(aucs.iter().sum::<f64>() / aucs.len() as f64)
    };
    Ok(MulticlassMetrics {
        accuracy: confusion.accuracy(),
        macro_f1,
        macro_auc,
        excluded,
    })
}

/// Test-set evaluation of one (task, algorithm, N, L) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub task: Task,
    pub algorithm: Algorithm,
    pub n: usize,
    pub l: usize,
    pub accuracy: f64,
    pub f1: f64,
    pub auc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auc_note: Option<String>,
    pub confusion: ConfusionMatrix,
    pub per_class_recall: Vec<Option<f64>>,
    pub positive_class: Option<String>,
}

pub const REPORT_CSV_HEADER: [&str; 8] = ["task", "algorithm", "N", "L", "accuracy", "f1", "auc", "positive_class"];

impl MetricsReport {
    /// Binary tasks use the task's positive class and positive-minus-other
    /// scores; other tasks use macro one-vs-rest means.
    pub fn compute(
        task: Task,
        algorithm: Algorithm,
        n: usize,
        l: usize,
        truth: &[usize],
        predictions: &Predictions,
    ) -> Result<MetricsReport> {
        let class_names = task.class_names();
        let confusion = ConfusionMatrix::new(&predictions.labels, truth, &class_names)?;
        let (f1, auc, positive_class) = match task.positive_class() {
            Some(name) => {
                let positive = class_names.iter().position(|c| c == name).expect("positive class is a task class");
                let scores = predictions.positive_scores(positive)?;
                let m = binary_metrics(&confusion, &scores, truth, positive)?;
                (m.f1, m.auc, Some(name.to_string()))
            }
            None => {
                let m = multiclass_metrics(&confusion, &predictions.scores, truth)?;
                (m.macro_f1, m.macro_auc, None)
            }
        };
        let (auc, auc_note) = match auc {
            Ok(v) => (Some(v), None),
            Err(reason) => (None, Some(reason.0)),
        };
        Ok(MetricsReport {
            task,
            algorithm,
            n,
            l,
            accuracy: confusion.accuracy(),
            f1,
            auc,
            auc_note,
            per_class_recall: confusion.per_class_recall(),
            confusion,
            positive_class,
        })
    }

    /// Fields in [`REPORT_CSV_HEADER`] order. Undefined AUC is written as `NA`.
    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.task.to_string(),
            self.algorithm.to_string(),
            self.n.to_string(),
            self.l.to_string(),
            format_metric(self.accuracy),
            format_metric(self.f1),
            self.auc.map_or_else(|| "NA".to_string(), format_metric),
            self.positive_class.clone().unwrap_or_default(),
        ]
    }

    pub fn recall_of(&self, class: &str) -> Option<f64> {
        let k = self.confusion.class_names().iter().position(|c| c == class)?;
        self.per_class_recall[k]
    }
}

pub fn format_metric(v: f64) -> String {
    format!("{v:.6}")
}
