use std::collections::BTreeMap;

use super::metrics::MetricsReport;
use crate::models::{Algorithm, Predictions};
use crate::vectorize::Task;
use crate::{Error, Result};

/// Recall of `entity` in every report of `task` and `algorithm`, in report
/// order. Reports where the entity had no test rows are skipped.
pub fn per_entity_recall(reports: &[MetricsReport], task: Task, algorithm: Algorithm, entity: &str) -> Result<Vec<f64>> {
    if !task.class_names().iter().any(|c| c == entity) {
        return Err(Error::Parameter(format!("'{entity}' is not a class of task {task}")));
    }
    Ok(reports
        .iter()
        .filter(|r| r.task == task && r.algorithm == algorithm)
        .filter_map(|r| r.recall_of(entity))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockVote {
    pub label: usize,
    /// Score of the predicted label.
    pub score: f64,
}

/// Majority label per account. Ties go to the label whose supporting
/// blocks have the highest mean score, then to the lowest class id.
pub fn account_vote(groups: &BTreeMap<String, Vec<BlockVote>>) -> Result<BTreeMap<String, usize>> {
    groups
        .iter()
        .map(|(account, blocks)| {
            if blocks.is_empty() {
                return Err(Error::Data(format!("account '{account}' has no blocks to vote")));
            }
            let mut tally: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
            for b in blocks {
                let e = tally.entry(b.label).or_insert((0, 0.0));
                e.0 += 1;
                e.1 += b.score;
            }
            let mut best: Option<(usize, usize, f64)> = None;
            for (&label, &(count, sum)) in &tally {
                let mean = sum / count as f64;
                let better = match best {
                    None => true,
                    Some((_, c, m)) => count > c || (count == c && mean > m),
                };
                if better {
                    best = Some((label, count, mean));
                }
            }
            Ok((account.clone(), best.expect("non-empty tally").0))
        })
        .collect()
}

/// Groups block predictions by owning account.
pub fn group_votes(groups: &[String], predictions: &Predictions) -> Result<BTreeMap<String, Vec<BlockVote>>> {
    if groups.len() != predictions.labels.len() {
        return Err(Error::Dimension {
            expected: predictions.labels.len(),
            got: groups.len(),
        });
    }
    let mut out: BTreeMap<String, Vec<BlockVote>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        let label = predictions.labels[i];
        out.entry(g.clone()).or_default().push(BlockVote {
            label,
            score: predictions.scores.get(i, label),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::metrics::ConfusionMatrix;

    fn votes(v: &[(usize, f64)]) -> Vec<BlockVote> {
        v.iter().map(|&(label, score)| BlockVote { label, score }).collect()
    }

    fn vote_one(v: &[(usize, f64)]) -> usize {
        let mut g = BTreeMap::new();
        g.insert("a".to_string(), votes(v));
        account_vote(&g).unwrap()["a"]
    }

    #[test]
    fn majority_single_and_tie() {
        assert_eq!(vote_one(&[(0, 0.1), (0, 0.1), (1, 0.9)]), 0);
        assert_eq!(vote_one(&[(1, 0.3)]), 1);
        assert_eq!(vote_one(&[(0, 0.9), (1, 0.6)]), 0);
        assert_eq!(vote_one(&[(0, 0.6), (1, 0.9)]), 1);
        assert_eq!(vote_one(&[(1, 0.5), (0, 0.5)]), 0);
    }

    #[test]
    fn empty_account_is_an_error() {
        let mut g = BTreeMap::new();
        g.insert("a".to_string(), Vec::new());
        assert!(account_vote(&g).is_err());
    }

    fn report(task: Task, algorithm: Algorithm, pred: &[usize], truth: &[usize]) -> MetricsReport {
        let confusion = ConfusionMatrix::new(pred, truth, &task.class_names()).unwrap();
        MetricsReport {
            task,
            algorithm,
            n: 50,
            l: 1,
            accuracy: confusion.accuracy(),
            f1: 0.0,
            auc: None,
            auc_note: None,
            per_class_recall: confusion.per_class_recall(),
            confusion,
            positive_class: None,
        }
    }

    #[test]
    fn recall_distribution_per_entity() {
        let reports = vec![
            report(Task::Gender, Algorithm::Knn, &[0, 0, 1, 1], &[0, 0, 1, 0]),
            report(Task::Gender, Algorithm::Knn, &[1, 1, 1, 1], &[0, 0, 1, 1]),
            report(Task::Gender, Algorithm::LinearSvc, &[0, 0], &[0, 0]),
        ];
        let male = per_entity_recall(&reports, Task::Gender, Algorithm::Knn, "male").unwrap();
        assert_eq!(male, vec![2.0 / 3.0, 0.0]);
        let female = per_entity_recall(&reports, Task::Gender, Algorithm::Knn, "female").unwrap();
        assert_eq!(female, vec![1.0, 1.0]);
        assert_eq!(per_entity_recall(&reports, Task::Gender, Algorithm::LinearSvc, "female").unwrap(), Vec::<f64>::new());
        assert!(per_entity_recall(&reports, Task::Gender, Algorithm::Knn, "student").is_err());
    }
}
