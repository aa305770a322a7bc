use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::models::{self, HyperParams};
use crate::seed::{derive_seed, rng_from_seed};
use crate::vectorize::TaskDataset;
use crate::{Error, Result};

pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub grid: Vec<HyperParams>,
    /// `fold_scores[c][f]`: held-out accuracy of candidate `c` on fold `f`.
    pub fold_scores: Vec<Vec<f64>>,
    pub mean_scores: Vec<f64>,
    pub best_index: usize,
    pub best: HyperParams,
    /// Row indices of each fold, ascending.
    pub folds: Vec<Vec<usize>>,
}

/// Stratified, group-aware fold assignment.
///
/// Each account (group) is placed whole into one fold. Accounts are
/// stratified by their majority label (ties to the lowest class id),
/// shuffled within the stratum, then placed largest-first into the fold
/// holding the fewest accounts of that stratum, then the fewest rows, then
/// the lowest fold index. Per-class counts therefore differ by at most one
/// account between folds; with one row per account, by at most one row.
pub fn assign_folds(ds: &TaskDataset, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::Parameter("cross-validation needs at least 2 folds".into()));
    }
    check_feasible(ds, folds)?;

    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in ds.groups.iter().enumerate() {
        members.entry(g.as_str()).or_default().push(i);
    }
    let k = ds.n_classes();
    let mut strata: Vec<Vec<&str>> = vec![Vec::new(); k];
    for (&g, rows) in &members {
        let mut counts = vec![0usize; k];
        for &i in rows {
            counts[ds.labels[i]] += 1;
        }
        let max = *counts.iter().max().expect("classes");
        let majority = counts.iter().position(|&c| c == max).expect("max exists");
        strata[majority].push(g);
    }

    let mut rng = rng_from_seed(derive_seed(seed, "cv/folds"));
    let mut fold_rows = vec![0usize; folds];
    let mut assignment: Vec<Vec<usize>> = vec![Vec::new(); folds];
    for stratum in &mut strata {
        stratum.shuffle(&mut rng);
        stratum.sort_by_key(|g| std::cmp::Reverse(members[g].len()));
        let mut in_fold = vec![0usize; folds];
        for g in stratum.iter() {
            let f = (0..folds)
                .min_by_key(|&f| (in_fold[f], fold_rows[f], f))
                .expect("at least two folds");
            in_fold[f] += 1;
            fold_rows[f] += members[g].len();
            assignment[f].extend(&members[g]);
        }
    }
    for fold in &mut assignment {
        fold.sort_unstable();
    }
    Ok(assignment)
}

fn check_feasible(ds: &TaskDataset, folds: usize) -> Result<()> {
    for c in ds.present_classes() {
        let rows = ds.labels.iter().filter(|&&l| l == c).count();
        let mut accounts: Vec<&str> = ds
            .labels
            .iter()
            .zip(&ds.groups)
            .filter(|(&l, _)| l == c)
            .map(|(_, g)| g.as_str())
            .collect();
        accounts.sort_unstable();
        accounts.dedup();
        let name = &ds.class_names[c];
        if rows < folds {
            return Err(Error::Data(format!(
                "class '{name}' has {rows} rows, fewer than the {folds} folds"
            )));
        }
        if accounts.len() < folds {
            return Err(Error::Data(format!(
                "class '{name}' spans {} accounts, fewer than the {folds} folds",
                accounts.len()
            )));
        }
    }
    Ok(())
}

/// Trains every candidate on `folds − 1` folds and scores accuracy on the
/// held-out fold. The best candidate has the highest mean accuracy, ties
/// going to the earlier candidate.
pub fn cross_validate(ds: &TaskDataset, grid: &[HyperParams], folds: usize, seed: u64) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(Error::Parameter("empty hyperparameter grid".into()));
    }
    let fold_sets = assign_folds(ds, folds, seed)?;
    let mut fold_of = vec![0usize; ds.len()];
    for (f, rows) in fold_sets.iter().enumerate() {
        for &i in rows {
            fold_of[i] = f;
        }
    }
    let cells: Vec<(usize, usize)> = (0..grid.len()).flat_map(|c| (0..folds).map(move |f| (c, f))).collect();
    let scores = cells
        .par_iter()
        .map(|&(c, f)| {
            let train_idx: Vec<usize> = (0..ds.len()).filter(|&i| fold_of[i] != f).collect();
            let held_out = &fold_sets[f];
            let model = models::train(&ds.subset(&train_idx), &grid[c], derive_seed(seed, &format!("cv/{c}/{f}")))?;
            let test = ds.subset(held_out);
            let pred = model.predict(&test.rows)?;
            let correct = pred.labels.iter().zip(&test.labels).filter(|(a, b)| a == b).count();
            Ok(correct as f64 / test.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;

    let fold_scores: Vec<Vec<f64>> = scores.chunks(folds).map(<[f64]>::to_vec).collect();
    let mean_scores: Vec<f64> = fold_scores.iter().map(|s| s.iter().sum::<f64>() / folds as f64).collect();
    let mut best_index = 0;
    for (c, &m) in mean_scores.iter().enumerate() {
        if m > mean_scores[best_index] {
            best_index = c;
        }
    }
    Ok(CvResult {
        grid: grid.to_vec(),
        fold_scores,
        mean_scores,
        best_index,
        best: grid[best_index].clone(),
        folds: fold_sets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{KnnParams, SvcParams};
    use crate::vectorize::Task;
    use crate::Matrix;
    use rand::Rng;

    /// `accounts` accounts with `per` rows each; account `a` has class `a % k`.
    fn grouped(accounts: usize, per: usize, k: usize, seed: u64) -> TaskDataset {
        let mut rng = rng_from_seed(seed);
        let n = accounts * per;
        let labels: Vec<usize> = (0..n).map(|i| (i / per) % k).collect();
        let data: Vec<f64> = labels
            .iter()
            .flat_map(|&l| {
                let c = l as f64;
                [c * 3.0 + rng.random::<f64>(), rng.random::<f64>()]
            })
            .collect();
        TaskDataset {
            task: if k == 2 { Task::Gender } else { Task::Occupation },
            rows: Matrix::from_vec(n, 2, data).unwrap(),
            labels,
            groups: (0..n).map(|i| format!("acct{:03}", i / per)).collect(),
            block_index: (0..n).map(|i| i % per).collect(),
            class_names: if k == 2 { Task::Gender.class_names() } else { Task::Occupation.class_names() },
        }
    }

    #[test]
    fn folds_partition_and_keep_accounts_whole() {
        let ds = grouped(37, 4, 3, 1);
        let folds = assign_folds(&ds, 10, 7).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
        for (f, rows) in folds.iter().enumerate() {
            for other in folds.iter().skip(f + 1) {
                for &i in rows {
                    assert!(other.iter().all(|&j| ds.groups[j] != ds.groups[i]));
                }
            }
        }
    }

    #[test]
    fn single_row_accounts_stratify_within_one() {
        let ds = grouped(53, 1, 3, 2);
        let folds = assign_folds(&ds, 10, 3).unwrap();
        for c in 0..3 {
            let per: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| ds.labels[i] == c).count()).collect();
            assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1, "{per:?}");
        }
    }

    #[test]
    fn infeasible_class_is_named() {
        let ds = grouped(18, 5, 2, 3);
        let err = assign_folds(&ds, 10, 0).unwrap_err().to_string();
        assert!(err.contains("male") && err.contains("accounts"), "{err}");
        let ds = grouped(12, 1, 2, 3);
        let err = assign_folds(&ds, 10, 0).unwrap_err().to_string();
        assert!(err.contains("rows"), "{err}");
    }

    #[test]
    fn single_candidate_wins() {
        let ds = grouped(20, 3, 2, 4);
        let grid = [HyperParams::Knn(KnnParams { k: 1 })];
        let cv = cross_validate(&ds, &grid, 10, 1).unwrap();
        assert_eq!(cv.best, grid[0]);
        assert_eq!(cv.fold_scores.len(), 1);
        assert_eq!(cv.fold_scores[0].len(), 10);
    }

    #[test]
    fn ties_go_to_the_first_candidate() {
        let ds = grouped(20, 3, 2, 5);
        let grid = [HyperParams::Knn(KnnParams { k: 3 }), HyperParams::Knn(KnnParams { k: 3 })];
        let cv = cross_validate(&ds, &grid, 10, 1).unwrap();
        assert_eq!(cv.mean_scores[0], cv.mean_scores[1]);
        assert_eq!(cv.best_index, 0);
    }

    #[test]
    fn deterministic_and_seed_dependent() {
        let ds = grouped(40, 2, 2, 6);
        let grid = [HyperParams::LinearSvc(SvcParams::default())];
        assert_eq!(cross_validate(&ds, &grid, 5, 3).unwrap(), cross_validate(&ds, &grid, 5, 3).unwrap());
        assert_ne!(assign_folds(&ds, 5, 3).unwrap(), assign_folds(&ds, 5, 4).unwrap());
    }
}
