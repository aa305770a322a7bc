use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{SweepOutcome, SweepResult};
use crate::eval::{format_metric, per_entity_recall, welch_t_test, MetricsReport};
use crate::models::Algorithm;
use crate::vectorize::Task;
use crate::{Error, Result};

pub const RESULTS_CSV_HEADER: [&str; 19] = [
    "task",
    "algorithm",
    "N",
    "L",
    "seed",
    "accuracy",
    "f1",
    "auc",
    "positive_class",
    "status",
    "best_params",
    "cv_accuracy",
    "train_blocks",
    "test_blocks",
    "dropped_tweets",
    "cv_ms",
    "fit_ms",
    "eval_ms",
    "error",
];

/// Best (algorithm, N, L) of one task by accuracy averaged over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestCell {
    pub task: Task,
    pub algorithm: Algorithm,
    pub n: usize,
    pub l: usize,
    pub mean_accuracy: f64,
    pub mean_f1: f64,
    pub mean_auc: Option<f64>,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityRecall {
    pub entity: String,
    pub recall: Vec<f64>,
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub a: String,
    pub b: String,
    pub t: Option<f64>,
    pub df: Option<f64>,
    pub p: Option<f64>,
    pub degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityStats {
    pub entities: Vec<EntityRecall>,
    pub tests: Vec<PairTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEntityStats {
    pub task: Task,
    pub by_algorithm: BTreeMap<String, EntityStats>,
    /// Recall samples pooled over every algorithm.
    pub pooled: EntityStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub results_csv: PathBuf,
    pub results_json: PathBuf,
    pub best_by_task: PathBuf,
    pub entity_stats: PathBuf,
    pub summary: PathBuf,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn optional(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), format_metric)
}

/// Per task, the cell group with the highest mean accuracy; ties go to the
/// smaller N, then the smaller L, then the earlier algorithm.
pub fn best_by_task(results: &[SweepResult]) -> Vec<BestCell> {
    let mut groups: BTreeMap<(Task, usize, usize, Algorithm), Vec<&MetricsReport>> = BTreeMap::new();
    for r in results {
        if let Some(report) = r.report.as_ref().filter(|_| r.is_ok()) {
            groups.entry((r.task, r.n, r.l, r.algorithm)).or_default().push(report);
        }
    }
    let mut best: BTreeMap<Task, BestCell> = BTreeMap::new();
    // BTreeMap order visits smaller N, then smaller L, then earlier algorithm first
    for ((task, n, l, algorithm), reports) in groups {
        let acc: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
        let f1: Vec<f64> = reports.iter().map(|r| r.f1).collect();
        let auc: Vec<f64> = reports.iter().filter_map(|r| r.auc).collect();
        let cell = BestCell {
            task,
            algorithm,
            n,
            l,
            mean_accuracy: mean(&acc).expect("non-empty group"),
            mean_f1: mean(&f1).expect("non-empty group"),
            mean_auc: mean(&auc),
            seeds: reports.len(),
        };
        match best.get(&task) {
            Some(b) if b.mean_accuracy >= cell.mean_accuracy => {}
            _ => {
                best.insert(task, cell);
            }
        }
    }
    best.into_values().collect()
}

fn entity_stats(reports: &[MetricsReport], task: Task, algorithms: &[Algorithm]) -> Result<EntityStats> {
    let entities = task
        .class_names()
        .into_iter()
        .map(|entity| {
            let mut recall = Vec::new();
            for &a in algorithms {
                recall.extend(per_entity_recall(reports, task, a, &entity)?);
            }
            Ok(EntityRecall {
                mean: mean(&recall),
                entity,
                recall,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tests = Vec::new();
    for (i, a) in entities.iter().enumerate() {
        for b in &entities[i + 1..] {
            let mut test = PairTest {
                a: a.entity.clone(),
                b: b.entity.clone(),
                t: None,
                df: None,
                p: None,
                degenerate: false,
                note: None,
            };
            match welch_t_test(&a.recall, &b.recall) {
                Ok(w) => {
                    test.t = w.t.is_finite().then_some(w.t);
                    test.df = Some(w.df);
                    test.p = Some(w.p);
                    test.degenerate = w.degenerate;
                }
                Err(e) => test.note = Some(e.to_string()),
            }
            tests.push(test);
        }
    }
    Ok(EntityStats { entities, tests })
}

/// Per-entity recall samples and pairwise Welch tests, per task.
pub fn entity_report(results: &[SweepResult]) -> Result<Vec<TaskEntityStats>> {
    let reports: Vec<MetricsReport> = results
        .iter()
        .filter(|r| r.is_ok())
        .filter_map(|r| r.report.clone())
        .collect();
    let mut tasks: Vec<Task> = results.iter().map(|r| r.task).collect();
    tasks.sort();
    tasks.dedup();
    tasks
        .into_iter()
        .map(|task| {
            let mut algorithms: Vec<Algorithm> = results.iter().filter(|r| r.task == task).map(|r| r.algorithm).collect();
            algorithms.sort();
            algorithms.dedup();
            let by_algorithm = algorithms
                .iter()
                .map(|&a| Ok((a.to_string(), entity_stats(&reports, task, &[a])?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            Ok(TaskEntityStats {
                task,
                pooled: entity_stats(&reports, task, &algorithms)?,
                by_algorithm,
            })
        })
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Runtime(format!("{}: {other:?}", path.display())),
    }
}

fn write_results_csv(path: &Path, results: &[SweepResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(RESULTS_CSV_HEADER).map_err(|e| csv_error(path, e))?;
    for r in results {
        let (metrics, positive) = match &r.report {
            Some(rep) => (
                [format_metric(rep.accuracy), format_metric(rep.f1), optional(rep.auc)],
                rep.positive_class.clone().unwrap_or_default(),
            ),
            None => (Default::default(), r.task.positive_class().unwrap_or_default().to_string()),
        };
        let timing = r.timing.map_or([String::new(), String::new(), String::new()], |t| {
            [t.cv_ms.to_string(), t.fit_ms.to_string(), t.eval_ms.to_string()]
        });
        let [acc, f1, auc] = metrics;
        let [cv_ms, fit_ms, eval_ms] = timing;
        w.write_record([
            r.task.to_string(),
            r.algorithm.to_string(),
            r.n.to_string(),
            r.l.to_string(),
            r.seed.to_string(),
            acc,
            f1,
            auc,
            positive,
            r.status.as_str().to_string(),
            r.best_params.as_ref().map(|p| p.summary()).unwrap_or_default(),
            r.cv_accuracy.map(format_metric).unwrap_or_default(),
            r.train_blocks.to_string(),
            r.test_blocks.to_string(),
            r.dropped_tweets.to_string(),
            cv_ms,
            fit_ms,
            eval_ms,
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_best_csv(path: &Path, best: &[BestCell]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["task", "algorithm", "N", "L", "mean_accuracy", "mean_f1", "mean_auc", "seeds"])
        .map_err(|e| csv_error(path, e))?;
    for b in best {
        w.write_record([
            b.task.to_string(),
            b.algorithm.to_string(),
            b.n.to_string(),
            b.l.to_string(),
            format_metric(b.mean_accuracy),
            format_metric(b.mean_f1),
            optional(b.mean_auc),
            b.seeds.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Runtime(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn summary_text(outcome: &SweepOutcome, best: &[BestCell], entities: &[TaskEntityStats]) -> String {
    let results = &outcome.results;
    let ok = results.iter().filter(|r| r.is_ok()).count();
    let mut s = String::new();
    let _ = writeln!(s, "cells: {} ({} ok, {} failed)", results.len(), ok, results.len() - ok);
    for v in &outcome.vectorize {
        let total = v.used_tokens + v.skipped_tokens;
        let oov = if total == 0 { 0.0 } else { v.skipped_tokens as f64 / total as f64 };
        let _ = writeln!(
            s,
            "N={}: vocabulary {} words, {} posts, {} fully out of vocabulary, token OOV rate {:.4}",
            v.n, v.vocab_size, v.tweets, v.all_oov_tweets, oov
        );
    }
    let _ = writeln!(s, "\nbest cell per task (mean over seeds):");
    for b in best {
        let _ = writeln!(
            s,
            "  {}: {} N={} L={} accuracy={} f1={} auc={} seeds={}",
            b.task,
            b.algorithm,
            b.n,
            b.l,
            format_metric(b.mean_accuracy),
            format_metric(b.mean_f1),
            optional(b.mean_auc),
            b.seeds
        );
    }
    let _ = writeln!(s, "\nper-entity recall, pooled over algorithms:");
    for t in entities {
        let means: Vec<String> = t
            .pooled
            .entities
            .iter()
            .map(|e| format!("{}={}", e.entity, optional(e.mean)))
            .collect();
        let _ = writeln!(s, "  {}: {}", t.task, means.join(" "));
        if t.pooled.tests.len() == 1 {
            let pt = &t.pooled.tests[0];
            let _ = writeln!(
                s,
                "    welch {} vs {}: t={} p={}",
                pt.a,
                pt.b,
                optional(pt.t),
                pt.p.map_or_else(|| "NA".to_string(), |p| format!("{p:.3e}"))
            );
        }
    }
    let failed: Vec<&SweepResult> = results.iter().filter(|r| !r.is_ok()).collect();
    if !failed.is_empty() {
        let _ = writeln!(s, "\nfailed cells:");
        for r in failed {
            let _ = writeln!(s, "  {}: {}", r.cell_key(), r.error.as_deref().unwrap_or(""));
        }
    }
    s
}

/// Writes results.csv, results.json, best_by_task.csv, entity_stats.json and
/// summary.txt into `dir`.
pub fn emit_report(outcome: &SweepOutcome, dir: &Path) -> Result<ReportFiles> {
    if outcome.results.is_empty() {
        return Err(Error::Data("no results to report".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = ReportFiles {
        results_csv: dir.join("results.csv"),
        results_json: dir.join("results.json"),
        best_by_task: dir.join("best_by_task.csv"),
        entity_stats: dir.join("entity_stats.json"),
        summary: dir.join("summary.txt"),
    };
    write_results_csv(&files.results_csv, &outcome.results)?;
    write_json(&files.results_json, outcome)?;
    let best = best_by_task(&outcome.results);
    write_best_csv(&files.best_by_task, &best)?;
    let entities = entity_report(&outcome.results)?;
    write_json(&files.entity_stats, &entities)?;
    let summary = summary_text(outcome, &best, &entities);
    std::fs::write(&files.summary, summary).map_err(|e| Error::io(&files.summary, e))?;
    Ok(files)
}

/// Reads the results.json written by [`emit_report`].
pub fn load_outcome(path: &Path) -> Result<SweepOutcome> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}
