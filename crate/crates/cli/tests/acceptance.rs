//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use attrsense_core::corpus::Corpus;
use attrsense_core::embedding::{build_vocab, load_vectors, save_vectors, sgns_pair_objective, train_sgns};
use attrsense_core::embedding::{SgnsConfig, Vocabulary, WordVectorTable};
use attrsense_core::eval::{assign_folds, roc_auc, welch_t_test, MetricsReport};
use attrsense_core::models::{
    self, Activation, AdaBoostParams, Algorithm, HyperParams, Mlp, ModelState, Predictions, SvcParams,
};
use attrsense_core::seed::rng_from_seed;
use attrsense_core::sweep::{make_role_blocks, run_cell, task_datasets, train_embedding, vectorize_corpus};
use attrsense_core::synth::{generate, two_cluster_tweets, Signal, SynthConfig};
use attrsense_core::vectorize::{Task, TaskDataset};
use attrsense_core::Matrix;
use rand::seq::SliceRandom;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check); 12] = [
        ("planted signal end to end", planted_signal),
        ("block size effect", block_size_effect),
        ("skip-gram gradient check", sgns_gradients),
        ("network gradient check", mlp_gradients),
        ("AUC oracle equivalence", auc_oracle),
        ("metric oracles", metric_oracles),
        ("cross-validation integrity", cv_integrity),
        ("AdaBoost training error bound", adaboost_bound),
        ("Welch t-test", welch),
        ("sweep determinism", sweep_determinism),
        ("embedding semantics", embedding_semantics),
        ("vector format round trip", vector_round_trip),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let label = format!("criterion {:>2}: {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!result.pass);
        println!("{verdict} {label} ({}; {:.1}s)", result.detail, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------
// End-to-end criteria on planted-signal corpora.

fn svc_grid() -> Vec<HyperParams> {
    [0.1, 1.0, 10.0]
        .iter()
        .map(|&c| HyperParams::LinearSvc(SvcParams { c, ..SvcParams::default() }))
        .collect()
}

fn planted_datasets(rate: f64, l: usize, seed: u64) -> (TaskDataset, TaskDataset) {
    let synth = generate(&SynthConfig {
        signals: vec![Signal::new(Task::Gender, rate)],
        seed,
        ..SynthConfig::default()
    })
    .unwrap();
    let corpus = Corpus::join(synth.accounts, synth.tweets).unwrap();
    let sgns = SgnsConfig { dim: 50, seed, ..SgnsConfig::default() };
    let (vocab, table) = train_embedding(&corpus, &sgns).unwrap();
    let (vectors, _) = vectorize_corpus(&corpus, &vocab, &table).unwrap();
    let blocks = make_role_blocks(&corpus, &vectors, l).unwrap();
    task_datasets(&corpus, &blocks, Task::Gender).unwrap()
}

fn planted_signal() -> Outcome {
    let start = Instant::now();
    let (train, test) = planted_datasets(0.2, 10, 1);
    let real = run_cell(&train, &test, &svc_grid(), 10, 1, 50, 10).unwrap().report.accuracy;

    let mut shuffled = train.clone();
    shuffled.labels.shuffle(&mut rng_from_seed(99));
    let control = run_cell(&shuffled, &test, &svc_grid(), 10, 1, 50, 10).unwrap().report.accuracy;
    let elapsed = start.elapsed();
    outcome(
        real >= 0.90 && (0.40..=0.60).contains(&control) && elapsed < Duration::from_secs(300),
        format!(
            "accuracy {real:.4} >= 0.90, shuffled-label accuracy {control:.4} in [0.40, 0.60], {} test blocks",
            test.len()
        ),
    )
}

fn block_size_effect() -> Outcome {
    let seeds = 1..=5u64;
    let mut at_10 = Vec::new();
    let mut at_1 = Vec::new();
    for seed in seeds {
        for (l, out) in [(10, &mut at_10), (1, &mut at_1)] {
            let (train, test) = planted_datasets(0.05, l, seed);
            out.push(run_cell(&train, &test, &svc_grid(), 10, seed, 50, l).unwrap().report.accuracy);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let gain = mean(&at_10) - mean(&at_1);
    outcome(
        gain >= 0.05,
        format!("mean accuracy L=10 {:.4}, L=1 {:.4}, gain {gain:.4} >= 0.05", mean(&at_10), mean(&at_1)),
    )
}

// ---------------------------------------------------------------------------
// Gradient checks by central finite differences.

const STEP: f64 = 1e-5;

fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt() + numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

fn central_difference(x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + STEP;
            let up = f(&probe);
            probe[i] = x[i] - STEP;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * STEP)
        })
        .collect()
}

fn sgns_gradients() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(3);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let k = [1, 3, 5][case % 3];
        let mut draw = || (0..5).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
        let center = draw();
        let context = draw();
        let negatives: Vec<Vec<f64>> = (0..k).map(|_| draw()).collect();
        let g = sgns_pair_objective(&center, &context, &negatives).unwrap();
        let loss = |c: &[f64], x: &[f64], n: &[Vec<f64>]| sgns_pair_objective(c, x, n).unwrap().loss;

        worst = worst.max(relative_error(&g.center, &central_difference(&center, |v| loss(v, &context, &negatives))));
        worst = worst.max(relative_error(&g.context, &central_difference(&context, |v| loss(&center, v, &negatives))));
        for j in 0..k {
            let numeric = central_difference(&negatives[j], |v| {
                let mut n = negatives.clone();
                n[j] = v.to_vec();
                loss(&center, &context, &n)
            });
            worst = worst.max(relative_error(&g.negatives[j], &numeric));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-4 && elapsed < Duration::from_secs(10),
        format!("100 cases, worst relative error {worst:.2e} < 1e-4"),
    )
}

fn mlp_gradients() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for activation in [Activation::Relu, Activation::Tanh] {
        for seed in 0..10u64 {
            let mut rng = rng_from_seed(100 + seed);
            let net = Mlp::new(&[5, 8, 3], activation, seed).unwrap();
            let rows: Vec<Vec<f64>> = (0..6).map(|_| (0..5).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
            let x = Matrix::from_rows(&rows, 5).unwrap();
            let y: Vec<usize> = (0..6).map(|_| rng.random_range(0..3)).collect();
            let (_, analytic) = net.loss_and_gradients(&x, &y);
            let numeric = central_difference(net.params(), |p| {
                let mut probe = net.clone();
                probe.set_params(p).unwrap();
                probe.loss_and_gradients(&x, &y).0
            });
            worst = worst.max(relative_error(&analytic, &numeric));
            cases += 1;
        }
    }
    outcome(
        worst < 1e-4,
        format!("{cases} networks [5, 8, 3], relu and tanh, worst relative error {worst:.2e} < 1e-4"),
    )
}

// ---------------------------------------------------------------------------
// Metric oracles.

fn pair_counting_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &p) in positive.iter().enumerate() {
        if !p {
            continue;
        }
        for (j, &q) in positive.iter().enumerate() {
            if q {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn auc_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(5);
    let mut worst: f64 = 0.0;
    let mut sets = 0;
    while sets < 100 {
        let n = rng.random_range(2..=200);
        let coarse = rng.random_bool(0.5);
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                let s: f64 = rng.random();
                if coarse {
                    (s * 8.0).floor() / 8.0
                } else {
                    s
                }
            })
            .collect();
        let mut scores = scores;
        for _ in 0..n / 5 {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            scores[a] = scores[b];
        }
        let positive: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        if positive.iter().all(|&p| p) || positive.iter().all(|&p| !p) {
            continue;
        }
        let auc = roc_auc(&scores, &positive).unwrap();
        worst = worst.max((auc - pair_counting_auc(&scores, &positive)).abs());
        sets += 1;
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && elapsed < Duration::from_secs(5),
        format!("100 score sets with ties, max difference {worst:.1e} <= 1e-9"),
    )
}

fn metric_oracles() -> Outcome {
    let mut rng = rng_from_seed(6);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let task = [Task::Gender, Task::Occupation, Task::AgeGroup][rng.random_range(0..3)];
        let k = task.class_names().len();
        let n = rng.random_range(1..=120);
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let predicted: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let mut scores = Matrix::zeros(n, k);
        for (i, &p) in predicted.iter().enumerate() {
            for c in 0..k {
                scores.set(i, c, if c == p { 1.0 } else { rng.random_range(0.0..0.9) });
            }
        }
        let predictions = Predictions { labels: predicted.clone(), scores };
        let report = MetricsReport::compute(task, Algorithm::Knn, 1, 1, &truth, &predictions).unwrap();

        let correct = truth.iter().zip(&predicted).filter(|(t, p)| t == p).count();
        let accuracy = correct as f64 / n as f64;
        let class_f1 = |c: usize| {
            let tp = truth.iter().zip(&predicted).filter(|&(&t, &p)| t == c && p == c).count();
            let fp = truth.iter().zip(&predicted).filter(|&(&t, &p)| t != c && p == c).count();
            let fn_ = truth.iter().zip(&predicted).filter(|&(&t, &p)| t == c && p != c).count();
            if 2 * tp + fp + fn_ == 0 {
                0.0
            } else {
                (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
            }
        };
        let recall = |c: usize| {
            let support = truth.iter().filter(|&&t| t == c).count();
            let hits = truth.iter().zip(&predicted).filter(|&(&t, &p)| t == c && p == c).count();
            (support > 0).then(|| hits as f64 / support as f64)
        };
        let f1 = match task.positive_class() {
            Some(name) => class_f1(task.class_names().iter().position(|c| c == name).unwrap()),
            None => {
                let present: Vec<usize> = (0..k).filter(|&c| truth.contains(&c)).collect();
                present.iter().map(|&c| class_f1(c)).sum::<f64>() / present.len() as f64
            }
        };
        let recalls: Vec<Option<f64>> = (0..k).map(recall).collect();
        if report.accuracy != accuracy || report.f1 != f1 || report.per_class_recall != recalls {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("1000 random cases, {mismatches} exact mismatches"))
}

// ---------------------------------------------------------------------------
// Cross-validation folds.

fn random_dataset(rng: &mut impl Rng) -> (TaskDataset, usize) {
    loop {
        let classes = rng.random_range(2..=4);
        let accounts = rng.random_range(8..=40);
        let folds = rng.random_range(2..=6);
        let mut labels = Vec::new();
        let mut groups = Vec::new();
        let mut block_index = Vec::new();
        for a in 0..accounts {
            let label = rng.random_range(0..classes);
            for b in 0..rng.random_range(1..=12) {
                labels.push(label);
                groups.push(format!("acct{a:03}"));
                block_index.push(b);
            }
        }
        let feasible = (0..classes).all(|c| {
            let mut ids: Vec<&String> = groups.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(g, _)| g).collect();
            let rows = ids.len();
            ids.dedup();
            rows >= folds && ids.len() >= folds
        });
        if !feasible {
            continue;
        }
        let rows = Matrix::zeros(labels.len(), 2);
        let task = if classes == 2 { Task::Gender } else { Task::Occupation };
        let ds = TaskDataset {
            task,
            rows,
            labels,
            groups,
            block_index,
            class_names: task.class_names(),
        };
        return (ds, folds);
    }
}

fn fold_violations(ds: &TaskDataset, folds: &[Vec<usize>]) -> usize {
    let mut violations = 0;
    let mut seen = vec![0usize; ds.len()];
    for fold in folds {
        for &i in fold {
            seen[i] += 1;
        }
    }
    violations += seen.iter().filter(|&&c| c != 1).count();

    let fold_of_account = |f: &[usize]| {
        let mut ids: Vec<&String> = f.iter().map(|&i| &ds.groups[i]).collect();
        ids.sort();
        ids.dedup();
        ids
    };
    let mut owners = std::collections::HashMap::new();
    for (f, fold) in folds.iter().enumerate() {
        for &i in fold {
            if *owners.entry(&ds.groups[i]).or_insert(f) != f {
                violations += 1;
            }
        }
    }

    for c in 0..ds.n_classes() {
        let per_fold: Vec<usize> = folds
            .iter()
            .map(|fold| {
                fold_of_account(fold)
                    .into_iter()
                    .filter(|g| ds.groups.iter().zip(&ds.labels).any(|(h, &l)| h == *g && l == c))
                    .count()
            })
            .collect();
        let (lo, hi) = (per_fold.iter().min().unwrap(), per_fold.iter().max().unwrap());
        if hi - lo > 1 {
            violations += 1;
        }
    }
    violations
}

fn cv_integrity() -> Outcome {
    let mut rng = rng_from_seed(7);
    let mut violations = 0;
    for d in 0..50u64 {
        let (ds, folds) = random_dataset(&mut rng);
        let assignment = assign_folds(&ds, folds, d).unwrap();
        if assignment.len() != folds {
            violations += 1;
        }
        violations += fold_violations(&ds, &assignment);
    }
    outcome(
        violations == 0,
        format!("50 datasets, {violations} violations of disjoint, covering, group-pure, per-class +-1 accounts"),
    )
}

// ---------------------------------------------------------------------------
// AdaBoost.

fn adaboost_bound() -> Outcome {
    let mut rng = rng_from_seed(8);
    let rows: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
    let labels: Vec<usize> = rows
        .iter()
        .map(|r| usize::from(r[0] * r[0] + r[1] * r[1] < 0.5 || rng.random_bool(0.05)))
        .collect();
    let ds = TaskDataset {
        task: Task::Gender,
        rows: Matrix::from_rows(&rows, 2).unwrap(),
        labels: labels.clone(),
        groups: (0..50).map(|i| format!("a{i}")).collect(),
        block_index: vec![0; 50],
        class_names: Task::Gender.class_names(),
    };
    let model = models::train(&ds, &HyperParams::Adaboost(AdaBoostParams { rounds: 40 }), 1).unwrap();
    let ModelState::Adaboost(boost) = &model.state else {
        return outcome(false, "unexpected model kind".into());
    };
    let rounds = boost.round_errors().len();
    let staged: Vec<Vec<usize>> = rows.iter().map(|r| boost.staged_labels(r)).collect();
    let mut bound = 1.0;
    let mut violations = 0;
    let mut final_error = 0.0;
    for t in 0..rounds {
        let eps = boost.round_errors()[t];
        bound *= 2.0 * (eps * (1.0 - eps)).sqrt();
        let wrong = staged.iter().zip(&labels).filter(|(s, &y)| s[t] != y).count();
        final_error = wrong as f64 / labels.len() as f64;
        if final_error > bound + 1e-12 {
            violations += 1;
        }
    }
    outcome(
        violations == 0 && rounds >= 2,
        format!("{rounds} rounds, {violations} rounds above the bound, final training error {final_error:.3}, bound {bound:.3}"),
    )
}

// ---------------------------------------------------------------------------
// Welch t-test against numerical integration of the t density.

fn t_kernel(x: f64, df: f64) -> f64 {
    (1.0 + x * x / df).powf(-(df + 1.0) / 2.0)
}

/// Integral of the unnormalized t density over `[a, inf)` by Simpson's rule
/// after mapping `x = a + u / (1 - u)` onto `[0, 1)`.
fn tail_integral(a: f64, df: f64) -> f64 {
    let n = 200_000;
    let h = 1.0 / n as f64;
    let g = |u: f64| {
        if u >= 1.0 {
            0.0
        } else {
            let w = 1.0 - u;
            t_kernel(a + u / w, df) / (w * w)
        }
    };
    let mut sum = g(0.0) + g(1.0);
    for i in 1..n {
        sum += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

fn welch() -> Outcome {
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let b = [2.0, 3.0, 4.0, 5.0, 6.0];
    let r = welch_t_test(&a, &b).unwrap();

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let (sa, sb) = (var(&a) / 5.0, var(&b) / 5.0);
    let t = (mean(&a) - mean(&b)) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / 4.0 + sb * sb / 4.0);
    let p = 2.0 * tail_integral(t.abs(), df) / (2.0 * tail_integral(0.0, df));

    let pass = (r.t - t).abs() < 1e-9 && (r.df - df).abs() < 1e-9 && (r.p - p).abs() < 1e-3 && (r.p - 0.3466).abs() < 1e-3;
    outcome(
        pass,
        format!("t {:.4} df {:.4} p {:.6}; oracle t {t:.4} df {df:.4} p {p:.6}", r.t, r.df, r.p),
    )
}

// ---------------------------------------------------------------------------
// Sweep determinism through the command-line binary.

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn sweep_determinism() -> Outcome {
    let config = workspace_root().join("demo/demo.toml");
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in ["first", "second"] {
        let out = tmp.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_attrsense"))
            .args(["--deterministic", "sweep", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .env("ATTRSENSE_CACHE", tmp.path().join(format!("cache-{run}")))
            .output()
            .unwrap();
        if !status.status.success() {
            return outcome(false, format!("sweep failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        outputs.push(std::fs::read(out.join("results.csv")).unwrap());
    }
    let rows = outputs[0].iter().filter(|&&b| b == b'\n').count().saturating_sub(1);
    outcome(
        outputs[0] == outputs[1] && rows > 0,
        format!("two runs of the demo sweep, {rows} rows each, byte-identical: {}", outputs[0] == outputs[1]),
    )
}

// ---------------------------------------------------------------------------
// Embeddings.

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum();
    let na: f64 = a.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn embedding_semantics() -> Outcome {
    let mut gaps = Vec::new();
    for seed in 1..=5u64 {
        let tweets = two_cluster_tweets(2000, seed);
        let vocab = build_vocab(&tweets, 1).unwrap();
        let config = SgnsConfig { dim: 10, epochs: 20, seed, ..SgnsConfig::default() };
        let table = train_sgns(&tweets, &vocab, &config).unwrap();
        let v = |w: &str| table.row(vocab.id(w).unwrap());
        let intra = (cosine(v("a"), v("b")) + cosine(v("c"), v("d"))) / 2.0;
        let cross = [("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")]
            .iter()
            .map(|(x, y)| cosine(v(x), v(y)))
            .sum::<f64>()
            / 4.0;
        gaps.push(intra - cross);
    }
    let min = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        min >= 0.2,
        format!(
            "intra minus cross cosine per seed [{}], minimum {min:.4} >= 0.2",
            gaps.iter().map(|g| format!("{g:.3}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn vector_round_trip() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut worst: f64 = 0.0;
    let mut words_ok = true;
    for dim in [50, 200, 500] {
        let mut rng = rng_from_seed(dim as u64);
        let vocab = Vocabulary::from_words((0..300).map(|i| format!("word{i}")).collect()).unwrap();
        let values: Vec<f32> = (0..300 * dim)
            .map(|_| {
                let magnitude = 10f32.powi(rng.random_range(-6..3));
                rng.random_range(-1.0f32..1.0) * magnitude
            })
            .collect();
        let table = WordVectorTable::new(dim, values).unwrap();
        let path = tmp.path().join(format!("v{dim}.vec"));
        save_vectors(&table, &vocab, &path).unwrap();
        let (vocab2, table2) = load_vectors(&path).unwrap();
        words_ok &= vocab2.words() == vocab.words() && table2.dim() == dim;
        for i in 0..table.len() {
            for (a, b) in table.row(i).iter().zip(table2.row(i)) {
                worst = worst.max(f64::from((a - b).abs()));
            }
        }
    }
    outcome(
        worst <= 1e-6 && words_ok,
        format!("N in {{50, 200, 500}}, max component difference {worst:.1e} <= 1e-6"),
    )
}
