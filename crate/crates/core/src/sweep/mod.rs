//! The (task × algorithm × N × L × seed) experiment grid.
//!
//! Word vectors are trained once per `N` on training-account posts and
//! cached by content; every cell then builds blocks, selects
//! hyperparameters by grouped cross-validation, refits and evaluates on the
//! test accounts. Cells run in parallel and fail independently.

mod cache;
mod config;
mod pipeline;
mod report;
mod run;

pub use cache::{corpus_digest, EmbeddingCache};
pub use config::{default_grid, expand_grid, EmbeddingSettings, SweepConfig};
pub use pipeline::{
    load_corpus, make_role_blocks, run_cell, task_datasets, train_embedding, vectorize_corpus, Blocks, CellRun, Timing,
};
pub use report::{
    best_by_task, emit_report, entity_report, load_outcome, BestCell, EntityRecall, EntityStats, PairTest, ReportFiles,
    TaskEntityStats, RESULTS_CSV_HEADER,
};
pub use run::{run_sweep, CellStatus, SweepOutcome, SweepResult, VectorizeSummary};
