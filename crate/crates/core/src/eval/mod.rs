//! Question-set evaluation.

mod dataset;
mod metrics;
mod run;

pub use dataset::{load_dataset, parse_dataset, DatasetError, DatasetRow, Level};
pub use metrics::{exact_match, f1, hit, ExactMatch};
pub use run::{
    aggregate, check_gold, evaluate_row, results_jsonl, run_eval, write_outputs, EvalOptions, EvalReport, LevelMetrics,
    QuestionResult,
};
