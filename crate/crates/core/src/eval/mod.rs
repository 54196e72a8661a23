//! Dataset generation, plan metrics, experiments over context variants and
//! generation benchmarks.

mod bench;
mod check;
mod dataset;
mod experiment;
mod metrics;

pub use bench::{bench, BenchResult};
pub use check::{check_report, CheckOutcome, ACTION_FLOOR, SAMPLING_GAIN_LIMIT, SAMPLING_TOLERANCE};
pub use dataset::{
    gen_dataset, generate_records, read_meta, read_split, split_path, split_sizes, write_dataset, DatasetMeta,
    Record, Row, Split, DATASET_FORMAT_VERSION, META_FILE,
};
pub use experiment::{
    domain_vocabulary, evaluate_baseline, evaluate_model, predict, run_experiment, run_on_records, sampled_system,
    train_variant,
    Episode, EvalReport, ExperimentConfig, Prediction, ReportRow,
};
pub use metrics::{plan_accuracy, success_rates, AccuracyTriple, PlanScore, SuccessRates, Tally, RATED_ACTIONS};
