//! Metrics and the ablation / noise-sweep harness.

mod ablation;
mod metrics;

pub use ablation::{
    noise_sweep, prepare_run, run_ablation, run_mode, summarize, AblationMode, ExperimentConfig, PreparedRun,
    RunReport, Summary, SweepConfig, sweep_run,
};
pub use metrics::{
    accuracy, mean_and_std, mean_weight_by_flag, outlier_auc, precision_at_k, DEFAULT_PRECISION_K,
};
