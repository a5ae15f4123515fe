//! Evaluation protocols, split rules, synthetic data, and reporting.

mod report;
mod runners;
mod split;
pub mod synth;

pub use report::{pool_evaluation, ExperimentReport, ReferenceLine, RunRecord, TaskKind};
pub use runners::{
    default_hidden, default_shared, eval_task, run_cross_modal, run_multimodal_facilitation,
    run_unimodal_enhancement, TaskArtifacts, TaskCfgs,
};
pub use split::{
    apply_split, binarize_labels, confusion_matrix, split_indices, Evaluation, SplitRule,
    TestPartition,
};
pub use synth::{generate_synthetic, SynthSpec};
