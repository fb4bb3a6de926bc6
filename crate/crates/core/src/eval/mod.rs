//! Patient-based cross-validation, class balancing, a softmax classifier
//! head and confusion-matrix metrics.

mod balance;
mod experiment;
mod head;
mod metrics;
mod split;

pub use balance::balance_undersample;
pub use experiment::{
    autoencoder_sizes, channel_layout, run_ablation, run_experiment, AblationColumn, AblationGrid,
    Aggregate, ChannelMask, ExperimentConfig, ExperimentReport, FitAudit, FoldReport, LabelMap,
    Summary, Task, MAX_CLASSES,
};
pub use head::{softmax_head_predict, softmax_head_train, HeadConfig, Prediction, SoftmaxHead};
pub use metrics::{compute_metrics, MetricsReport};
pub use split::{make_splits, Fold, Role, SplitPlan};
