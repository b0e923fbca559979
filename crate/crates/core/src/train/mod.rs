//! Training schedules, samplers and evaluation.

pub mod config;
pub mod eval;
pub mod experiment;
pub mod model;
pub mod run;
pub mod sampler;
pub mod synth;

pub use config::{Mode, OptimizerChoice, TrainConfig};
pub use eval::{evaluate, ClassAccuracy, GroupAccuracies, MetricsReport};
pub use experiment::{mode_comparison, ComparisonRow, ComparisonSummary};
pub use model::Model;
pub use run::{train, EpochRecord, TrainOutcome, ValSummary};
pub use sampler::{class_balanced_epoch, instance_epoch};
pub use synth::{synth_longtail, SynthDataset, SynthSpec};
