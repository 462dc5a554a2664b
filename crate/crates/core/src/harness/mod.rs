//! Experiment harness: configuration, datasets, deployment streams,
//! the train / adapt / ablate / report commands and their output files.

pub mod config;
pub mod data;
pub mod experiments;
pub mod metrics;
pub mod stream;

pub use config::{DatasetSource, ExperimentConfig};
pub use data::{load_corpus, load_noise, Corpus};
pub use experiments::{
    ablate_state, ablation_spread, cell_dir_name, checkpoint_dir, cmd_ablate, cmd_adapt_eval, cmd_report, cmd_resume,
    cmd_train, evaluate_cells, float_accuracy, front_end, load_checkpoint, quantized_accuracy, raw_pairs, run_cell,
    train_state, AblationRow, AdaptOutcome, CellContext, Sweep, TrainOutcome,
};
pub use metrics::{CellSummary, Grid, MetricsRow};
pub use stream::{DeploymentStream, StreamSpec};
