//! Continual learning at the edge: confidence-then-distance selection of
//! effective samples, rehearsal with feature-space noise augmentation, and
//! the retrain / requantise / refresh-prototypes update cycle.

mod augment;
mod buffers;
mod deploy;
mod filter;
mod snapshot;

pub use augment::{augment_pair, augment_rehearsal, noise_logmels};
pub use buffers::{EffectiveBuffer, RehearsalBuffer, DEFAULT_EFFECTIVE_CAPACITY};
pub use deploy::{
    continual_update, quantized_latents, run_deployment, run_intervals, ClState, IntervalMetrics, UpdateReport,
    HISTOGRAM_BINS,
};
pub use filter::{decide, filter_effective, DistanceCounter, EffectiveSample, Rejection, Verdict};
pub use snapshot::{load_state, save_state, SNAPSHOT_VERSION};

use crate::error::{KwsError, Result};
use crate::nn::TrainConfig;
use crate::prototypes::DEFAULT_N_SIGMA;
use crate::quant::DEFAULT_CONFIDENCE_Q;
use crate::spectral::DEFAULT_ALPHA;

#[derive(Debug, Clone, PartialEq)]
pub struct ClConfig {
    /// Minimum `confidence_q` (0..=255) for a prediction to count.
    pub confidence_threshold_q: u8,
    pub n_sigma: f64,
    /// Inputs between two updates.
    pub interval: usize,
    pub rehearsal_per_class: usize,
    pub effective_capacity: usize,
    pub alpha: f64,
    /// Retraining switch; when off the deployed model never changes.
    pub retrain: bool,
    /// Optimiser settings for each update; `epochs` is the per-update count.
    pub train: TrainConfig,
}

impl Default for ClConfig {
    fn default() -> Self {
        ClConfig {
            confidence_threshold_q: DEFAULT_CONFIDENCE_Q,
            n_sigma: DEFAULT_N_SIGMA,
            interval: 1024,
            rehearsal_per_class: 64,
            effective_capacity: DEFAULT_EFFECTIVE_CAPACITY,
            alpha: DEFAULT_ALPHA,
            retrain: true,
            train: TrainConfig::default(),
        }
    }
}

impl ClConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(KwsError::Usage(msg));
        if self.interval == 0 || self.rehearsal_per_class == 0 || self.effective_capacity == 0 {
            return bad("interval, rehearsal size and effective capacity must be positive".into());
        }
        if self.train.epochs == 0 || self.train.batch_size == 0 {
            return bad("epochs and batch size must be positive".into());
        }
        if !(self.n_sigma >= 0.0 && self.n_sigma.is_finite()) {
            return bad(format!("n_sigma {} must be a non-negative number", self.n_sigma));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha {} outside [0, 1]", self.alpha));
        }
        if !(self.train.learning_rate >= 0.0 && self.train.learning_rate.is_finite()) {
            return bad(format!(
                "learning rate {} must be non-negative",
                self.train.learning_rate
            ));
        }
        Ok(())
    }
}
