//! Keyword spotting with on-device denoising and continual learning:
//! wavelet and spectral denoisers, MFCC/log-Mel features, a dual-path tiny
//! CNN with INT8 inference, class prototypes for sample filtering, and a
//! rehearsal-based update loop with its experiment harness.

pub mod audio;
pub mod cl;
pub mod class;
pub mod codec;
pub mod error;
pub mod features;
pub mod harness;
pub mod nn;
pub mod pipeline;
pub mod prototypes;
pub mod quant;
pub mod spectral;
pub mod wavelet;

pub use class::Class;
pub use error::{KwsError, Result};
