//! Closed-form PCA generators and the adaptive-step gradient-descent trainer.

mod gd;
mod pca;

pub use gd::{gd_train, gd_train_from, AcceptRule, GdOptions, StepMode, StopReason, TrainResult};
pub use pca::{pca_fit, pca_generator, PcaBasis, PcaFit};
