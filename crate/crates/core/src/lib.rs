//! Linear generators for Gaussian data: closed-form PCA and gradient-descent
//! training under supervised and pseudo-supervised losses, evaluated by the
//! 2-Wasserstein distance to the data distribution.
//!
//! Numerical code is generic over [`scalar::Real`]; the `*64` aliases below
//! fix the scalar to `f64`, which is what the experiment harness uses.

// Negated float comparisons reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod datagen;
pub mod error;
pub mod experiments;
pub mod gaussian;
pub mod linalg;
pub mod losses;
pub mod scalar;
pub mod trainers;

pub use error::{Error, Result};

pub type Matrix64 = linalg::Matrix<f64>;
pub type Gaussian64 = gaussian::Gaussian<f64>;
pub type DataModel64 = datagen::DataModel<f64>;
pub type Dataset64 = datagen::Dataset<f64>;
pub type Partition64 = datagen::Partition<f64>;
pub type Objective64 = losses::Objective<f64>;
pub type PcaFit64 = trainers::PcaFit<f64>;
pub type TrainResult64 = trainers::TrainResult<f64>;
