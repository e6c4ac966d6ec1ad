//! Class-imbalance mitigation for slow network transfer prediction.
//!
//! The crate covers the whole benchmark pipeline: synthetic and CSV flow
//! data with stratified sampling schemes, SMOTE-family oversamplers and
//! ADASYN, GAN and mode-normalized conditional GAN samplers, tree-based
//! classifiers, evaluation metrics (F1, cross-validation, two-sample KS,
//! log histograms, t-SNE), and the experiment harness that ties them together.

pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod generative;
pub mod harness;
pub mod matrix;
pub mod models;
pub mod neighbors;
pub mod oversample;
pub mod seeding;

pub use dataset::{partition, ClassPartition, Dataset, FlowProfile, SamplingScheme};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use oversample::{AugmentedSet, OversampleConfig};
