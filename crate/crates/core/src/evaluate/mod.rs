//! Metrics and distribution diagnostics: F1 with stratified
//! cross-validation, two-sample KS scores, log histograms and t-SNE.

mod cv;
mod histogram;
mod ks;
mod metrics;
mod tsne;

pub use cv::{cross_val_f1, stratified_kfold, CvResult};
pub use histogram::{log_histogram, write_histogram_csv, LogHistogram};
pub use ks::{ks_report, ks_two_sample, write_ks_csv, KsResult, KsRow};
pub use metrics::{f1, ConfusionCounts};
pub use tsne::{
    conditional_affinities, joint_affinities, squared_distances, tsne, write_embedding_csv, EmbeddingResult, KlRecord,
    TsneConfig, ENTROPY_TOL, MAX_POINTS,
};
