//! Core library of the idsbench threat-detection benchmark: dataset
//! ingestion, class balancing and encoding, four from-scratch binary
//! classifiers, stacked super learners, and ROC/AUC evaluation.

pub mod dataset;
pub mod learners;
pub mod matrix;
pub mod metrics;
pub mod plot;
pub mod preprocess;
pub mod rng;
pub mod stacking;

pub use matrix::Matrix;
