//! Comparator detectors sharing the window feature pipeline: a PCA
//! reconstruction-error scorer and an elastic-net logistic model fit by SGD.

pub mod error;
pub mod pca;
pub mod sgd;

pub use error::{BaselineError, Result};
pub use pca::{PcaDetector, DEFAULT_VARIANCE_TARGET};
pub use sgd::{apply_penalty, LinearSgd, SgdConfig};
