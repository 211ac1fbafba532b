//! Histogram gradient-boosted decision trees for imbalanced binary
//! detection: leaf-wise growth, class-balanced logistic loss, row and column
//! subsampling, L1/L2-regularized leaves and early stopping on validation
//! average precision.

pub mod binning;
pub mod booster;
pub mod config;
pub mod error;
mod grow;
pub mod importance;
pub mod tree;

pub use booster::{fit, sigmoid, BoostedModel, ClassWeights, RoundLog, SCHEMA_VERSION};
pub use config::{BoostConfig, StoppingMetric};
pub use error::{GbdtError, Result};
pub use importance::{average_shares, feature_gain_shares};
pub use tree::{Node, Tree};
