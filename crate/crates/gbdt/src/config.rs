use serde::{Deserialize, Serialize};

use crate::error::{GbdtError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingMetric {
    AveragePrecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostConfig {
    pub max_trees: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    /// Minimum number of (bagged) rows in every node.
    pub min_child_samples: usize,
    /// Fraction of rows drawn without replacement for each tree.
    pub subsample: f64,
    /// Fraction of features drawn without replacement for each tree.
    pub colsample: f64,
    pub l1: f64,
    pub l2: f64,
    pub class_balanced: bool,
    pub early_stopping_patience: usize,
    pub early_stopping_metric: StoppingMetric,
    pub histogram_bins: usize,
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            max_trees: 1600,
            learning_rate: 0.025,
            max_leaves: 64,
            min_child_samples: 80,
            subsample: 0.9,
            colsample: 0.75,
            l1: 0.2,
            l2: 8.0,
            class_balanced: true,
            early_stopping_patience: 80,
            early_stopping_metric: StoppingMetric::AveragePrecision,
            histogram_bins: 255,
            seed: 0,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GbdtError::InvalidConfig(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.max_leaves < 2 {
            return bad(format!("max_leaves must be at least 2, got {}", self.max_leaves));
        }
        if self.min_child_samples == 0 {
            return bad("min_child_samples must be at least 1".into());
        }
        for (name, v) in [("subsample", self.subsample), ("colsample", self.colsample)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        if !(self.l1 >= 0.0 && self.l2 >= 0.0) {
            return bad(format!("l1 and l2 must be non-negative, got {} and {}", self.l1, self.l2));
        }
        if self.early_stopping_patience == 0 {
            return bad("early_stopping_patience must be at least 1".into());
        }
        if !(2..=255).contains(&self.histogram_bins) {
            return bad(format!("histogram_bins must lie in [2, 255], got {}", self.histogram_bins));
        }
        Ok(())
    }
}
