//! Boosting loop, prediction and model persistence.

use std::fs;
use std::path::Path;

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use telemine_core::eval::average_precision;

use crate::binning::{check_finite, BinMapper};
use crate::config::BoostConfig;
use crate::error::{GbdtError, Result};
use crate::grow::{grow_tree, leaf_weight, GrowParams};
use crate::tree::{Node, Tree};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub positive: f64,
    pub negative: f64,
}

impl ClassWeights {
    /// `N / (2 N_pos)` and `N / (2 N_neg)` when balanced, otherwise 1 and 1.
    pub fn new(labels: &[u8], balanced: bool) -> Self {
        if !balanced {
            return Self { positive: 1.0, negative: 1.0 };
        }
        let n = labels.len() as f64;
        let pos = labels.iter().filter(|&&l| l == 1).count() as f64;
        Self { positive: n / (2.0 * pos), negative: n / (2.0 * (n - pos)) }
    }

    #[inline]
    pub fn of(&self, label: u8) -> f64 {
        if label == 1 {
            self.positive
        } else {
            self.negative
        }
    }
}

/// State after a boosting round; round 0 is the base score alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub trees: usize,
    /// Weighted mean logistic loss on the training rows.
    pub train_loss: f64,
    pub valid_ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub schema_version: u32,
    pub config: BoostConfig,
    pub feature_names: Vec<String>,
    pub bin_cuts: Vec<Vec<f64>>,
    pub class_weights: ClassWeights,
    /// Prior log-odds under the class weights.
    pub base_score: f64,
    /// Every grown tree; prediction uses the first `best_iteration`.
    pub trees: Vec<Tree>,
    pub best_iteration: usize,
    pub best_valid_ap: f64,
    /// Summed split gain per feature over the kept trees.
    pub feature_gain: Vec<f64>,
    pub history: Vec<RoundLog>,
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `log(1 + e^x)` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn weighted_loss(raw: &[f64], labels: &[u8], w: &ClassWeights) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (&f, &y) in raw.iter().zip(labels) {
        let wi = w.of(y);
        num += wi * (softplus(f) - f64::from(y) * f);
        den += wi;
    }
    num / den
}

fn check_labels(labels: &[u8], rows: usize, split: &'static str) -> Result<()> {
    if labels.len() != rows {
        return Err(GbdtError::LengthMismatch { what: "labels", got: labels.len(), expected: rows });
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.iter().filter(|&&l| l == 0).count();
    if positives + negatives != rows || positives == 0 || negatives == 0 {
        return Err(GbdtError::DegenerateLabels { split, positives, negatives });
    }
    Ok(())
}

fn ap(raw: &[f64], labels: &[u8]) -> f64 {
    average_precision(raw, labels).expect("labels checked to hold both classes")
}

fn subset(rng: &mut ChaCha8Rng, n: usize, fraction: f64) -> Vec<usize> {
    if fraction >= 1.0 {
        return (0..n).collect();
    }
    let k = ((n as f64 * fraction).round() as usize).clamp(1, n);
    let mut idx = sample(rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}

/// Fits a boosted ensemble with early stopping on validation average
/// precision.
///
/// Each tree's structure is grown on a row bag and feature subset; its leaf
/// values are then set from all training rows that reach each leaf.
pub fn fit(
    train_x: ArrayView2<'_, f64>,
    train_y: &[u8],
    valid_x: ArrayView2<'_, f64>,
    valid_y: &[u8],
    feature_names: &[String],
    cfg: &BoostConfig,
) -> Result<BoostedModel> {
    cfg.validate()?;
    let width = train_x.ncols();
    for got in [valid_x.ncols(), feature_names.len()] {
        if got != width {
            return Err(GbdtError::WidthMismatch { expected: width, got });
        }
    }
    check_labels(train_y, train_x.nrows(), "training")?;
    check_labels(valid_y, valid_x.nrows(), "validation")?;
    check_finite(&valid_x)?;

    let mapper = BinMapper::fit(train_x, cfg.histogram_bins)?;
    let binned = mapper.transform(train_x)?;
    let n = train_x.nrows();
    let weights = ClassWeights::new(train_y, cfg.class_balanced);
    let (mut wp, mut wn) = (0.0, 0.0);
    for &y in train_y {
        if y == 1 {
            wp += weights.positive;
        } else {
            wn += weights.negative;
        }
    }
    let base_score = (wp / wn).ln();

    let mut train_raw = vec![base_score; n];
    let mut valid_raw = vec![base_score; valid_x.nrows()];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let params =
        GrowParams { max_leaves: cfg.max_leaves, min_child_samples: cfg.min_child_samples, l1: cfg.l1, l2: cfg.l2 };

    let mut trees: Vec<Tree> = Vec::new();
    let mut history = vec![RoundLog {
        trees: 0,
        train_loss: weighted_loss(&train_raw, train_y, &weights),
        valid_ap: ap(&valid_raw, valid_y),
    }];
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut since_best = 0usize;
    let deterministic_rounds = cfg.subsample >= 1.0 && cfg.colsample >= 1.0;

    for _ in 0..cfg.max_trees {
        grad.par_iter_mut().zip(hess.par_iter_mut()).enumerate().for_each(|(i, (g, h))| {
            let w = weights.of(train_y[i]);
            let p = sigmoid(train_raw[i]);
            *g = w * (p - f64::from(train_y[i]));
            *h = w * p * (1.0 - p);
        });
        let rows: Vec<u32> = subset(&mut rng, n, cfg.subsample).into_iter().map(|r| r as u32).collect();
        let features = subset(&mut rng, width, cfg.colsample);
        let Some(mut tree) = grow_tree(&binned, &mapper, &grad, &hess, rows, &features, params) else {
            if deterministic_rounds {
                break;
            }
            since_best += 1;
            if since_best >= cfg.early_stopping_patience {
                break;
            }
            continue;
        };

        let leaf_of: Vec<usize> = (0..n).into_par_iter().map(|i| tree.route_binned(&binned, i)).collect();
        let mut sums = vec![(0.0f64, 0.0f64); tree.nodes.len()];
        for (i, &leaf) in leaf_of.iter().enumerate() {
            sums[leaf].0 += grad[i];
            sums[leaf].1 += hess[i];
        }
        for (node, &(g, h)) in sums.iter().enumerate() {
            if matches!(tree.nodes[node], Node::Leaf { .. }) {
                tree.set_leaf_value(node, cfg.learning_rate * leaf_weight(g, h, cfg.l1, cfg.l2));
            }
        }
        train_raw.par_iter_mut().zip(leaf_of.par_iter()).for_each(|(f, &leaf)| {
            if let Node::Leaf { value, .. } = tree.nodes[leaf] {
                *f += value;
            }
        });
        valid_raw.par_iter_mut().enumerate().for_each(|(i, f)| *f += tree.predict_row(valid_x.row(i)));
        trees.push(tree);

        let valid_ap = ap(&valid_raw, valid_y);
        history.push(RoundLog {
            trees: trees.len(),
            train_loss: weighted_loss(&train_raw, train_y, &weights),
            valid_ap,
        });
        if valid_ap > best.1 {
            best = (trees.len(), valid_ap);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.early_stopping_patience {
                break;
            }
        }
    }

    let best_valid_ap = if best.0 == 0 { history[0].valid_ap } else { best.1 };
    let mut model = BoostedModel {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        feature_names: feature_names.to_vec(),
        bin_cuts: mapper.cuts,
        class_weights: weights,
        base_score,
        trees,
        best_iteration: best.0,
        best_valid_ap,
        feature_gain: Vec::new(),
        history,
    };
    model.feature_gain = model.gain_per_feature();
    Ok(model)
}

impl BoostedModel {
    pub fn kept_trees(&self) -> &[Tree] {
        &self.trees[..self.best_iteration]
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn gain_per_feature(&self) -> Vec<f64> {
        let mut gain = vec![0.0; self.n_features()];
        for tree in self.kept_trees() {
            for node in &tree.nodes {
                if let Node::Split { feature, gain: g, .. } = node {
                    gain[*feature] += g;
                }
            }
        }
        gain
    }

    /// Log-odds: base score plus the kept trees' leaf values.
    pub fn predict_raw(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features() {
            return Err(GbdtError::WidthMismatch { expected: self.n_features(), got: x.ncols() });
        }
        check_finite(&x)?;
        let trees = self.kept_trees();
        Ok((0..x.nrows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i);
                trees.iter().fold(self.base_score, |acc, t| acc + t.predict_row(row))
            })
            .collect())
    }

    /// Ranking scores in `[0, 1]`; not calibrated probabilities.
    pub fn predict_scores(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        Ok(self.predict_raw(x)?.into_iter().map(sigmoid).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: BoostedModel = serde_json::from_str(text)?;
        if model.schema_version != SCHEMA_VERSION {
            return Err(GbdtError::SchemaVersion(model.schema_version));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn balanced_weights_equalize_class_mass() {
        let labels = [1, 0, 0, 0, 0, 0, 0];
        let w = ClassWeights::new(&labels, true);
        let pos: f64 = labels.iter().filter(|&&l| l == 1).map(|&l| w.of(l)).sum();
        let neg: f64 = labels.iter().filter(|&&l| l == 0).map(|&l| w.of(l)).sum();
        assert!((pos - neg).abs() < 1e-12);
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_labels_are_rejected() {
        let x = Array2::zeros((4, 1));
        let err = fit(x.view(), &[0, 0, 0, 0], x.view(), &[0, 1, 0, 1], &names(1), &BoostConfig::default());
        assert!(matches!(err, Err(GbdtError::DegenerateLabels { split: "training", .. })));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let x = Array2::from_shape_fn((200, 2), |(i, f)| ((i * 7 + f * 13) % 29) as f64 / 7.0);
        let y: Vec<u8> = (0..200).map(|i| u8::from(x[[i, 0]] > 2.5)).collect();
        let cfg = BoostConfig { max_trees: 5, min_child_samples: 5, ..BoostConfig::default() };
        let m = fit(x.view(), &y, x.view(), &y, &names(2), &cfg).unwrap();
        let back = BoostedModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let a = m.predict_raw(x.view()).unwrap();
        let b = back.predict_raw(x.view()).unwrap();
        assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}
