//! Elastic-net logistic regression trained by plain SGD.
//!
//! Inputs are standardized with statistics of the training rows. Each epoch
//! visits the training rows in a seeded random order; the step size follows
//! inverse scaling `eta0 / t^power_t` over the global step count `t`. Every
//! step applies the class-weighted logistic gradient plus the L2 part of the
//! penalty, then soft-thresholds the weights by the L1 part. The bias is not
//! penalized. The returned model is the epoch with the best validation
//! average precision.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use telemine_core::eval::average_precision;

use crate::error::{check_finite, check_width, BaselineError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgdConfig {
    pub epochs: usize,
    /// Overall penalty strength.
    pub alpha: f64,
    /// Share of the penalty that is L1.
    pub l1_ratio: f64,
    pub eta0: f64,
    pub power_t: f64,
    pub class_balanced: bool,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self { epochs: 30, alpha: 1e-4, l1_ratio: 0.15, eta0: 0.01, power_t: 0.25, class_balanced: true, seed: 0 }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && (0.0..=1.0).contains(&self.l1_ratio)) {
            return Err(BaselineError::InvalidConfig(format!(
                "alpha must be >= 0 and l1_ratio in [0, 1], got {} and {}",
                self.alpha, self.l1_ratio
            )));
        }
        if !(self.eta0 > 0.0 && self.power_t >= 0.0) {
            return Err(BaselineError::InvalidConfig(format!(
                "eta0 must be > 0 and power_t >= 0, got {} and {}",
                self.eta0, self.power_t
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSgd {
    pub config: SgdConfig,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// 0 when no epoch ran.
    pub best_epoch: usize,
    pub valid_ap_per_epoch: Vec<f64>,
}

/// One L2 shrink plus L1 soft-threshold step on `w`.
pub fn apply_penalty(w: &mut [f64], eta: f64, alpha: f64, l1_ratio: f64) {
    let shrink = 1.0 - eta * alpha * (1.0 - l1_ratio);
    let cut = eta * alpha * l1_ratio;
    for wi in w.iter_mut() {
        let v = *wi * shrink;
        *wi = if v > cut {
            v - cut
        } else if v < -cut {
            v + cut
        } else {
            0.0
        };
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn label_counts(y: &[u8], rows: usize, split: &'static str) -> Result<(usize, usize)> {
    if y.len() != rows {
        return Err(BaselineError::LengthMismatch { what: "labels", got: y.len(), expected: rows });
    }
    let positives = y.iter().filter(|&&l| l == 1).count();
    let negatives = y.iter().filter(|&&l| l == 0).count();
    if positives == 0 || negatives == 0 || positives + negatives != rows {
        return Err(BaselineError::DegenerateLabels { split, positives, negatives });
    }
    Ok((positives, negatives))
}

impl LinearSgd {
    pub fn fit(
        train_x: ArrayView2<'_, f64>,
        train_y: &[u8],
        valid_x: ArrayView2<'_, f64>,
        valid_y: &[u8],
        cfg: &SgdConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let (n, d) = train_x.dim();
        check_width(d, valid_x.ncols())?;
        check_finite(&train_x)?;
        check_finite(&valid_x)?;
        let (pos, neg) = label_counts(train_y, n, "training")?;
        label_counts(valid_y, valid_x.nrows(), "validation")?;

        let mut mean = vec![0.0; d];
        let mut scale = vec![0.0; d];
        for j in 0..d {
            let col = train_x.column(j);
            let m = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
            mean[j] = m;
            scale[j] = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        }
        let mut model = Self {
            config: cfg.clone(),
            mean,
            scale,
            weights: vec![0.0; d],
            bias: 0.0,
            best_epoch: 0,
            valid_ap_per_epoch: Vec::new(),
        };
        let xs = model.standardize(train_x);
        let (w_pos, w_neg) = if cfg.class_balanced {
            (n as f64 / (2.0 * pos as f64), n as f64 / (2.0 * neg as f64))
        } else {
            (1.0, 1.0)
        };

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut order: Vec<usize> = (0..n).collect();
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut t = 0u64;
        let mut best_ap = f64::NEG_INFINITY;
        for epoch in 1..=cfg.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = cfg.eta0 / (t as f64).powf(cfg.power_t);
                let row = &xs[i * d..(i + 1) * d];
                let z: f64 = b + row.iter().zip(&w).map(|(x, wi)| x * wi).sum::<f64>();
                let y = f64::from(train_y[i]);
                let g = (sigmoid(z) - y) * if train_y[i] == 1 { w_pos } else { w_neg };
                for (wi, x) in w.iter_mut().zip(row) {
                    *wi -= eta * g * x;
                }
                apply_penalty(&mut w, eta, cfg.alpha, cfg.l1_ratio);
                b -= eta * g;
            }
            let candidate = Self { weights: w.clone(), bias: b, ..model.clone() };
            let ap =
                average_precision(&candidate.decision(valid_x)?, valid_y).expect("validation labels hold both classes");
            model.valid_ap_per_epoch.push(ap);
            if ap > best_ap {
                best_ap = ap;
                model.weights = w.clone();
                model.bias = b;
                model.best_epoch = epoch;
            }
        }
        if model.weights.iter().any(|v| !v.is_finite()) || !model.bias.is_finite() {
            return Err(BaselineError::DegenerateData("SGD diverged to non-finite weights".into()));
        }
        Ok(model)
    }

    /// Row-major standardized copy.
    fn standardize(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len());
        for row in x.rows() {
            for ((v, m), s) in row.iter().zip(&self.mean).zip(&self.scale) {
                out.push((v - m) / s);
            }
        }
        out
    }

    /// Linear decision values `w . x + b` on standardized inputs.
    pub fn decision(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        check_width(self.weights.len(), x.ncols())?;
        check_finite(&x)?;
        let d = self.weights.len();
        let xs = self.standardize(x);
        Ok((0..x.nrows())
            .map(|i| self.bias + xs[i * d..(i + 1) * d].iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>())
            .collect())
    }

    pub fn score(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        Ok(self.decision(x)?.into_iter().map(sigmoid).collect())
    }
}
