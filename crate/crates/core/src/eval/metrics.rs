//! Threshold-free and threshold-swept window metrics.
//!
//! * AUROC is the Mann-Whitney statistic with ties counted one half.
//! * AUPRC is step-wise average precision, `sum_k (R_k - R_{k-1}) P_k` over
//!   descending score thresholds with tied scores processed as one block.
//!   The boosting early-stopping rule uses this same function.
//! * Best F1 sweeps thresholds at midpoints between consecutive distinct
//!   scores plus two infinite sentinels; a window is predicted positive iff
//!   `score >= threshold`.

use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

fn class_counts(labels: &[u8]) -> (usize, usize) {
    let pos = labels.iter().filter(|&&l| l == 1).count();
    (pos, labels.len() - pos)
}

fn require_both_classes(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch { what: "scores", got: scores.len(), expected: labels.len() });
    }
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass { positives: pos, negatives: neg });
    }
    Ok((pos, neg))
}

/// Indices sorted by descending score; ties keep index order.
fn descending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// Visits tie blocks in descending score order, yielding the block score and
/// the cumulative (true positive, false positive) counts after the block.
fn for_each_block(scores: &[f64], labels: &[u8], mut f: impl FnMut(f64, usize, usize)) {
    let order = descending(scores);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]].total_cmp(&s) == Ordering::Equal {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        f(s, tp, fp);
    }
}

pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = require_both_classes(scores, labels)?;
    // Walk blocks from the top: each positive in a block beats every negative
    // ranked below and ties half of the negatives in its own block.
    let mut wins = 0.0;
    let mut neg_seen = 0usize;
    let mut prev = (0usize, 0usize);
    for_each_block(scores, labels, |_, tp, fp| {
        let (bp, bn) = (tp - prev.0, fp - prev.1);
        let below = neg - neg_seen - bn;
        wins += bp as f64 * (below as f64 + 0.5 * bn as f64);
        neg_seen += bn;
        prev = (tp, fp);
    });
    Ok(wins / (pos as f64 * neg as f64))
}

pub fn average_precision(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, _) = require_both_classes(scores, labels)?;
    let mut ap = 0.0;
    let mut prev_tp = 0usize;
    for_each_block(scores, labels, |_, tp, fp| {
        if tp > prev_tp {
            let precision = tp as f64 / (tp + fp) as f64;
            ap += (tp - prev_tp) as f64 / pos as f64 * precision;
        }
        prev_tp = tp;
    });
    Ok(ap)
}

/// Alias for [`average_precision`]; AUPRC in reports is always step-wise AP.
pub fn auprc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    average_precision(scores, labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

/// One point per distinct score, from the highest threshold down.
pub fn pr_curve(scores: &[f64], labels: &[u8]) -> Result<Vec<PrPoint>> {
    let (pos, _) = require_both_classes(scores, labels)?;
    let mut out = Vec::new();
    for_each_block(scores, labels, |s, tp, fp| {
        out.push(PrPoint { threshold: s, recall: tp as f64 / pos as f64, precision: tp as f64 / (tp + fp) as f64 });
    });
    Ok(out)
}

/// A decision threshold that may be one of the infinite sentinels. Infinite
/// values serialize as the strings `"inf"` / `"-inf"` so reports stay valid
/// JSON.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold(pub f64);

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            v if v == f64::INFINITY => s.serialize_str("inf"),
            v if v == f64::NEG_INFINITY => s.serialize_str("-inf"),
            v => s.serialize_f64(v),
        }
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Threshold;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or \"inf\" / \"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Threshold, E> {
                Ok(Threshold(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Threshold, E> {
                Ok(Threshold(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Threshold, E> {
                Ok(Threshold(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Threshold, E> {
                match v {
                    "inf" => Ok(Threshold(f64::INFINITY)),
                    "-inf" => Ok(Threshold(f64::NEG_INFINITY)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestF1 {
    pub f1: f64,
    pub threshold: Threshold,
}

fn f1(tp: usize, fp: usize, pos: usize) -> f64 {
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + (pos - tp)) as f64
    }
}

/// Maximum point-wise F1 and the smallest threshold achieving it.
pub fn best_f1(scores: &[f64], labels: &[u8]) -> Result<BestF1> {
    let (pos, _) = require_both_classes(scores, labels)?;
    // Candidate thresholds in ascending order: -inf, midpoints, +inf. Lowering
    // the threshold past a tie block adds the whole block, so evaluate from
    // the top and remember each candidate's F1.
    let mut blocks: Vec<(f64, usize, usize)> = Vec::new();
    for_each_block(scores, labels, |s, tp, fp| blocks.push((s, tp, fp)));
    // candidates[j] for j in 0..blocks.len(): threshold admitting blocks 0..=j
    let mut candidates: Vec<(f64, f64)> = Vec::with_capacity(blocks.len() + 1);
    candidates.push((f64::INFINITY, 0.0));
    for j in 0..blocks.len() {
        let (s, tp, fp) = blocks[j];
        let threshold = if j + 1 == blocks.len() {
            f64::NEG_INFINITY
        } else {
            let lower = blocks[j + 1].0;
            let mid = lower + (s - lower) / 2.0;
            // adjacent floats: fall back to the block score itself
            if mid <= lower || mid > s {
                s
            } else {
                mid
            }
        };
        candidates.push((threshold, f1(tp, fp, pos)));
    }
    // ascending thresholds = reverse order; first maximum is the smallest.
    let mut best = BestF1 { f1: -1.0, threshold: Threshold(f64::INFINITY) };
    for &(t, f) in candidates.iter().rev() {
        if f > best.f1 {
            best = BestF1 { f1: f, threshold: Threshold(t) };
        }
    }
    Ok(best)
}

/// Predicted-positive mask for a threshold.
pub fn predict_mask(scores: &[f64], threshold: f64) -> Vec<bool> {
    scores.iter().map(|&s| s >= threshold).collect()
}

/// Rescales scores to `[0, 1]`; constant inputs map to all zeros.
pub fn min_max_normalize(scores: &[f64]) -> Vec<f64> {
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; scores.len()];
    }
    scores.iter().map(|s| (s - lo) / (hi - lo)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_ranking() {
        assert_eq!(auroc(&[0.9, 0.1], &[1, 0]).unwrap(), 1.0);
        assert_eq!(average_precision(&[0.9, 0.1], &[1, 0]).unwrap(), 1.0);
        let b = best_f1(&[0.9, 0.1], &[1, 0]).unwrap();
        assert_eq!(b.f1, 1.0);
        assert_eq!(b.threshold.0, 0.5);
    }

    #[test]
    fn inverted_ranking() {
        assert_eq!(auroc(&[0.1, 0.9], &[1, 0]).unwrap(), 0.0);
        assert_eq!(average_precision(&[0.1, 0.9], &[1, 0]).unwrap(), 0.5);
    }

    #[test]
    fn ties_count_half() {
        assert_eq!(auroc(&[0.5, 0.5], &[1, 0]).unwrap(), 0.5);
        // one block containing both: P = 0.5 at R = 1
        assert_eq!(average_precision(&[0.5, 0.5], &[1, 0]).unwrap(), 0.5);
    }

    #[test]
    fn identical_scores_best_f1_is_all_positive() {
        let labels = [1, 0, 0, 1, 0, 0, 0, 0, 0, 0];
        let p: f64 = 0.2;
        let b = best_f1(&[0.3; 10], &labels).unwrap();
        assert!((b.f1 - 2.0 * p / (1.0 + p)).abs() < 1e-15);
        assert_eq!(b.threshold.0, f64::NEG_INFINITY);
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(matches!(auroc(&[0.1, 0.2], &[0, 0]), Err(Error::SingleClass { .. })));
        assert!(matches!(best_f1(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass { .. })));
    }

    #[test]
    fn threshold_json() {
        let s = serde_json::to_string(&[Threshold(f64::NEG_INFINITY), Threshold(0.25)]).unwrap();
        assert_eq!(s, r#"["-inf",0.25]"#);
        let back: Vec<Threshold> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[0].0, f64::NEG_INFINITY);
    }

    #[test]
    fn min_max() {
        assert_eq!(min_max_normalize(&[2.0, 4.0, 3.0]), vec![0.0, 1.0, 0.5]);
        assert_eq!(min_max_normalize(&[1.0, 1.0]), vec![0.0, 0.0]);
    }
}
