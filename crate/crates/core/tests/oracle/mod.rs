//! Direct-from-definition reference implementations. Deliberately naive:
//! every quantity is recomputed from scratch with plain loops.

#![allow(dead_code)]

use std::collections::BTreeMap;

/// k-th smallest value (0-based) found by counting, without sorting.
fn order_statistic(w: &[f64], k: usize) -> f64 {
    for &candidate in w {
        let below = w.iter().filter(|&&v| v < candidate).count();
        let equal = w.iter().filter(|&&v| v == candidate).count();
        if below <= k && k < below + equal {
            return candidate;
        }
    }
    unreachable!("order statistic {k} of {} values", w.len())
}

fn quantile(w: &[f64], p: f64) -> f64 {
    let h = (w.len() - 1) as f64 * p;
    let lo = h.floor();
    let frac = h - lo;
    let a = order_statistic(w, lo as usize);
    if frac == 0.0 {
        return a;
    }
    let b = order_statistic(w, lo as usize + 1);
    a + frac * (b - a)
}

pub fn descriptors(w: &[f64]) -> [f64; 18] {
    let n = w.len();
    let mut mean = 0.0;
    for &v in w {
        mean += v;
    }
    mean /= n as f64;
    let mut var = 0.0;
    for &v in w {
        var += (v - mean).powi(2);
    }
    let centered_ss = var;
    var /= n as f64;

    let mut min = w[0];
    let mut max = w[0];
    for &v in w {
        if v < min {
            min = v;
        }
        if v > max {
            max = v;
        }
    }

    let deltas: Vec<f64> = (0..n - 1).map(|t| w[t + 1] - w[t]).collect();
    let m = deltas.len() as f64;
    let mut d_mean = 0.0;
    let mut abs_mean = 0.0;
    let mut abs_max = 0.0f64;
    for &d in &deltas {
        d_mean += d;
        abs_mean += d.abs();
        if d.abs() > abs_max {
            abs_max = d.abs();
        }
    }
    d_mean /= m;
    abs_mean /= m;
    let mut d_var = 0.0;
    for &d in &deltas {
        d_var += (d - d_mean).powi(2);
    }
    d_var /= m;

    let mut num = 0.0;
    for t in 0..n - 1 {
        num += (w[t] - mean) * (w[t + 1] - mean);
    }
    let den = if centered_ss > 1e-12 { centered_ss } else { 1e-12 };

    [
        mean,
        var.sqrt(),
        min,
        max,
        max - min,
        quantile(w, 0.10),
        quantile(w, 0.25),
        quantile(w, 0.50),
        quantile(w, 0.75),
        quantile(w, 0.90),
        w[0],
        w[n - 1],
        w[n - 1] - w[0],
        d_mean,
        d_var.sqrt(),
        abs_mean,
        abs_max,
        num / den,
    ]
}

/// Pairwise Mann-Whitney count.
pub fn auroc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

fn distinct_descending(scores: &[f64]) -> Vec<f64> {
    let mut d: Vec<f64> = Vec::new();
    for &s in scores {
        if !d.contains(&s) {
            d.push(s);
        }
    }
    d.sort_by(|a, b| b.partial_cmp(a).unwrap());
    d
}

fn counts_at(scores: &[f64], labels: &[u8], threshold: f64) -> (usize, usize, usize) {
    let mut tp = 0;
    let mut fp = 0;
    let mut fneg = 0;
    for i in 0..scores.len() {
        let predicted = scores[i] >= threshold;
        match (predicted, labels[i]) {
            (true, 1) => tp += 1,
            (true, _) => fp += 1,
            (false, 1) => fneg += 1,
            _ => {}
        }
    }
    (tp, fp, fneg)
}

/// Step-wise AP with each distinct score as one threshold.
pub fn average_precision(scores: &[f64], labels: &[u8]) -> f64 {
    let positives = labels.iter().filter(|&&l| l == 1).count() as f64;
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for t in distinct_descending(scores) {
        let (tp, fp, _) = counts_at(scores, labels, t);
        let recall = tp as f64 / positives;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

/// F1 at a threshold as an exact fraction `2TP / (2TP + FP + FN)`.
fn f1_fraction(scores: &[f64], labels: &[u8], threshold: f64) -> (u64, u64) {
    let (tp, fp, fneg) = counts_at(scores, labels, threshold);
    (2 * tp as u64, (2 * tp + fp + fneg) as u64)
}

/// Exhaustive sweep over midpoints and the two sentinels; returns the
/// maximum F1 and the smallest threshold reaching it. F1 values are compared
/// as exact fractions so equal F1 at different thresholds is a true tie.
pub fn best_f1(scores: &[f64], labels: &[u8]) -> (f64, f64) {
    let mut asc = distinct_descending(scores);
    asc.reverse();
    let mut candidates = vec![f64::NEG_INFINITY];
    for k in 0..asc.len().saturating_sub(1) {
        candidates.push((asc[k] + asc[k + 1]) / 2.0);
    }
    candidates.push(f64::INFINITY);
    let mut best: Option<((u64, u64), f64)> = None;
    for &t in &candidates {
        let (num, den) = f1_fraction(scores, labels, t);
        best = match best {
            Some(((bn, bd), bt)) => {
                let (lhs, rhs) = (num * bd, bn * den);
                if lhs > rhs || (lhs == rhs && t < bt) {
                    Some(((num, den), t))
                } else {
                    Some(((bn, bd), bt))
                }
            }
            None => Some(((num, den), t)),
        };
    }
    let ((num, den), t) = best.expect("at least two candidates");
    (num as f64 / den as f64, t)
}

/// Runs of flagged ordinals per log, as inclusive `(log, first, last)`.
pub fn runs(logs: &[String], ordinals: &[usize], flagged: &[bool]) -> Vec<(String, usize, usize)> {
    let mut per_log: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for i in 0..logs.len() {
        if flagged[i] {
            per_log.entry(&logs[i]).or_default().push(ordinals[i]);
        }
    }
    let mut out = Vec::new();
    for (log, mut ords) in per_log {
        ords.sort_unstable();
        ords.dedup();
        let mut start = ords[0];
        let mut prev = ords[0];
        for &o in &ords[1..] {
            if o != prev + 1 {
                out.push((log.to_string(), start, prev));
                start = o;
            }
            prev = o;
        }
        out.push((log.to_string(), start, prev));
    }
    out
}

/// Event F1 with the degenerate case reported as 1.
pub fn event_f1(scores: &[f64], labels: &[u8], logs: &[String], ordinals: &[usize], threshold: f64) -> f64 {
    let truth = runs(logs, ordinals, &labels.iter().map(|&l| l == 1).collect::<Vec<_>>());
    let pred = runs(logs, ordinals, &scores.iter().map(|&s| s >= threshold).collect::<Vec<_>>());
    if truth.is_empty() && pred.is_empty() {
        return 1.0;
    }
    let overlap = |a: &(String, usize, usize), b: &(String, usize, usize)| {
        a.0 == b.0 && (a.1..=a.2).any(|o| (b.1..=b.2).contains(&o))
    };
    let hit_pred = pred.iter().filter(|p| truth.iter().any(|t| overlap(p, t))).count();
    let hit_truth = truth.iter().filter(|t| pred.iter().any(|p| overlap(p, t))).count();
    let p = if pred.is_empty() { 0.0 } else { hit_pred as f64 / pred.len() as f64 };
    let r = if truth.is_empty() { 0.0 } else { hit_truth as f64 / truth.len() as f64 };
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}
