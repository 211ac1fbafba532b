//! Event-level scoring.
//!
//! An event is a maximal run of consecutive window ordinals within one log
//! whose windows are all flagged (by the truth labels or by the thresholded
//! scores). Runs never cross logs. A predicted event matches when it overlaps
//! at least one truth event; matching is many-to-many, so each predicted and
//! each truth event is counted once regardless of how many partners it has.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Window position: the owning log and the window's ordinal inside that log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WindowPos<'a> {
    pub log: &'a str,
    pub ordinal: usize,
}

/// Inclusive ordinal run inside one log; `rows` holds the indices of the input
/// windows forming the run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub log: String,
    pub first: usize,
    pub last: usize,
    pub rows: Vec<usize>,
}

impl Event {
    pub fn overlaps(&self, other: &Event) -> bool {
        self.log == other.log && self.first <= other.last && other.first <= self.last
    }
}

/// Maximal runs of flagged windows, grouped per log in first-appearance order.
pub fn extract_events(index: &[WindowPos<'_>], flagged: &[bool]) -> Vec<Event> {
    let mut order: Vec<usize> = (0..index.len()).collect();
    let mut first_seen: Vec<&str> = Vec::new();
    for p in index {
        if !first_seen.contains(&p.log) {
            first_seen.push(p.log);
        }
    }
    let log_rank = |log: &str| first_seen.iter().position(|l| *l == log).unwrap_or(usize::MAX);
    order.sort_by_key(|&i| (log_rank(index[i].log), index[i].ordinal, i));

    let mut events: Vec<Event> = Vec::new();
    let mut open = false;
    for (k, &i) in order.iter().enumerate() {
        if !flagged[i] {
            open = false;
            continue;
        }
        let continues = open
            && k > 0
            && index[order[k - 1]].log == index[i].log
            && index[i].ordinal <= index[order[k - 1]].ordinal + 1;
        if continues {
            let ev = events.last_mut().expect("open event");
            ev.last = index[i].ordinal;
            ev.rows.push(i);
        } else {
            events.push(Event {
                log: index[i].log.to_string(),
                first: index[i].ordinal,
                last: index[i].ordinal,
                rows: vec![i],
            });
        }
        open = true;
    }
    events
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventScore {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub truth_events: usize,
    pub predicted_events: usize,
    pub matched_predicted: usize,
    pub matched_truth: usize,
    /// No truth and no predicted events: F1 is reported as 1.0 but is vacuous.
    pub degenerate: bool,
}

impl EventScore {
    fn from_counts(truth: usize, predicted: usize, matched_pred: usize, matched_truth: usize) -> Self {
        if truth == 0 && predicted == 0 {
            return EventScore {
                f1: 1.0,
                precision: 1.0,
                recall: 1.0,
                truth_events: 0,
                predicted_events: 0,
                matched_predicted: 0,
                matched_truth: 0,
                degenerate: true,
            };
        }
        let precision = if predicted == 0 { 0.0 } else { matched_pred as f64 / predicted as f64 };
        let recall = if truth == 0 { 0.0 } else { matched_truth as f64 / truth as f64 };
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        EventScore {
            f1,
            precision,
            recall,
            truth_events: truth,
            predicted_events: predicted,
            matched_predicted: matched_pred,
            matched_truth,
            degenerate: false,
        }
    }
}

fn check_lengths(n: usize, scores: &[f64], labels: &[u8]) -> Result<()> {
    for (what, got) in [("scores", scores.len()), ("labels", labels.len())] {
        if got != n {
            return Err(Error::LengthMismatch { what, got, expected: n });
        }
    }
    Ok(())
}

/// Overlap-matched event F1 at `threshold` (predicted iff `score >= threshold`).
pub fn event_f1(scores: &[f64], labels: &[u8], index: &[WindowPos<'_>], threshold: f64) -> Result<EventScore> {
    check_lengths(index.len(), scores, labels)?;
    let truth = extract_events(index, &labels.iter().map(|&l| l == 1).collect::<Vec<_>>());
    let pred = extract_events(index, &scores.iter().map(|&s| s >= threshold).collect::<Vec<_>>());
    let matched_pred = pred.iter().filter(|p| truth.iter().any(|t| t.overlaps(p))).count();
    let matched_truth = truth.iter().filter(|t| pred.iter().any(|p| p.overlaps(t))).count();
    Ok(EventScore::from_counts(truth.len(), pred.len(), matched_pred, matched_truth))
}

/// Event F1 restricted to truth events of one family. A truth event's family
/// is the family of its first window. Predicted events that only overlap
/// truth events of other families are ignored; predicted events overlapping
/// no truth event still count as false alarms.
pub fn event_f1_for_family(
    scores: &[f64],
    labels: &[u8],
    families: &[Option<&str>],
    index: &[WindowPos<'_>],
    threshold: f64,
    family: &str,
) -> Result<EventScore> {
    check_lengths(index.len(), scores, labels)?;
    let truth = extract_events(index, &labels.iter().map(|&l| l == 1).collect::<Vec<_>>());
    let pred = extract_events(index, &scores.iter().map(|&s| s >= threshold).collect::<Vec<_>>());
    let is_family = |e: &Event| families[e.rows[0]] == Some(family);
    let (mine, others): (Vec<&Event>, Vec<&Event>) = truth.iter().partition(|e| is_family(e));
    let mut considered = 0;
    let mut matched_pred = 0;
    for p in &pred {
        let hits_mine = mine.iter().any(|t| t.overlaps(p));
        let hits_other = others.iter().any(|t| t.overlaps(p));
        if hits_mine {
            considered += 1;
            matched_pred += 1;
        } else if !hits_other {
            considered += 1;
        }
    }
    let matched_truth = mine.iter().filter(|t| pred.iter().any(|p| p.overlaps(t))).count();
    Ok(EventScore::from_counts(mine.len(), considered, matched_pred, matched_truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn positions(log: &'static str, n: usize) -> Vec<WindowPos<'static>> {
        (0..n).map(|ordinal| WindowPos { log, ordinal }).collect()
    }

    fn mask(n: usize, runs: &[(usize, usize)]) -> Vec<f64> {
        let mut m = vec![0.0; n];
        for &(a, b) in runs {
            for v in &mut m[a..=b] {
                *v = 1.0;
            }
        }
        m
    }

    fn labels(n: usize, runs: &[(usize, usize)]) -> Vec<u8> {
        mask(n, runs).iter().map(|&v| v as u8).collect()
    }

    #[test]
    fn single_overlap_is_perfect() {
        let idx = positions("a", 8);
        let s = event_f1(&mask(8, &[(2, 5)]), &labels(8, &[(0, 3)]), &idx, 0.5).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn half_recall() {
        let idx = positions("a", 14);
        let s = event_f1(&mask(14, &[(0, 0)]), &labels(14, &[(0, 1), (10, 12)]), &idx, 0.5).unwrap();
        assert_eq!(s.precision, 1.0);
        assert_eq!(s.recall, 0.5);
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn runs_split_at_log_boundary() {
        let mut idx = positions("a", 3);
        idx.extend(positions("b", 3));
        let flagged = vec![false, true, true, true, true, false];
        let ev = extract_events(&idx, &flagged);
        assert_eq!(ev.len(), 2);
        assert_eq!((ev[0].log.as_str(), ev[0].first, ev[0].last), ("a", 1, 2));
        assert_eq!((ev[1].log.as_str(), ev[1].first, ev[1].last), ("b", 0, 1));
    }

    #[test]
    fn ordinal_gap_splits_runs() {
        let idx: Vec<WindowPos> = [0, 1, 5, 6].iter().map(|&o| WindowPos { log: "a", ordinal: o }).collect();
        assert_eq!(extract_events(&idx, &[true; 4]).len(), 2);
    }

    #[test]
    fn degenerate_and_one_sided_cases() {
        let idx = positions("a", 4);
        let s = event_f1(&[0.0; 4], &[0; 4], &idx, 0.5).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.f1, 1.0);
        let s = event_f1(&[0.0; 4], &[0, 1, 0, 0], &idx, 0.5).unwrap();
        assert_eq!(s.f1, 0.0);
        let s = event_f1(&[1.0; 4], &[0; 4], &idx, 0.5).unwrap();
        assert_eq!(s.f1, 0.0);
        assert!(!s.degenerate);
    }

    #[test]
    fn family_restriction_ignores_other_family_hits() {
        let idx = positions("a", 12);
        let l = labels(12, &[(0, 1), (6, 7)]);
        let fam: Vec<Option<&str>> = (0..12)
            .map(|i| match i {
                0 | 1 => Some("x"),
                6 | 7 => Some("y"),
                _ => None,
            })
            .collect();
        let scores = mask(12, &[(1, 1), (7, 7), (10, 10)]);
        let x = event_f1_for_family(&scores, &l, &fam, &idx, 0.5, "x").unwrap();
        // considered predictions: the x hit and the false alarm at 10
        assert_eq!((x.predicted_events, x.matched_predicted, x.truth_events, x.matched_truth), (2, 1, 1, 1));
        assert_eq!(x.precision, 0.5);
        assert_eq!(x.recall, 1.0);
    }
}
