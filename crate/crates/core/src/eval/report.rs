//! Per-run evaluation reports and multi-seed aggregation.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::events::{event_f1, event_f1_for_family, EventScore, WindowPos};
use super::metrics::{auprc, auroc, best_f1, pr_curve, PrPoint, Threshold};
use super::split::Protocol;
use crate::error::{Error, Result};

/// Attached to every report next to the best-F1 operating point.
pub const THRESHOLD_NOTE: &str =
    "best-F1 threshold is selected on test labels; it is a diagnostic upper-bound operating point";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMetrics {
    pub family: String,
    pub positive_windows: usize,
    /// Absent when the family's positives or the negatives are empty.
    pub auprc: Option<f64>,
    pub event: EventScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub protocol: Protocol,
    pub seed: u64,
    pub windows: usize,
    pub positive_windows: usize,
    pub truth_events: usize,
    pub auroc: f64,
    pub auprc: f64,
    pub best_f1: f64,
    pub best_threshold: Threshold,
    pub threshold_note: String,
    pub event: EventScore,
    pub families: Vec<FamilyMetrics>,
    pub pr_curve: Vec<PrPoint>,
}

/// Inputs shared by the global and per-family computations; all slices are
/// aligned with one another.
#[derive(Debug, Clone, Copy)]
pub struct ScoredWindows<'a> {
    pub scores: &'a [f64],
    pub labels: &'a [u8],
    pub families: &'a [Option<&'a str>],
    pub index: &'a [WindowPos<'a>],
}

impl ScoredWindows<'_> {
    fn check(&self) -> Result<()> {
        let n = self.index.len();
        for (what, got) in
            [("scores", self.scores.len()), ("labels", self.labels.len()), ("families", self.families.len())]
        {
            if got != n {
                return Err(Error::LengthMismatch { what, got, expected: n });
            }
        }
        Ok(())
    }
}

pub fn family_breakdown(input: &ScoredWindows<'_>, threshold: f64) -> Result<Vec<FamilyMetrics>> {
    input.check()?;
    let names: BTreeSet<&str> =
        input.labels.iter().zip(input.families).filter(|(&l, _)| l == 1).filter_map(|(_, f)| *f).collect();
    let mut out = Vec::with_capacity(names.len());
    for family in names {
        let keep: Vec<usize> =
            (0..input.labels.len()).filter(|&i| input.labels[i] == 0 || input.families[i] == Some(family)).collect();
        let scores: Vec<f64> = keep.iter().map(|&i| input.scores[i]).collect();
        let labels: Vec<u8> = keep.iter().map(|&i| input.labels[i]).collect();
        let positives = labels.iter().filter(|&&l| l == 1).count();
        let family_auprc = match auprc(&scores, &labels) {
            Ok(v) => Some(v),
            Err(Error::SingleClass { .. }) => None,
            Err(e) => return Err(e),
        };
        let event = event_f1_for_family(input.scores, input.labels, input.families, input.index, threshold, family)?;
        out.push(FamilyMetrics { family: family.to_string(), positive_windows: positives, auprc: family_auprc, event });
    }
    Ok(out)
}

pub fn evaluate_scores(method: &str, protocol: Protocol, seed: u64, input: &ScoredWindows<'_>) -> Result<EvalReport> {
    input.check()?;
    let best = best_f1(input.scores, input.labels)?;
    let event = event_f1(input.scores, input.labels, input.index, best.threshold.0)?;
    Ok(EvalReport {
        method: method.to_string(),
        protocol,
        seed,
        windows: input.scores.len(),
        positive_windows: input.labels.iter().filter(|&&l| l == 1).count(),
        truth_events: event.truth_events,
        auroc: auroc(input.scores, input.labels)?,
        auprc: auprc(input.scores, input.labels)?,
        best_f1: best.f1,
        best_threshold: best.threshold,
        threshold_note: THRESHOLD_NOTE.to_string(),
        event,
        families: family_breakdown(input, best.threshold.0)?,
        pr_curve: pr_curve(input.scores, input.labels)?,
    })
}

/// Two-column `recall,precision` dump of a report's curve.
pub fn write_pr_csv<W: Write>(points: &[PrPoint], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(["recall", "precision"])?;
    for p in points {
        w.write_record([p.recall.to_string(), p.precision.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; absent for a single seed.
    pub std: Option<f64>,
}

pub fn mean_std(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, Some((ss / (n - 1) as f64).sqrt()))
}

pub const AGGREGATED_METRICS: [&str; 4] = ["auroc", "auprc", "best_f1", "event_f1"];

fn metric(report: &EvalReport, name: &str) -> f64 {
    match name {
        "auroc" => report.auroc,
        "auprc" => report.auprc,
        "best_f1" => report.best_f1,
        "event_f1" => report.event.f1,
        _ => unreachable!("unknown metric {name}"),
    }
}

/// Mean and sample standard deviation of each headline metric over seeds.
pub fn aggregate_seeds(reports: &[EvalReport]) -> Result<Vec<MetricSummary>> {
    if reports.is_empty() {
        return Err(Error::ConfigInvalid("no reports to aggregate".into()));
    }
    Ok(AGGREGATED_METRICS
        .iter()
        .map(|&name| {
            let values: Vec<f64> = reports.iter().map(|r| metric(r, name)).collect();
            let (mean, std) = mean_std(&values);
            MetricSummary { metric: name.to_string(), n: values.len(), mean, std }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub method: String,
    pub protocol: Protocol,
    pub summaries: Vec<MetricSummary>,
}

/// `method,protocol,metric,n,mean,std` rows; an empty `std` means one seed.
pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(["method", "protocol", "metric", "n", "mean", "std"])?;
    for row in rows {
        for s in &row.summaries {
            w.write_record([
                row.method.clone(),
                row.protocol.name().to_string(),
                s.metric.clone(),
                s.n.to_string(),
                s.mean.to_string(),
                s.std.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn positions(n: usize) -> Vec<WindowPos<'static>> {
        (0..n).map(|ordinal| WindowPos { log: "a", ordinal }).collect()
    }

    #[test]
    fn two_seed_aggregate() {
        assert_eq!(mean_std(&[0.0, 1.0]).0, 0.5);
        assert!((mean_std(&[0.0, 1.0]).1.unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[0.3, 0.3, 0.3]).1, Some(0.0));
        assert_eq!(mean_std(&[0.3]).1, None);
    }

    #[test]
    fn single_family_matches_global() {
        let scores = [0.1, 0.8, 0.7, 0.2, 0.9, 0.3];
        let labels = [0, 1, 1, 0, 1, 0];
        let fam: Vec<Option<&str>> = labels.iter().map(|&l| (l == 1).then_some("x")).collect();
        let idx = positions(6);
        let input = ScoredWindows { scores: &scores, labels: &labels, families: &fam, index: &idx };
        let r = evaluate_scores("m", Protocol::Chronological, 0, &input).unwrap();
        assert_eq!(r.families.len(), 1);
        assert_eq!(r.families[0].auprc, Some(r.auprc));
        assert_eq!(r.families[0].event, r.event);
    }

    #[test]
    fn disjoint_families_with_perfect_scores() {
        let scores = [0.0, 0.9, 0.9, 0.0, 0.0, 0.8, 0.0];
        let labels = [0, 1, 1, 0, 0, 1, 0];
        let fam = [None, Some("x"), Some("x"), None, None, Some("y"), None];
        let idx = positions(7);
        let input = ScoredWindows { scores: &scores, labels: &labels, families: &fam, index: &idx };
        let fams = family_breakdown(&input, 0.5).unwrap();
        assert_eq!(fams.len(), 2);
        assert!(fams.iter().all(|f| f.auprc == Some(1.0) && f.event.f1 == 1.0));
    }

    #[test]
    fn report_round_trips_through_json() {
        let scores = [0.2, 0.4, 0.4, 0.9];
        let labels = [0, 0, 1, 1];
        let fam = [None, None, Some("x"), Some("x")];
        let idx = positions(4);
        let input = ScoredWindows { scores: &scores, labels: &labels, families: &fam, index: &idx };
        let r = evaluate_scores("m", Protocol::LeaveLogOut, 3, &input).unwrap();
        let text = serde_json::to_string_pretty(&r).unwrap();
        let back: EvalReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert!(text.contains("\"protocol\": \"leave_log_out\""));
    }

    #[test]
    fn aggregate_csv_layout() {
        let rows = [AggregateRow {
            method: "m".into(),
            protocol: Protocol::Chronological,
            summaries: vec![MetricSummary { metric: "auprc".into(), n: 2, mean: 0.5, std: Some(0.25) }],
        }];
        let mut buf = Vec::new();
        write_aggregate_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "method,protocol,metric,n,mean,std\nm,chronological,auprc,2,0.5,0.25\n"
        );
    }
}
