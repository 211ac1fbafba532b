//! Shared flight-log domain types.
//!
//! A [`RawLog`] is one flight table as recorded (irregular timestamps, a
//! per-log channel set, missing values). Alignment turns it into an
//! [`AlignedLog`]: a fixed-rate `T x d` matrix with per-sample labels and the
//! maximal anomalous runs precomputed as [`AnomalyInterval`]s.
//!
//! Missing entries in an aligned matrix are represented by `NaN` until the
//! imputation stage removes them.

use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_RATE_HZ: f64 = 10.0;
pub const DEFAULT_COVERAGE_THRESHOLD: f64 = 0.60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub time: f64,
    /// One entry per channel of the owning [`RawLog`]; `None` is missing.
    pub values: Vec<Option<f64>>,
    pub label: u8,
    pub anomaly_type: Option<String>,
}

/// A flight table before alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawLog {
    pub log_id: String,
    pub channels: Vec<String>,
    pub rows: Vec<RawRow>,
    /// False when the source table had no label column.
    pub has_labels: bool,
}

impl RawLog {
    /// Checks the raw-log invariants: strictly increasing timestamps, binary
    /// labels, row widths matching the channel list and at least two rows.
    pub fn validate(&self) -> Result<()> {
        if self.rows.len() < 2 {
            return Err(Error::EmptyLog { log_id: self.log_id.clone(), rows: self.rows.len() });
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.values.len() != self.channels.len() {
                return Err(Error::LengthMismatch {
                    what: "raw row values",
                    got: row.values.len(),
                    expected: self.channels.len(),
                });
            }
            if row.label > 1 {
                return Err(Error::ConfigInvalid(format!(
                    "log `{}` row {i}: label {} is not 0/1",
                    self.log_id, row.label
                )));
            }
            if !row.time.is_finite() {
                return Err(Error::NonFiniteInput { index: i });
            }
            if i > 0 && row.time <= self.rows[i - 1].time {
                return Err(Error::ConfigInvalid(format!(
                    "log `{}` row {i}: timestamps must be strictly increasing",
                    self.log_id
                )));
            }
        }
        Ok(())
    }

    pub fn has_anomaly(&self) -> bool {
        self.rows.iter().any(|r| r.label == 1)
    }

    /// Channels with at least one non-missing finite value.
    pub fn present_channels(&self) -> Vec<&str> {
        self.channels
            .iter()
            .enumerate()
            .filter(|(c, _)| self.rows.iter().any(|r| matches!(r.values[*c], Some(v) if v.is_finite())))
            .map(|(_, name)| name.as_str())
            .collect()
    }
}

/// Inclusive sample range `[start, end]` of one maximal anomalous run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnomalyInterval {
    pub start: usize,
    pub end: usize,
    pub family: Option<String>,
}

impl AnomalyInterval {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when the interval intersects the half-open sample span `[lo, hi)`.
    pub fn intersects(&self, lo: usize, hi: usize) -> bool {
        self.start < hi && lo <= self.end
    }
}

/// Maximal runs of `label == 1`. The family of a run is the anomaly type of its
/// first sample.
pub fn intervals_from_labels(labels: &[u8], types: &[Option<String>]) -> Vec<AnomalyInterval> {
    let mut out = Vec::new();
    let mut t = 0;
    while t < labels.len() {
        if labels[t] == 1 {
            let start = t;
            while t + 1 < labels.len() && labels[t + 1] == 1 {
                t += 1;
            }
            out.push(AnomalyInterval { start, end: t, family: types.get(start).cloned().flatten() });
        }
        t += 1;
    }
    out
}

pub fn labels_from_intervals(intervals: &[AnomalyInterval], len: usize) -> Vec<u8> {
    let mut labels = vec![0u8; len];
    for iv in intervals {
        for l in &mut labels[iv.start.min(len)..(iv.end + 1).min(len)] {
            *l = 1;
        }
    }
    labels
}

/// One flight resampled onto a fixed-rate grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedLog {
    pub log_id: String,
    pub rate_hz: f64,
    /// Timestamp of grid point 0, in seconds.
    pub start_time: f64,
    pub channels: Vec<String>,
    /// `T x d`, row per grid point. `NaN` marks a missing entry before imputation.
    pub data: Array2<f64>,
    pub labels: Vec<u8>,
    pub anomaly_types: Vec<Option<String>>,
    pub anomaly_intervals: Vec<AnomalyInterval>,
}

impl AlignedLog {
    /// Builds a log and derives its anomaly intervals from the labels.
    pub fn new(
        log_id: impl Into<String>,
        rate_hz: f64,
        start_time: f64,
        channels: Vec<String>,
        data: Array2<f64>,
        labels: Vec<u8>,
        anomaly_types: Vec<Option<String>>,
    ) -> Result<Self> {
        let (t, d) = data.dim();
        if channels.len() != d {
            return Err(Error::LengthMismatch { what: "channel names", got: channels.len(), expected: d });
        }
        if labels.len() != t {
            return Err(Error::LengthMismatch { what: "labels", got: labels.len(), expected: t });
        }
        if anomaly_types.len() != t {
            return Err(Error::LengthMismatch { what: "anomaly types", got: anomaly_types.len(), expected: t });
        }
        let anomaly_intervals = intervals_from_labels(&labels, &anomaly_types);
        Ok(Self {
            log_id: log_id.into(),
            rate_hz,
            start_time,
            channels,
            data,
            labels,
            anomaly_types,
            anomaly_intervals,
        })
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn n_channels(&self) -> usize {
        self.data.ncols()
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.start_time + index as f64 / self.rate_hz
    }

    pub fn has_anomaly(&self) -> bool {
        self.labels.contains(&1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    NonFiniteValue,
    IntervalLabelMismatch,
    InvalidLabel,
    LengthMismatch,
    DuplicateChannel,
    InvalidRate,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::NonFiniteValue => "non-finite value",
            ViolationKind::IntervalLabelMismatch => "interval/label mismatch",
            ViolationKind::InvalidLabel => "invalid label",
            ViolationKind::LengthMismatch => "length mismatch",
            ViolationKind::DuplicateChannel => "duplicate channel",
            ViolationKind::InvalidRate => "invalid rate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Sample index, when the finding is tied to one.
    pub index: Option<usize>,
    /// Channel index, when the finding is tied to one.
    pub channel: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(t) = self.index {
            write!(f, " at t={t}")?;
        }
        if let Some(c) = self.channel {
            write!(f, " c={c}")?;
        }
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

/// Reports every broken [`AlignedLog`] invariant. Never fails.
pub fn validate_aligned_log(log: &AlignedLog) -> Vec<Violation> {
    let mut out = Vec::new();
    let (t, d) = log.data.dim();
    let v = |kind, index, channel, detail: String| Violation { kind, index, channel, detail };

    if !(log.rate_hz.is_finite() && log.rate_hz > 0.0) {
        out.push(v(ViolationKind::InvalidRate, None, None, format!("rate_hz = {}", log.rate_hz)));
    }
    if log.channels.len() != d {
        out.push(v(
            ViolationKind::LengthMismatch,
            None,
            None,
            format!("{} channel names for {d} columns", log.channels.len()),
        ));
    }
    for (i, name) in log.channels.iter().enumerate() {
        if log.channels[..i].contains(name) {
            out.push(v(ViolationKind::DuplicateChannel, None, Some(i), name.clone()));
        }
    }
    for ((ti, ci), x) in log.data.indexed_iter() {
        if !x.is_finite() {
            out.push(v(ViolationKind::NonFiniteValue, Some(ti), Some(ci), String::new()));
        }
    }
    if log.labels.len() != t {
        out.push(v(ViolationKind::LengthMismatch, None, None, format!("{} labels for {t} rows", log.labels.len())));
    }
    if log.anomaly_types.len() != t {
        out.push(v(
            ViolationKind::LengthMismatch,
            None,
            None,
            format!("{} anomaly types for {t} rows", log.anomaly_types.len()),
        ));
    }
    for (ti, &l) in log.labels.iter().enumerate() {
        if l > 1 {
            out.push(v(ViolationKind::InvalidLabel, Some(ti), None, format!("label {l}")));
        }
    }

    // Compare run boundaries only; the family tag is descriptive.
    let runs: Vec<(usize, usize)> =
        intervals_from_labels(&log.labels, &log.anomaly_types).iter().map(|iv| (iv.start, iv.end)).collect();
    let listed: Vec<(usize, usize)> = log.anomaly_intervals.iter().map(|iv| (iv.start, iv.end)).collect();
    for &(s, e) in &runs {
        if !listed.contains(&(s, e)) {
            out.push(v(
                ViolationKind::IntervalLabelMismatch,
                Some(s),
                None,
                format!("label run [{s}, {e}] has no interval"),
            ));
        }
    }
    for &(s, e) in &listed {
        if !runs.contains(&(s, e)) {
            out.push(v(
                ViolationKind::IntervalLabelMismatch,
                Some(s),
                None,
                format!("interval [{s}, {e}] is not a maximal label run"),
            ));
        }
    }
    out
}

/// Windowing parameters in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub length: usize,
    pub stride: usize,
    pub horizon: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self { length: 96, stride: 8, horizon: 12 }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::ConfigInvalid(format!("window length must be >= 2, got {}", self.length)));
        }
        if self.stride < 1 {
            return Err(Error::ConfigInvalid("window stride must be >= 1".into()));
        }
        Ok(())
    }

    /// Length of the labeling span `L + H`.
    pub fn span(&self) -> usize {
        self.length + self.horizon
    }
}

/// One labeled window; the values live in the owning log at
/// `data[start..start + L, ..]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub log_id: String,
    pub start: usize,
    pub label: u8,
    pub family: Option<String>,
}

impl Window {
    pub fn values<'a>(&self, log: &'a AlignedLog, spec: &WindowSpec) -> ndarray::ArrayView2<'a, f64> {
        log.data.slice(ndarray::s![self.start..self.start + spec.length, ..])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub log_id: String,
    pub path: String,
    pub row_count: usize,
    pub usable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub logs: Vec<ManifestEntry>,
    pub channels: Vec<String>,
    pub coverage_threshold: f64,
    pub rate_hz: f64,
}

impl DatasetManifest {
    pub fn usable(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.logs.iter().filter(|e| e.usable)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn consistent_log(t: usize) -> AlignedLog {
        let data = Array2::from_shape_fn((t, 3), |(i, c)| (i * 3 + c) as f64 * 0.5);
        let mut labels = vec![0u8; t];
        for l in &mut labels[40..55] {
            *l = 1;
        }
        let types = labels.iter().map(|&l| (l == 1).then(|| "altitude".to_string())).collect();
        AlignedLog::new("log-a", 10.0, 0.0, vec!["a".into(), "b".into(), "c".into()], data, labels, types).unwrap()
    }

    #[test]
    fn consistent_log_has_no_violations() {
        assert!(validate_aligned_log(&consistent_log(100)).is_empty());
    }

    #[test]
    fn nan_entry_is_one_violation() {
        let mut log = consistent_log(100);
        log.data[[3, 2]] = f64::NAN;
        let v = validate_aligned_log(&log);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::NonFiniteValue);
        assert_eq!((v[0].index, v[0].channel), (Some(3), Some(2)));
        assert_eq!(v[0].kind.to_string(), "non-finite value");
    }

    #[test]
    fn omitted_interval_is_one_violation() {
        let mut log = consistent_log(100);
        log.anomaly_intervals.clear();
        let v = validate_aligned_log(&log);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind.to_string(), "interval/label mismatch");
        assert_eq!(v[0].index, Some(40));
    }

    #[test]
    fn intervals_take_family_of_first_sample() {
        let labels = [0, 1, 1, 0, 1];
        let types = [None, Some("drift".to_string()), Some("other".to_string()), None, None];
        let ivs = intervals_from_labels(&labels, &types);
        assert_eq!(
            ivs,
            vec![
                AnomalyInterval { start: 1, end: 2, family: Some("drift".into()) },
                AnomalyInterval { start: 4, end: 4, family: None },
            ]
        );
    }

    #[test]
    fn raw_log_rejects_non_monotone_time() {
        let row = |t| RawRow { time: t, values: vec![Some(1.0)], label: 0, anomaly_type: None };
        let log =
            RawLog { log_id: "x".into(), channels: vec!["a".into()], rows: vec![row(0.0), row(0.0)], has_labels: true };
        assert!(log.validate().is_err());
        let short = RawLog { rows: vec![row(0.0)], ..log };
        assert!(matches!(short.validate(), Err(Error::EmptyLog { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn labels_round_trip_through_intervals(labels in proptest::collection::vec(0u8..2, 0..300)) {
                let types = vec![None; labels.len()];
                let ivs = intervals_from_labels(&labels, &types);
                prop_assert_eq!(labels_from_intervals(&ivs, labels.len()), labels);
                for w in ivs.windows(2) {
                    // maximal: at least one zero between runs
                    prop_assert!(w[0].end + 1 < w[1].start);
                }
            }
        }
    }
}
