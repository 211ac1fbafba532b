//! Fixed-length sliding windows over aligned logs.
//!
//! Windows start at `0, r, 2r, ...` while a full window of `L` samples fits;
//! trailing samples are discarded. A window is positive iff any sample in its
//! labeling span `[a, min(a + L + H, T))` is anomalous, and it carries the
//! family of the first anomalous sample in that span.

use std::collections::BTreeMap;
use std::io::Write;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::telemetry::{AlignedLog, Window, WindowSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSet {
    pub spec: WindowSpec,
    /// Ordered by `(log_id, start)`.
    pub windows: Vec<Window>,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.windows.iter().filter(|w| w.label == 1).count()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.windows.iter().map(|w| w.label).collect()
    }

    /// Index ranges of each log's windows, in window order.
    pub fn log_ranges(&self) -> Vec<(String, Range<usize>)> {
        let mut out: Vec<(String, Range<usize>)> = Vec::new();
        for (i, w) in self.windows.iter().enumerate() {
            match out.last_mut() {
                Some((id, r)) if *id == w.log_id => r.end = i + 1,
                _ => out.push((w.log_id.clone(), i..i + 1)),
            }
        }
        out
    }

    /// Per window, its position within its own log's stride-ordered sequence.
    pub fn ordinals(&self) -> Vec<usize> {
        let stride = self.spec.stride;
        self.windows.iter().map(|w| w.start / stride).collect()
    }

    /// Writes `log_id,start,label,family` rows for auditing.
    pub fn write_index_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record(["log_id", "start", "label", "family"])?;
        for win in &self.windows {
            w.write_record([
                win.log_id.as_str(),
                &win.start.to_string(),
                &win.label.to_string(),
                win.family.as_deref().unwrap_or(""),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn window_count(len: usize, spec: &WindowSpec) -> usize {
    if len < spec.length {
        0
    } else {
        (len - spec.length) / spec.stride + 1
    }
}

pub fn make_windows(log: &AlignedLog, spec: &WindowSpec) -> Result<WindowSet> {
    spec.validate()?;
    let t = log.len();
    if t < spec.length {
        return Err(Error::LogTooShort { log_id: log.log_id.clone(), len: t, window: spec.length });
    }
    let windows = (0..window_count(t, spec))
        .map(|i| {
            let start = i * spec.stride;
            let end = (start + spec.span()).min(t);
            let first = (start..end).find(|&s| log.labels[s] == 1);
            Window {
                log_id: log.log_id.clone(),
                start,
                label: u8::from(first.is_some()),
                family: first.and_then(|s| log.anomaly_types[s].clone()),
            }
        })
        .collect();
    Ok(WindowSet { spec: *spec, windows })
}

/// Windows every log and concatenates them in `(log_id, start)` order.
pub fn make_window_set(logs: &[AlignedLog], spec: &WindowSpec) -> Result<WindowSet> {
    let mut order: Vec<&AlignedLog> = logs.iter().collect();
    order.sort_by(|a, b| a.log_id.cmp(&b.log_id));
    let mut windows = Vec::new();
    for log in order {
        windows.extend(make_windows(log, spec)?.windows);
    }
    Ok(WindowSet { spec: *spec, windows })
}

/// Merged `[a, a + L)` sample ranges of the selected windows, per log.
pub fn sample_spans<'a, I>(windows: I, spec: &WindowSpec) -> BTreeMap<String, Vec<Range<usize>>>
where
    I: IntoIterator<Item = &'a Window>,
{
    let mut per_log: BTreeMap<String, Vec<Range<usize>>> = BTreeMap::new();
    for w in windows {
        per_log.entry(w.log_id.clone()).or_default().push(w.start..w.start + spec.length);
    }
    for ranges in per_log.values_mut() {
        ranges.sort_by_key(|r| r.start);
        let mut merged: Vec<Range<usize>> = Vec::with_capacity(ranges.len());
        for r in ranges.drain(..) {
            match merged.last_mut() {
                Some(m) if r.start <= m.end => m.end = m.end.max(r.end),
                _ => merged.push(r),
            }
        }
        *ranges = merged;
    }
    per_log
}
