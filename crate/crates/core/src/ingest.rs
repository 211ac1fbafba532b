//! Raw flight tables to clean aligned logs: grid resampling, channel coverage
//! filtering, deterministic imputation and train-only standardization.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::telemetry::{AlignedLog, RawLog};

/// Standard deviations below this are clamped so constant channels map to 0.
pub const STD_FLOOR: f64 = 1e-8;

/// Grid cell of a timestamp. Cells are half-open, `[k - 1/2, k + 1/2)` steps
/// around grid point `k`, so a sample exactly half a step away belongs to the
/// later grid point.
fn grid_cell(t: f64, t0: f64, rate_hz: f64) -> (usize, f64) {
    let pos = (t - t0) * rate_hz;
    let k = (pos + 0.5).floor().max(0.0);
    (k as usize, (pos - k).abs())
}

/// Resamples a raw log onto a `rate_hz` grid anchored at its first timestamp.
///
/// Each grid point takes, per channel, the non-missing raw sample nearest to it
/// among those falling into its cell (earliest wins ties); otherwise it stays
/// missing (`NaN`). A grid point is anomalous iff any anomalous raw sample falls
/// into its cell. The grid extends to the cell holding the last raw sample, so
/// no raw sample (and no label) is dropped.
pub fn resample_to_grid(raw: &RawLog, rate_hz: f64) -> Result<AlignedLog> {
    if raw.rows.len() < 2 {
        return Err(Error::EmptyLog { log_id: raw.log_id.clone(), rows: raw.rows.len() });
    }
    if !(rate_hz.is_finite() && rate_hz > 0.0) {
        return Err(Error::ConfigInvalid(format!("rate_hz must be > 0, got {rate_hz}")));
    }
    raw.validate()?;

    let t0 = raw.rows[0].time;
    let last = raw.rows[raw.rows.len() - 1].time;
    let n = grid_cell(last, t0, rate_hz).0 + 1;
    let d = raw.channels.len();

    let mut data = Array2::from_elem((n, d), f64::NAN);
    let mut best = Array2::from_elem((n, d), f64::INFINITY);
    let mut labels = vec![0u8; n];
    let mut types: Vec<Option<String>> = vec![None; n];

    for row in &raw.rows {
        let (k, off) = grid_cell(row.time, t0, rate_hz);
        for (c, v) in row.values.iter().enumerate() {
            if let Some(v) = v.filter(|v| v.is_finite()) {
                if off < best[[k, c]] {
                    best[[k, c]] = off;
                    data[[k, c]] = v;
                }
            }
        }
        if row.label == 1 {
            labels[k] = 1;
            if types[k].is_none() {
                types[k] = row.anomaly_type.clone();
            }
        }
    }

    AlignedLog::new(raw.log_id.clone(), rate_hz, t0, raw.channels.clone(), data, labels, types)
}

/// Channels present in at least `threshold` of the given logs (inclusive),
/// sorted lexicographically. Each set lists the channels one usable log
/// actually carries.
pub fn select_channels(presence: &[BTreeSet<String>], threshold: f64) -> Result<Vec<String>> {
    if presence.is_empty() {
        return Err(Error::ConfigInvalid("channel selection needs at least one usable log".into()));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::ConfigInvalid(format!("coverage threshold must lie in [0, 1], got {threshold}")));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for set in presence {
        for ch in set {
            *counts.entry(ch.as_str()).or_default() += 1;
        }
    }
    // Tolerance keeps 6 of 10 at 0.60 on the inclusive side of rounding.
    let need = threshold * presence.len() as f64 - 1e-9;
    let kept: Vec<String> =
        counts.into_iter().filter(|&(_, n)| n as f64 >= need).map(|(ch, _)| ch.to_string()).collect();
    if kept.is_empty() {
        return Err(Error::NoChannelsRetained { threshold });
    }
    Ok(kept)
}

/// Reorders a log's columns to `channels`; channels the log lacks become
/// all-missing columns and extra channels are dropped.
pub fn conform_channels(log: &AlignedLog, channels: &[String]) -> AlignedLog {
    let t = log.len();
    let mut data = Array2::from_elem((t, channels.len()), f64::NAN);
    for (dst, name) in channels.iter().enumerate() {
        if let Some(src) = log.channels.iter().position(|c| c == name) {
            data.column_mut(dst).assign(&log.data.column(src));
        }
    }
    AlignedLog { channels: channels.to_vec(), data, ..log.clone() }
}

/// Linear interpolation between the nearest finite neighbours, edge extension
/// for leading/trailing gaps, zeros for channels with no finite value.
pub fn impute_channel(values: &mut [f64]) {
    let known: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_finite()).collect();
    let (Some(&first), Some(&last)) = (known.first(), known.last()) else {
        values.iter_mut().for_each(|v| *v = 0.0);
        return;
    };
    let (head, tail) = (values[first], values[last]);
    values[..first].iter_mut().for_each(|v| *v = head);
    values[last + 1..].iter_mut().for_each(|v| *v = tail);
    for pair in known.windows(2) {
        let (i, j) = (pair[0], pair[1]);
        if j == i + 1 {
            continue;
        }
        let (a, b) = (values[i], values[j]);
        let span = (j - i) as f64;
        for (k, v) in values[i + 1..j].iter_mut().enumerate() {
            *v = a + (b - a) * ((k + 1) as f64 / span);
        }
    }
    for v in values.iter_mut() {
        if !v.is_finite() {
            *v = 0.0;
        }
    }
}

pub fn impute(log: &AlignedLog) -> AlignedLog {
    let mut out = log.clone();
    let mut buf = vec![0.0; log.len()];
    for mut col in out.data.columns_mut() {
        for (b, v) in buf.iter_mut().zip(col.iter()) {
            *b = *v;
        }
        impute_channel(&mut buf);
        for (v, b) in col.iter_mut().zip(&buf) {
            *v = *b;
        }
    }
    out
}

/// Per-channel mean and floored population standard deviation of the
/// training samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub channels: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub sample_count: usize,
}

impl StandardizationStats {
    /// Two-pass fit over the given sample ranges of each log, accumulated in
    /// log order then sample order so the result is bit-stable.
    pub fn fit<'a, I>(sources: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a AlignedLog, &'a [Range<usize>])>,
        I::IntoIter: Clone,
    {
        let sources = sources.into_iter();
        let mut channels: Option<Vec<String>> = None;
        let mut n = 0usize;
        let mut sum: Vec<f64> = Vec::new();
        for (log, ranges) in sources.clone() {
            match &channels {
                None => {
                    channels = Some(log.channels.clone());
                    sum = vec![0.0; log.n_channels()];
                }
                Some(ch) if *ch != log.channels => {
                    return Err(Error::ChannelMismatch { expected: ch.clone(), found: log.channels.clone() })
                }
                Some(_) => {}
            }
            for r in ranges.iter() {
                for row in log.data.slice(ndarray::s![r.clone(), ..]).rows() {
                    for (s, v) in sum.iter_mut().zip(row) {
                        *s += v;
                    }
                    n += 1;
                }
            }
        }
        let channels = channels.ok_or_else(|| Error::ConfigInvalid("no training logs to standardize".into()))?;
        if n == 0 {
            return Err(Error::ConfigInvalid("no training samples to standardize".into()));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let mut sq = vec![0.0; channels.len()];
        for (log, ranges) in sources {
            for r in ranges.iter() {
                for row in log.data.slice(ndarray::s![r.clone(), ..]).rows() {
                    for ((s, v), m) in sq.iter_mut().zip(row).zip(&mean) {
                        *s += (v - m) * (v - m);
                    }
                }
            }
        }
        let std = sq.iter().map(|s| (s / n as f64).sqrt().max(STD_FLOOR)).collect();
        Ok(Self { channels, mean, std, sample_count: n })
    }

    pub fn apply(&self, log: &AlignedLog) -> Result<AlignedLog> {
        if log.channels != self.channels {
            return Err(Error::ChannelMismatch { expected: self.channels.clone(), found: log.channels.clone() });
        }
        let mut out = log.clone();
        for mut row in out.data.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }
}
