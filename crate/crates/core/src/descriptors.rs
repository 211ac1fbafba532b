//! Temporal-statistical window descriptors.
//!
//! Every channel of a window is summarized by 18 statistics in a fixed order:
//!
//! | idx | descriptor | group |
//! |----:|------------|-------|
//! | 0-1 | mean, std | moments |
//! | 2-4 | min, max, range | extrema_range |
//! | 5-9 | q10, q25, q50, q75, q90 | quantiles |
//! | 10-12 | first, last, drift | endpoints_drift |
//! | 13-16 | diff_mean, diff_std, abs_diff_mean, abs_diff_max | dynamics |
//! | 17 | acf1 | autocorr |
//!
//! Standard deviations are population estimates. Quantiles interpolate
//! linearly between order statistics at position `(n - 1) p`. The lag-one
//! autocorrelation centers both terms on the window mean, sums the `L - 1`
//! adjacent products and divides by the centered sum of squares floored at
//! [`ACF_FLOOR`]; constant windows therefore get `0`.
//!
//! A window's feature vector concatenates the per-channel blocks channel by
//! channel, so there is no cross-channel mixing.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::telemetry::{AlignedLog, Window};
use crate::windowing::WindowSet;

pub const DESCRIPTORS_PER_CHANNEL: usize = 18;
pub const ACF_FLOOR: f64 = 1e-12;
const QUANTILES: [f64; 5] = [0.10, 0.25, 0.50, 0.75, 0.90];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptorGroup {
    Moments,
    ExtremaRange,
    Quantiles,
    EndpointsDrift,
    Dynamics,
    Autocorr,
}

impl DescriptorGroup {
    pub const ALL: [DescriptorGroup; 6] = [
        DescriptorGroup::Moments,
        DescriptorGroup::ExtremaRange,
        DescriptorGroup::Quantiles,
        DescriptorGroup::EndpointsDrift,
        DescriptorGroup::Dynamics,
        DescriptorGroup::Autocorr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DescriptorGroup::Moments => "moments",
            DescriptorGroup::ExtremaRange => "extrema_range",
            DescriptorGroup::Quantiles => "quantiles",
            DescriptorGroup::EndpointsDrift => "endpoints_drift",
            DescriptorGroup::Dynamics => "dynamics",
            DescriptorGroup::Autocorr => "autocorr",
        }
    }

    pub fn members(self) -> impl Iterator<Item = Descriptor> {
        Descriptor::ALL.into_iter().filter(move |d| d.group() == self)
    }
}

impl fmt::Display for DescriptorGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DescriptorGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DescriptorGroup::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::ConfigInvalid(format!("unknown descriptor group `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Descriptor {
    Mean,
    Std,
    Min,
    Max,
    Range,
    Q10,
    Q25,
    Q50,
    Q75,
    Q90,
    First,
    Last,
    Drift,
    DiffMean,
    DiffStd,
    AbsDiffMean,
    AbsDiffMax,
    Acf1,
}

impl Descriptor {
    pub const ALL: [Descriptor; DESCRIPTORS_PER_CHANNEL] = [
        Descriptor::Mean,
        Descriptor::Std,
        Descriptor::Min,
        Descriptor::Max,
        Descriptor::Range,
        Descriptor::Q10,
        Descriptor::Q25,
        Descriptor::Q50,
        Descriptor::Q75,
        Descriptor::Q90,
        Descriptor::First,
        Descriptor::Last,
        Descriptor::Drift,
        Descriptor::DiffMean,
        Descriptor::DiffStd,
        Descriptor::AbsDiffMean,
        Descriptor::AbsDiffMax,
        Descriptor::Acf1,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Descriptor::Mean => "mean",
            Descriptor::Std => "std",
            Descriptor::Min => "min",
            Descriptor::Max => "max",
            Descriptor::Range => "range",
            Descriptor::Q10 => "q10",
            Descriptor::Q25 => "q25",
            Descriptor::Q50 => "q50",
            Descriptor::Q75 => "q75",
            Descriptor::Q90 => "q90",
            Descriptor::First => "first",
            Descriptor::Last => "last",
            Descriptor::Drift => "drift",
            Descriptor::DiffMean => "diff_mean",
            Descriptor::DiffStd => "diff_std",
            Descriptor::AbsDiffMean => "abs_diff_mean",
            Descriptor::AbsDiffMax => "abs_diff_max",
            Descriptor::Acf1 => "acf1",
        }
    }

    pub fn group(self) -> DescriptorGroup {
        use Descriptor::*;
        match self {
            Mean | Std => DescriptorGroup::Moments,
            Min | Max | Range => DescriptorGroup::ExtremaRange,
            Q10 | Q25 | Q50 | Q75 | Q90 => DescriptorGroup::Quantiles,
            First | Last | Drift => DescriptorGroup::EndpointsDrift,
            DiffMean | DiffStd | AbsDiffMean | AbsDiffMax => DescriptorGroup::Dynamics,
            Acf1 => DescriptorGroup::Autocorr,
        }
    }
}

/// Linear-interpolation quantile of an ascending slice.
fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// The 18 descriptors of one channel window, in [`Descriptor::ALL`] order.
pub fn describe_channel(w: &[f64]) -> Result<[f64; DESCRIPTORS_PER_CHANNEL]> {
    let n = w.len();
    if n < 2 {
        return Err(Error::ConfigInvalid(format!("descriptor window needs at least 2 samples, got {n}")));
    }
    if let Some(index) = w.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput { index });
    }
    let nf = n as f64;
    let mean = w.iter().sum::<f64>() / nf;
    let ss: f64 = w.iter().map(|v| (v - mean) * (v - mean)).sum();
    let std = (ss / nf).sqrt();

    let mut sorted = w.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[n - 1]);

    let m = (n - 1) as f64;
    let mut d_sum = 0.0;
    let mut ad_sum = 0.0;
    let mut ad_max: f64 = 0.0;
    let mut lag = 0.0;
    for pair in w.windows(2) {
        let d = pair[1] - pair[0];
        d_sum += d;
        ad_sum += d.abs();
        ad_max = ad_max.max(d.abs());
        lag += (pair[0] - mean) * (pair[1] - mean);
    }
    let d_mean = d_sum / m;
    let d_ss: f64 = w
        .windows(2)
        .map(|p| {
            let e = p[1] - p[0] - d_mean;
            e * e
        })
        .sum();

    let (first, last) = (w[0], w[n - 1]);
    let q = QUANTILES.map(|p| sorted_quantile(&sorted, p));
    Ok([
        mean,
        std,
        min,
        max,
        max - min,
        q[0],
        q[1],
        q[2],
        q[3],
        q[4],
        first,
        last,
        last - first,
        d_mean,
        (d_ss / m).sqrt(),
        ad_sum / m,
        ad_max,
        lag / ss.max(ACF_FLOOR),
    ])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumn {
    /// `<channel>__<descriptor>`
    pub name: String,
    pub channel: String,
    pub descriptor: Descriptor,
    pub group: DescriptorGroup,
}

/// Descriptor table, one row per window.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub columns: Vec<FeatureColumn>,
    /// Window metadata aligned with `values` rows.
    pub rows: Vec<Window>,
}

/// Columns in channel-major order restricted to the selected groups.
pub fn feature_columns(channels: &[String], groups: &[DescriptorGroup]) -> Vec<FeatureColumn> {
    let mut out = Vec::new();
    for ch in channels {
        for d in Descriptor::ALL {
            if groups.contains(&d.group()) {
                out.push(FeatureColumn {
                    name: format!("{ch}__{}", d.name()),
                    channel: ch.clone(),
                    descriptor: d,
                    group: d.group(),
                });
            }
        }
    }
    out
}

/// Descriptor rows for every window of `ws`, parallel over rows. Each row is
/// written into its own slot so the output does not depend on thread count.
pub fn featurize(ws: &WindowSet, logs: &[AlignedLog], groups: &[DescriptorGroup]) -> Result<FeatureMatrix> {
    let by_id: HashMap<&str, &AlignedLog> = logs.iter().map(|l| (l.log_id.as_str(), l)).collect();
    let channels = match logs.first() {
        Some(l) => l.channels.clone(),
        None => Vec::new(),
    };
    for l in logs {
        if l.channels != channels {
            return Err(Error::ChannelMismatch { expected: channels.clone(), found: l.channels.clone() });
        }
    }
    let selected: Vec<usize> =
        Descriptor::ALL.iter().filter(|d| groups.contains(&d.group())).map(|d| d.index()).collect();
    let columns = feature_columns(&channels, groups);
    let width = columns.len();
    let n = ws.len();
    let length = ws.spec.length;

    let mut data = vec![0.0; n * width];
    if width > 0 {
        data.par_chunks_mut(width).zip(ws.windows.par_iter()).try_for_each(|(out, win)| -> Result<()> {
            let log = by_id
                .get(win.log_id.as_str())
                .ok_or_else(|| Error::ConfigInvalid(format!("window refers to unknown log `{}`", win.log_id)))?;
            if win.start + length > log.len() {
                return Err(Error::LogTooShort {
                    log_id: log.log_id.clone(),
                    len: log.len(),
                    window: win.start + length,
                });
            }
            let view = win.values(log, &ws.spec);
            let mut buf = vec![0.0; length];
            let mut k = 0;
            for col in view.axis_iter(Axis(1)) {
                for (b, v) in buf.iter_mut().zip(col) {
                    *b = *v;
                }
                let desc = describe_channel(&buf)?;
                for &i in &selected {
                    out[k] = desc[i];
                    k += 1;
                }
            }
            Ok(())
        })?;
    }
    let values = Array2::from_shape_vec((n, width), data).expect("shape matches buffer");
    Ok(FeatureMatrix { values, columns, rows: ws.windows.clone() })
}

/// The moments-only baseline representation: mean and std per channel.
pub fn moments_only_features(ws: &WindowSet, logs: &[AlignedLog]) -> Result<FeatureMatrix> {
    featurize(ws, logs, &[DescriptorGroup::Moments])
}

const MAGIC: &[u8; 4] = b"TMFM";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Sidecar {
    format_version: u32,
    n_rows: usize,
    n_cols: usize,
    columns: Vec<FeatureColumn>,
    windows: Vec<Window>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|w| w.label).collect()
    }

    pub fn channels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in &self.columns {
            if out.last() != Some(&c.channel) {
                out.push(c.channel.clone());
            }
        }
        out
    }

    /// Keeps only columns whose group is selected, preserving order.
    pub fn select_groups(&self, groups: &[DescriptorGroup]) -> FeatureMatrix {
        let keep: Vec<usize> = (0..self.columns.len()).filter(|&i| groups.contains(&self.columns[i].group)).collect();
        FeatureMatrix {
            values: self.values.select(Axis(1), &keep),
            columns: keep.iter().map(|&i| self.columns[i].clone()).collect(),
            rows: self.rows.clone(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            values: self.values.select(Axis(0), rows),
            columns: self.columns.clone(),
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Writes `<stem>.bin` (column-major little-endian f64 behind a small
    /// header) and `<stem>.json` (column and row metadata).
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        let (n, m) = self.values.dim();
        let mut bin = BufWriter::new(File::create(dir.join(format!("{stem}.bin")))?);
        bin.write_all(MAGIC)?;
        bin.write_all(&FORMAT_VERSION.to_le_bytes())?;
        bin.write_all(&(n as u64).to_le_bytes())?;
        bin.write_all(&(m as u64).to_le_bytes())?;
        for col in self.values.columns() {
            for v in col {
                bin.write_all(&v.to_le_bytes())?;
            }
        }
        bin.flush()?;
        let sidecar = Sidecar {
            format_version: FORMAT_VERSION,
            n_rows: n,
            n_cols: m,
            columns: self.columns.clone(),
            windows: self.rows.clone(),
        };
        let mut json = BufWriter::new(File::create(dir.join(format!("{stem}.json")))?);
        serde_json::to_writer_pretty(&mut json, &sidecar)?;
        json.write_all(b"\n")?;
        json.flush()?;
        Ok(())
    }

    pub fn load(dir: &Path, stem: &str) -> Result<FeatureMatrix> {
        let json_path = dir.join(format!("{stem}.json"));
        let bin_path = dir.join(format!("{stem}.bin"));
        let sidecar: Sidecar = serde_json::from_reader(BufReader::new(File::open(&json_path)?))?;
        if sidecar.format_version != FORMAT_VERSION {
            return Err(Error::format(&json_path, format!("unsupported format version {}", sidecar.format_version)));
        }
        let mut bin = BufReader::new(File::open(&bin_path)?);
        let mut head = [0u8; 24];
        bin.read_exact(&mut head)?;
        if &head[..4] != MAGIC {
            return Err(Error::format(&bin_path, "bad magic"));
        }
        let word = |r: std::ops::Range<usize>| {
            let mut b = [0u8; 8];
            b.copy_from_slice(&head[r]);
            u64::from_le_bytes(b) as usize
        };
        let (n, m) = (word(8..16), word(16..24));
        if n != sidecar.n_rows || m != sidecar.n_cols || m != sidecar.columns.len() || n != sidecar.windows.len() {
            return Err(Error::format(&bin_path, "shape disagrees with sidecar"));
        }
        let mut raw = vec![0u8; n * m * 8];
        bin.read_exact(&mut raw)?;
        let mut values = Array2::zeros((n, m));
        for (k, chunk) in raw.chunks_exact(8).enumerate() {
            let (col, row) = (k / n.max(1), k % n.max(1));
            values[[row, col]] = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        Ok(FeatureMatrix { values, columns: sidecar.columns, rows: sidecar.windows })
    }

    /// Plain CSV dump for small runs: window metadata then one column per
    /// feature.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let mut header = vec!["log_id".to_string(), "start".into(), "label".into()];
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        w.write_record(&header)?;
        for (win, row) in self.rows.iter().zip(self.values.rows()) {
            let mut rec = vec![win.log_id.clone(), win.start.to_string(), win.label.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
