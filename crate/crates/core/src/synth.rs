//! Deterministic synthetic flight logs with injected anomaly families.
//!
//! Each channel is a stationary AR(1) process whose coefficient, noise scale
//! and offset are drawn once per master seed and shared by every log. Anomaly
//! intervals are injected only into the first `causal_channels` channels so
//! the remaining channels act as distractors.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csv_io::write_raw_csv_file;
use crate::error::{Error, Result};
use crate::telemetry::{AnomalyInterval, RawLog, RawRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    LevelShift,
    Drift,
    Volatility,
    AutocorrBreak,
    MultiChannel,
}

impl Family {
    pub const ALL: [Family; 5] =
        [Family::LevelShift, Family::Drift, Family::Volatility, Family::AutocorrBreak, Family::MultiChannel];

    pub fn name(self) -> &'static str {
        match self {
            Family::LevelShift => "level_shift",
            Family::Drift => "drift",
            Family::Volatility => "volatility",
            Family::AutocorrBreak => "autocorr_break",
            Family::MultiChannel => "multi_channel",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::ConfigInvalid(format!("unknown anomaly family `{s}`")))
    }
}

/// Relative sampling weights of the anomaly families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyMix {
    pub level_shift: f64,
    pub drift: f64,
    pub volatility: f64,
    pub autocorr_break: f64,
    pub multi_channel: f64,
}

impl Default for FamilyMix {
    fn default() -> Self {
        Self { level_shift: 1.0, drift: 1.0, volatility: 1.0, autocorr_break: 1.0, multi_channel: 1.0 }
    }
}

impl FamilyMix {
    fn weights(&self) -> [(Family, f64); 5] {
        [
            (Family::LevelShift, self.level_shift),
            (Family::Drift, self.drift),
            (Family::Volatility, self.volatility),
            (Family::AutocorrBreak, self.autocorr_break),
            (Family::MultiChannel, self.multi_channel),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub log_count: usize,
    pub samples_per_log: usize,
    pub channels: usize,
    /// Channels `0..causal_channels` receive anomalies.
    pub causal_channels: usize,
    /// Target fraction of anomalous samples per log.
    pub anomaly_rate: f64,
    pub interval_min: usize,
    pub interval_max: usize,
    pub family_mix: FamilyMix,
    pub ar_min: f64,
    pub ar_max: f64,
    pub noise_scale: f64,
    /// Effect size in units of the channel's stationary standard deviation.
    pub magnitude: f64,
    pub missing_rate: f64,
    pub rate_hz: f64,
    /// Timestamp jitter as a fraction of the sampling step, in `[0, 0.25)`.
    pub jitter: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            log_count: 20,
            samples_per_log: 3000,
            channels: 12,
            causal_channels: 8,
            anomaly_rate: 0.03,
            interval_min: 40,
            interval_max: 100,
            family_mix: FamilyMix::default(),
            ar_min: 0.5,
            ar_max: 0.9,
            noise_scale: 1.0,
            magnitude: 2.0,
            missing_rate: 0.01,
            rate_hz: 10.0,
            jitter: 0.1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::ConfigInvalid(m));
        for (name, v) in [("anomaly_rate", self.anomaly_rate), ("missing_rate", self.missing_rate)] {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if self.channels < 2 {
            return fail(format!("channels must be at least 2, got {}", self.channels));
        }
        if self.causal_channels == 0 || self.causal_channels > self.channels {
            return fail(format!("causal_channels must lie in [1, {}], got {}", self.channels, self.causal_channels));
        }
        if self.log_count == 0 || self.samples_per_log < 2 {
            return fail("log_count must be positive and samples_per_log at least 2".into());
        }
        if self.interval_min == 0 || self.interval_min > self.interval_max {
            return fail(format!(
                "interval bounds must satisfy 1 <= interval_min <= interval_max, got {}..{}",
                self.interval_min, self.interval_max
            ));
        }
        if !(-1.0 < self.ar_min && self.ar_min <= self.ar_max && self.ar_max < 1.0) {
            return fail(format!(
                "AR coefficients must satisfy -1 < ar_min <= ar_max < 1, got {}..{}",
                self.ar_min, self.ar_max
            ));
        }
        if !(self.noise_scale > 0.0 && self.rate_hz > 0.0 && self.magnitude >= 0.0) {
            return fail("noise_scale and rate_hz must be positive, magnitude non-negative".into());
        }
        if !(0.0..0.25).contains(&self.jitter) {
            return fail(format!("jitter must lie in [0, 0.25), got {}", self.jitter));
        }
        let w = self.family_mix.weights();
        if w.iter().any(|(_, x)| !(*x >= 0.0)) || w.iter().all(|(_, x)| *x == 0.0) {
            return fail("family_mix weights must be non-negative with a positive sum".into());
        }
        Ok(())
    }

    pub fn channel_names(&self) -> Vec<String> {
        let digits = self.channels.to_string().len().max(2);
        (0..self.channels).map(|c| format!("ch{c:0digits$}")).collect()
    }

    /// `causal` for anomaly-bearing channels, `distractor` otherwise.
    pub fn channel_families(&self) -> Vec<(String, String)> {
        self.channel_names()
            .into_iter()
            .enumerate()
            .map(|(c, name)| {
                let fam = if c < self.causal_channels { "causal" } else { "distractor" };
                (name, fam.to_string())
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthLog {
    pub raw: RawLog,
    /// Injected intervals in sample indices (inclusive end), sorted by start.
    pub intervals: Vec<AnomalyInterval>,
}

#[derive(Debug, Clone, Copy)]
struct ChannelParams {
    phi: f64,
    sigma: f64,
    offset: f64,
}

impl ChannelParams {
    fn stationary_std(&self) -> f64 {
        self.sigma / (1.0 - self.phi * self.phi).sqrt()
    }
}

fn log_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn channel_params(cfg: &SynthConfig) -> Vec<ChannelParams> {
    let mut rng = log_rng(cfg.seed, 0);
    (0..cfg.channels)
        .map(|_| ChannelParams {
            phi: rng.random_range(cfg.ar_min..=cfg.ar_max),
            sigma: cfg.noise_scale * rng.random_range(0.5..=1.5),
            offset: rng.random_range(-5.0..=5.0),
        })
        .collect()
}

/// Maps `u` in `[0, 1)` through the cumulative family mix.
fn pick_family(u: f64, mix: &FamilyMix) -> Family {
    let w = mix.weights();
    let total: f64 = w.iter().map(|(_, x)| x).sum();
    let mut u = u * total;
    for (f, x) in w {
        if u < x {
            return f;
        }
        u -= x;
    }
    w.iter().rev().find(|(_, x)| *x > 0.0).expect("positive weight").0
}

/// Stratified draw for the `slot`-th interval of log `index`: a golden-ratio
/// sequence over `index + slot * log_count`, shifted by a per-seed offset, so
/// family counts across the dataset track the mix closely.
fn family_quantile(offset: f64, index: usize, slot: usize, log_count: usize) -> f64 {
    const GOLDEN: f64 = 0.618_033_988_749_894_9;
    let n = (index + slot * log_count) as f64;
    (offset + n * GOLDEN).fract()
}

/// Places non-overlapping intervals whose lengths sum exactly to the target
/// sample count; the last interval is truncated. Intervals keep a gap of at
/// least `interval_max` samples between them.
fn place_intervals(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> Vec<(usize, usize)> {
    let n = cfg.samples_per_log;
    let mut remaining = (cfg.anomaly_rate * n as f64).round() as usize;
    let mut placed: Vec<(usize, usize)> = Vec::new();
    let mut attempts = 0;
    while remaining > 0 && attempts < 1000 {
        attempts += 1;
        let len = rng.random_range(cfg.interval_min..=cfg.interval_max).min(remaining).min(n);
        let start = rng.random_range(0..=n - len);
        let end = start + len - 1;
        let gap = cfg.interval_max;
        let clear = placed.iter().all(|&(s, e)| end + gap < s || e + gap < start);
        if clear {
            placed.push((start, end));
            remaining -= len;
        }
    }
    placed.sort_unstable();
    placed
}

/// Causal channels a family touches, like a fault confined to one
/// subsystem. Each single-channel family owns one channel (wrapping over the
/// causal pool); the multi-channel family shifts three channels spread across
/// the pool together.
pub fn home_channels(family: Family, causal: usize) -> Vec<usize> {
    let mut out: Vec<usize> = match family {
        Family::MultiChannel => (0..3).map(|i| i * causal / 3).collect(),
        other => vec![(2 * other as usize) % causal],
    };
    out.sort_unstable();
    out.dedup();
    out
}

struct Effect {
    channels: Vec<usize>,
    family: Family,
    start: usize,
    end: usize,
    sign: f64,
}

fn generate_log(cfg: &SynthConfig, params: &[ChannelParams], family_offset: f64, index: usize) -> SynthLog {
    // stream layout: (log + 1) << 16 for placement, jitter and missingness;
    // that plus (channel + 1) for the channel's innovations
    let log_stream = (index as u64 + 1) << 16;
    let mut rng = log_rng(cfg.seed, log_stream);
    let n = cfg.samples_per_log;
    let d = cfg.channels;

    let effects: Vec<Effect> = place_intervals(&mut rng, cfg)
        .into_iter()
        .enumerate()
        .map(|(slot, (start, end))| {
            let u = family_quantile(family_offset, index, slot, cfg.log_count);
            let family = pick_family(u, &cfg.family_mix);
            let channels = home_channels(family, cfg.causal_channels);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            Effect { channels, family, start, end, sign }
        })
        .collect();

    let mut data = vec![vec![0.0f64; d]; n];
    for (c, p) in params.iter().enumerate() {
        let mut rng = log_rng(cfg.seed, log_stream | (c as u64 + 1));
        let s = p.stationary_std();
        let mut x: f64 = rng.sample::<f64, _>(StandardNormal) * s;
        for (t, row) in data.iter_mut().enumerate() {
            let (mut phi, mut sigma) = (p.phi, p.sigma);
            for e in effects.iter().filter(|e| e.start <= t && t <= e.end && e.channels.contains(&c)) {
                match e.family {
                    Family::Volatility => sigma *= 3.0,
                    Family::AutocorrBreak => phi = -phi,
                    _ => {}
                }
            }
            let eps: f64 = rng.sample(StandardNormal);
            if t > 0 {
                x = phi * x + sigma * eps;
            }
            let mut v = p.offset + x;
            for e in effects.iter().filter(|e| e.start <= t && t <= e.end && e.channels.contains(&c)) {
                let progress = (t - e.start + 1) as f64 / (e.end - e.start + 1) as f64;
                v += match e.family {
                    Family::LevelShift => e.sign * cfg.magnitude * s,
                    Family::Drift => e.sign * 1.5 * cfg.magnitude * s * progress,
                    Family::MultiChannel => e.sign * 0.8 * cfg.magnitude * s,
                    _ => 0.0,
                };
            }
            row[c] = v;
        }
    }

    let step = 1.0 / cfg.rate_hz;
    let mut rows = Vec::with_capacity(n);
    for (t, values) in data.into_iter().enumerate() {
        let jitter = if cfg.jitter > 0.0 { rng.random_range(-cfg.jitter..=cfg.jitter) * step } else { 0.0 };
        let family = effects.iter().find(|e| e.start <= t && t <= e.end).map(|e| e.family);
        let values = values
            .into_iter()
            .map(|v| (cfg.missing_rate == 0.0 || rng.random::<f64>() >= cfg.missing_rate).then_some(v))
            .collect();
        rows.push(RawRow {
            time: t as f64 * step + jitter,
            values,
            label: u8::from(family.is_some()),
            anomaly_type: family.map(|f| f.name().to_string()),
        });
    }
    let intervals = effects
        .iter()
        .map(|e| AnomalyInterval { start: e.start, end: e.end, family: Some(e.family.name().to_string()) })
        .collect();
    SynthLog {
        raw: RawLog { log_id: format!("synth_{index:03}"), channels: cfg.channel_names(), rows, has_labels: true },
        intervals,
    }
}

/// Generates `cfg.log_count` logs. Output does not depend on thread count.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<SynthLog>> {
    cfg.validate()?;
    let params = channel_params(cfg);
    let family_offset = log_rng(cfg.seed, 1).random::<f64>();
    Ok((0..cfg.log_count).into_par_iter().map(|i| generate_log(cfg, &params, family_offset, i)).collect())
}

/// Writes `raw/<log>.csv`, `truth/<log>.json` and `channel_families.csv`.
pub fn write_dataset(cfg: &SynthConfig, logs: &[SynthLog], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("raw"))?;
    fs::create_dir_all(dir.join("truth"))?;
    for log in logs {
        write_raw_csv_file(&log.raw, &dir.join("raw").join(format!("{}.csv", log.raw.log_id)))?;
        let truth = serde_json::to_string_pretty(&log.intervals)?;
        fs::write(dir.join("truth").join(format!("{}.json", log.raw.log_id)), truth + "\n")?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(dir.join("channel_families.csv"))?;
    w.write_record(["channel", "family"])?;
    for (channel, family) in cfg.channel_families() {
        w.write_record([channel, family])?;
    }
    w.flush()?;
    Ok(())
}
