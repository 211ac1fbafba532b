//! Leakage-aware partitioning of a window set.
//!
//! * Chronological: per log, the first `floor(f_train n)` windows train, the
//!   next `floor(f_valid n)` validate, the rest test.
//! * Purged chronological: the chronological split, then every window whose
//!   labeling span `[a, a + L + H)` touches `[b - E, b + E)` around a partition
//!   boundary `b` is marked purged. `b` is the first sample of the first window
//!   of the later partition. Fractions are applied before purging.
//! * Leave-log-out: whole logs, shuffled by seed, assigned by cumulative
//!   window counts to the cut points closest to the target fractions.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::windowing::WindowSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Valid,
    Test,
    Purged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Chronological,
    PurgedChronological,
    LeaveLogOut,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Chronological, Protocol::PurgedChronological, Protocol::LeaveLogOut];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Chronological => "chronological",
            Protocol::PurgedChronological => "purged_chronological",
            Protocol::LeaveLogOut => "leave_log_out",
        }
    }

    /// Whether the partition depends on the seed.
    pub fn is_seeded(self) -> bool {
        matches!(self, Protocol::LeaveLogOut)
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chronological" | "chrono" => Ok(Protocol::Chronological),
            "purged_chronological" | "purged" => Ok(Protocol::PurgedChronological),
            "leave_log_out" | "llo" => Ok(Protocol::LeaveLogOut),
            _ => Err(Error::ConfigInvalid(format!(
                "unknown protocol `{s}` (expected chronological, purged_chronological or leave_log_out)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.70, valid: 0.15, test: 0.15 }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.valid, self.test];
        if parts.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::ConfigInvalid(format!("split fractions must lie in [0, 1], got {parts:?}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::ConfigInvalid(format!("split fractions must sum to 1, got {parts:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub protocol: Protocol,
    pub seed: Option<u64>,
    pub fractions: SplitFractions,
    /// Embargo half-width in samples (purged protocol only).
    pub embargo: Option<usize>,
    /// One entry per window of the split window set.
    pub partitions: Vec<Partition>,
}

impl SplitAssignment {
    pub fn indices(&self, part: Partition) -> Vec<usize> {
        (0..self.partitions.len()).filter(|&i| self.partitions[i] == part).collect()
    }

    pub fn count(&self, part: Partition) -> usize {
        self.partitions.iter().filter(|&&p| p == part).count()
    }
}

fn floor_share(n: usize, fraction: f64) -> usize {
    ((n as f64) * fraction + 1e-9).floor() as usize
}

pub fn split_chronological(ws: &WindowSet, fractions: SplitFractions) -> Result<SplitAssignment> {
    fractions.validate()?;
    let mut partitions = vec![Partition::Test; ws.len()];
    for (_, range) in ws.log_ranges() {
        let n = range.len();
        let n_train = floor_share(n, fractions.train);
        let n_valid = floor_share(n, fractions.valid).min(n - n_train);
        for (k, i) in range.enumerate() {
            partitions[i] = if k < n_train {
                Partition::Train
            } else if k < n_train + n_valid {
                Partition::Valid
            } else {
                Partition::Test
            };
        }
    }
    Ok(SplitAssignment { protocol: Protocol::Chronological, seed: None, fractions, embargo: None, partitions })
}

pub fn split_purged(ws: &WindowSet, fractions: SplitFractions, embargo: usize) -> Result<SplitAssignment> {
    let mut split = split_chronological(ws, fractions)?;
    let span = ws.spec.span();
    for (_, range) in ws.log_ranges() {
        let boundaries: Vec<usize> = range
            .clone()
            .skip(1)
            .filter(|&i| split.partitions[i] != split.partitions[i - 1])
            .map(|i| ws.windows[i].start)
            .collect();
        for i in range {
            let a = ws.windows[i].start;
            let touches = boundaries.iter().any(|&b| {
                let zone_lo = b.saturating_sub(embargo);
                let zone_hi = b + embargo;
                zone_lo < zone_hi && a < zone_hi && zone_lo < a + span
            });
            if touches {
                split.partitions[i] = Partition::Purged;
            }
        }
    }
    split.protocol = Protocol::PurgedChronological;
    split.embargo = Some(embargo);
    Ok(split)
}

pub fn split_leave_log_out(ws: &WindowSet, fractions: SplitFractions, seed: u64) -> Result<SplitAssignment> {
    fractions.validate()?;
    let logs = ws.log_ranges();
    let n = logs.len();
    if n < 3 {
        return Err(Error::TooFewLogs(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| logs[a].0.cmp(&logs[b].0));
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let total = ws.len() as f64;
    let mut cumulative = vec![0usize; n + 1];
    for (k, &li) in order.iter().enumerate() {
        cumulative[k + 1] = cumulative[k] + logs[li].1.len();
    }
    // Cut after `k` logs, keeping every partition non-empty.
    let closest = |lo: usize, hi: usize, target: f64| {
        (lo..=hi)
            .min_by(|&a, &b| {
                let da = (cumulative[a] as f64 / total - target).abs();
                let db = (cumulative[b] as f64 / total - target).abs();
                da.total_cmp(&db).then(a.cmp(&b))
            })
            .expect("non-empty cut range")
    };
    let k1 = closest(1, n - 2, fractions.train);
    let k2 = closest(k1 + 1, n - 1, fractions.train + fractions.valid);

    let mut partitions = vec![Partition::Test; ws.len()];
    for (k, &li) in order.iter().enumerate() {
        let part = if k < k1 {
            Partition::Train
        } else if k < k2 {
            Partition::Valid
        } else {
            Partition::Test
        };
        for i in logs[li].1.clone() {
            partitions[i] = part;
        }
    }
    Ok(SplitAssignment { protocol: Protocol::LeaveLogOut, seed: Some(seed), fractions, embargo: None, partitions })
}

/// Dispatches on protocol; the purged protocol uses an embargo of `L + H`.
pub fn split(protocol: Protocol, ws: &WindowSet, fractions: SplitFractions, seed: u64) -> Result<SplitAssignment> {
    match protocol {
        Protocol::Chronological => split_chronological(ws, fractions),
        Protocol::PurgedChronological => split_purged(ws, fractions, ws.spec.span()),
        Protocol::LeaveLogOut => split_leave_log_out(ws, fractions, seed),
    }
}
