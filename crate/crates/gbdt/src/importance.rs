//! Gain shares aggregated by feature family.

use std::collections::{BTreeMap, HashMap};

use crate::booster::BoostedModel;
use crate::error::{GbdtError, Result};

/// Family label for features missing from the grouping map.
pub const UNMAPPED: &str = "unmapped";

/// Share of total split gain per family. `family_of` maps feature names to
/// family labels; unmapped features fall into [`UNMAPPED`].
pub fn feature_gain_shares(model: &BoostedModel, family_of: &HashMap<String, String>) -> Result<BTreeMap<String, f64>> {
    let total: f64 = model.feature_gain.iter().sum();
    if !(total > 0.0) {
        return Err(GbdtError::NoSplits);
    }
    let mut shares: BTreeMap<String, f64> = BTreeMap::new();
    for (name, gain) in model.feature_names.iter().zip(&model.feature_gain) {
        let family = family_of.get(name).map_or(UNMAPPED, String::as_str);
        *shares.entry(family.to_string()).or_default() += gain;
    }
    for v in shares.values_mut() {
        *v /= total;
    }
    Ok(shares)
}

/// Mean of already-normalized share tables; a family absent from a table
/// counts as zero there.
pub fn average_shares(tables: &[BTreeMap<String, f64>]) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for t in tables {
        for (family, share) in t {
            *out.entry(family.clone()).or_default() += share;
        }
    }
    for v in out.values_mut() {
        *v /= tables.len() as f64;
    }
    out
}
