use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Serialize;

use telemine_core::eval::Protocol;
use telemine_gbdt::{average_shares, feature_gain_shares};

use crate::config::{Config, Method};
use crate::error::{CliError, Result};
use crate::io::{create, write_json};
use crate::layout::RunLayout;
use crate::model::{Detector, ModelFile};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunShares {
    pub protocol: Protocol,
    pub seed: u64,
    pub shares: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceReport {
    pub method: Method,
    pub runs: Vec<RunShares>,
    /// Mean over seeds within each protocol.
    pub per_protocol: BTreeMap<Protocol, BTreeMap<String, f64>>,
    /// Mean of the per-protocol tables.
    pub mean: BTreeMap<String, f64>,
}

/// Reads a `channel,family` CSV.
pub fn read_family_map(path: &Path) -> Result<HashMap<String, String>> {
    if !path.is_file() {
        return Err(CliError::MissingArtifact {
            what: "channel family map",
            path: path.to_path_buf(),
            producer: "synth",
        });
    }
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::Data(format!("{}: missing `{name}` column", path.display())))
    };
    let (c, f) = (col("channel")?, col("family")?);
    let mut out = HashMap::new();
    for rec in r.records() {
        let rec = rec?;
        out.insert(rec[c].trim().to_string(), rec[f].trim().to_string());
    }
    Ok(out)
}

/// Gain share per telemetry family of the boosted-tree detector, normalized
/// within each run, averaged over seeds per protocol, then over protocols.
pub fn importance(cfg: &Config) -> Result<ImportanceReport> {
    let layout = RunLayout::new(&cfg.run.out);
    let channel_family = read_family_map(&cfg.family_map())?;
    let mut runs = Vec::new();
    let mut per_protocol = BTreeMap::new();
    for &protocol in &cfg.split.protocols {
        let mut tables = Vec::new();
        for &seed in &cfg.split.seeds {
            let path = layout.model(protocol, seed, Method::Tsboost);
            let file = ModelFile::load(&path)?;
            let Detector::Gbdt(model) = &file.detector else {
                return Err(CliError::Data(format!("{}: not a boosted-tree model", path.display())));
            };
            let feature_family: HashMap<String, String> = model
                .feature_names
                .iter()
                .filter_map(|name| {
                    let channel = name.split("__").next()?;
                    Some((name.clone(), channel_family.get(channel)?.clone()))
                })
                .collect();
            let shares = feature_gain_shares(model, &feature_family)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            tables.push(shares.clone());
            runs.push(RunShares { protocol, seed, shares });
        }
        per_protocol.insert(protocol, average_shares(&tables));
    }
    let mean = average_shares(&per_protocol.values().cloned().collect::<Vec<_>>());
    let report = ImportanceReport { method: Method::Tsboost, runs, per_protocol, mean };

    let dir = layout.importance();
    write_json(&dir.join("importance.json"), &report)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(&dir.join("importance.csv"))?);
    let mut header = vec!["family".to_string()];
    header.extend(report.per_protocol.keys().map(|p| p.name().to_string()));
    header.push("mean".into());
    w.write_record(&header)?;
    for family in ranked(&report.mean) {
        let mut rec = vec![family.to_string()];
        rec.extend(report.per_protocol.values().map(|t| t.get(family).copied().unwrap_or(0.0).to_string()));
        rec.push(report.mean[family].to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(CliError::io(dir.join("importance.csv")))?;
    Ok(report)
}

/// Families by descending share, ties by name.
pub fn ranked(shares: &BTreeMap<String, f64>) -> Vec<&str> {
    let mut v: Vec<(&str, f64)> = shares.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    v.into_iter().map(|(k, _)| k).collect()
}
