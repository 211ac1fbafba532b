use std::path::Path;

use rayon::prelude::*;

use telemine_core::csv_io::read_aligned_csv_file;
use telemine_core::eval::{split, Partition, Protocol, SplitAssignment};
use telemine_core::ingest::StandardizationStats;
use telemine_core::telemetry::DatasetManifest;
use telemine_core::windowing::sample_spans;
use telemine_core::{featurize as describe_windows, make_window_set, AlignedLog, FeatureMatrix, WindowSet};

use crate::config::Config;
use crate::error::{CliError, Result};
use crate::io::{create, read_json, reset_dir, write_json};
use crate::layout::{split_key, RunLayout};

/// Feature artifacts of one partition of the windows.
#[derive(Debug, Clone)]
pub struct SplitFeatures {
    pub protocol: Protocol,
    /// `shared` or `seed<k>`.
    pub key: String,
    pub assignment: SplitAssignment,
    pub features: FeatureMatrix,
}

impl SplitFeatures {
    pub fn rows(&self, part: Partition) -> Vec<usize> {
        self.assignment.indices(part)
    }

    pub fn load(layout: &RunLayout, protocol: Protocol, seed: u64) -> Result<Self> {
        let dir = layout.split_dir(protocol, seed);
        let split_path = dir.join("split.json");
        for p in [&split_path, &dir.join("features.bin"), &dir.join("features.json")] {
            if !p.is_file() {
                return Err(CliError::MissingArtifact { what: "feature file", path: p.clone(), producer: "featurize" });
            }
        }
        let assignment: SplitAssignment = read_json(&split_path)?;
        let features = FeatureMatrix::load(&dir, "features")?;
        if assignment.partitions.len() != features.n_rows() {
            return Err(CliError::Data(format!(
                "{}: split covers {} windows but the feature file has {}",
                dir.display(),
                assignment.partitions.len(),
                features.n_rows()
            )));
        }
        Ok(Self { protocol, key: split_key(protocol, seed), assignment, features })
    }
}

pub fn load_manifest(layout: &RunLayout) -> Result<DatasetManifest> {
    let path = layout.manifest();
    if !path.is_file() {
        return Err(CliError::MissingArtifact { what: "dataset manifest", path, producer: "prepare" });
    }
    read_json(&path)
}

/// Reads the prepared (imputed, unstandardized) logs in manifest order.
pub fn load_aligned_logs(layout: &RunLayout, manifest: &DatasetManifest) -> Result<Vec<AlignedLog>> {
    let entries: Vec<_> = manifest.usable().collect();
    entries
        .par_iter()
        .map(|e| {
            let path = layout.aligned_log(&e.log_id);
            if !path.is_file() {
                return Err(CliError::MissingArtifact { what: "aligned log", path, producer: "prepare" });
            }
            let log = read_aligned_csv_file(&path, &e.log_id, manifest.rate_hz)?;
            if log.channels != manifest.channels {
                return Err(CliError::Data(format!("{}: channels differ from the manifest", path.display())));
            }
            Ok(log)
        })
        .collect()
}

/// Standardizes every log with statistics of the training windows' samples.
pub fn standardize_for_split(
    logs: &[AlignedLog],
    ws: &WindowSet,
    assignment: &SplitAssignment,
) -> Result<(StandardizationStats, Vec<AlignedLog>)> {
    let train = assignment.indices(Partition::Train);
    let spans = sample_spans(train.iter().map(|&i| &ws.windows[i]), &ws.spec);
    let sources: Vec<(&AlignedLog, &[std::ops::Range<usize>])> =
        logs.iter().filter_map(|l| spans.get(&l.log_id).map(|r| (l, r.as_slice()))).collect();
    if sources.is_empty() {
        return Err(CliError::Data("the training partition is empty".into()));
    }
    let stats = StandardizationStats::fit(sources.iter().copied())?;
    let standardized = logs.par_iter().map(|l| stats.apply(l)).collect::<Result<Vec<_>, _>>()?;
    Ok((stats, standardized))
}

fn write_split(dir: &Path, stats: &StandardizationStats, sf: &SplitFeatures) -> Result<()> {
    reset_dir(dir)?;
    write_json(&dir.join("split.json"), &sf.assignment)?;
    write_json(&dir.join("standardizer.json"), stats)?;
    sf.features.save(dir, "features")?;
    Ok(())
}

/// Windows the prepared logs, then for every protocol (and seed, where the
/// partition depends on it) splits, standardizes with training statistics
/// and computes the configured descriptor groups.
pub fn featurize(cfg: &Config) -> Result<Vec<SplitFeatures>> {
    let layout = RunLayout::new(&cfg.run.out);
    let manifest = load_manifest(&layout)?;
    let logs = load_aligned_logs(&layout, &manifest)?;
    let ws = make_window_set(&logs, &cfg.window.spec())?;
    if ws.is_empty() {
        return Err(CliError::Data("no windows".into()));
    }
    ws.write_index_csv(create(&layout.window_index())?)?;

    let mut out = Vec::new();
    for &protocol in &cfg.split.protocols {
        let seeds: Vec<u64> = if protocol.is_seeded() { cfg.split.seeds.clone() } else { vec![cfg.split.seeds[0]] };
        for seed in seeds {
            let assignment = split(protocol, &ws, cfg.split.fractions, seed)?;
            let (stats, standardized) = standardize_for_split(&logs, &ws, &assignment)?;
            let features = describe_windows(&ws, &standardized, &cfg.features.groups)?;
            let sf = SplitFeatures { protocol, key: split_key(protocol, seed), assignment, features };
            write_split(&layout.split_dir(protocol, seed), &stats, &sf)?;
            out.push(sf);
        }
    }
    Ok(out)
}
