use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use telemine_core::csv_io::{read_raw_csv_file, write_aligned_csv_file};
use telemine_core::ingest::{conform_channels, impute, resample_to_grid, select_channels};
use telemine_core::telemetry::{validate_aligned_log, DatasetManifest, ManifestEntry};
use telemine_core::AlignedLog;

use crate::config::Config;
use crate::error::{CliError, Result};
use crate::io::{reset_dir, write_json};
use crate::layout::RunLayout;

enum Ingested {
    Usable(AlignedLog),
    Dropped { rows: usize, reason: String },
}

fn ingest_one(path: &Path, log_id: &str, cfg: &Config) -> Ingested {
    let raw = match read_raw_csv_file(path, log_id) {
        Ok(r) => r,
        Err(e) => return Ingested::Dropped { rows: 0, reason: format!("unparseable: {e}") },
    };
    let rows = raw.rows.len();
    if !raw.has_labels {
        return Ingested::Dropped { rows, reason: "no label column".into() };
    }
    let aligned = match resample_to_grid(&raw, cfg.data.rate_hz) {
        Ok(a) => a,
        Err(e) => return Ingested::Dropped { rows, reason: e.to_string() },
    };
    let need = cfg.window.spec().span();
    if aligned.len() < need {
        return Ingested::Dropped {
            rows,
            reason: format!("{} aligned samples, fewer than window length plus horizon ({need})", aligned.len()),
        };
    }
    Ingested::Usable(aligned)
}

/// Channels with at least one non-missing sample.
fn present(log: &AlignedLog) -> BTreeSet<String> {
    log.channels
        .iter()
        .zip(log.data.columns())
        .filter(|(_, col)| col.iter().any(|v| v.is_finite()))
        .map(|(c, _)| c.clone())
        .collect()
}

fn raw_files(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    if !dir.is_dir() {
        return Err(CliError::MissingArtifact {
            what: "raw log directory",
            path: dir.to_path_buf(),
            producer: "synth",
        });
    }
    let mut files: Vec<(String, PathBuf)> = fs::read_dir(dir)
        .map_err(CliError::io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
        .filter_map(|p| Some((p.file_stem()?.to_str()?.to_string(), p)))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Data(format!("no .csv logs in {}", dir.display())));
    }
    Ok(files)
}

/// Ingests every raw table, filters channels by coverage, imputes, and writes
/// the aligned logs plus the manifest. Logs are not standardized here: the
/// statistics depend on the split and are fitted by `featurize`.
pub fn prepare(cfg: &Config) -> Result<DatasetManifest> {
    let layout = RunLayout::new(&cfg.run.out);
    let files = raw_files(&cfg.raw_dir())?;
    let ingested: Vec<Ingested> = files.par_iter().map(|(id, path)| ingest_one(path, id, cfg)).collect();

    let usable: Vec<&AlignedLog> = ingested
        .iter()
        .filter_map(|i| match i {
            Ingested::Usable(a) => Some(a),
            Ingested::Dropped { .. } => None,
        })
        .collect();
    if usable.is_empty() {
        return Err(CliError::Data(format!("no usable logs in {}", cfg.raw_dir().display())));
    }
    let presence: Vec<BTreeSet<String>> = usable.iter().map(|l| present(l)).collect();
    let channels = select_channels(&presence, cfg.data.coverage_threshold)?;

    let cleaned: Vec<AlignedLog> = usable.par_iter().map(|l| impute(&conform_channels(l, &channels))).collect();
    for log in &cleaned {
        if let Some(v) = validate_aligned_log(log).first() {
            return Err(CliError::Data(format!("log `{}` failed validation: {v}", log.log_id)));
        }
    }

    reset_dir(&layout.aligned_dir())?;
    cleaned.par_iter().try_for_each(|log| write_aligned_csv_file(log, &layout.aligned_log(&log.log_id)))?;

    let mut next = cleaned.iter();
    let logs = files
        .iter()
        .zip(&ingested)
        .map(|((id, path), ing)| match ing {
            Ingested::Usable(_) => {
                let log = next.next().expect("one cleaned log per usable entry");
                ManifestEntry {
                    log_id: id.clone(),
                    path: path.display().to_string(),
                    row_count: log.len(),
                    usable: true,
                    drop_reason: None,
                }
            }
            Ingested::Dropped { rows, reason } => ManifestEntry {
                log_id: id.clone(),
                path: path.display().to_string(),
                row_count: *rows,
                usable: false,
                drop_reason: Some(reason.clone()),
            },
        })
        .collect();
    let manifest =
        DatasetManifest { logs, channels, coverage_threshold: cfg.data.coverage_threshold, rate_hz: cfg.data.rate_hz };
    write_json(&layout.manifest(), &manifest)?;
    Ok(manifest)
}
