//! Run-directory layout.
//!
//! ```text
//! <out>/config/<command>.toml                  effective config per command
//! <out>/dataset/{raw,truth}/, channel_families.csv      synth
//! <out>/prepared/manifest.json, aligned/<log>.csv       prepare
//! <out>/features/windows.csv                            featurize
//! <out>/features/<protocol>/<split>/{split,standardizer}.json, features.{bin,json}
//! <out>/models/<protocol>/seed<k>/<method>.json         train
//! <out>/scores/<protocol>/seed<k>/<method>.csv          evaluate
//! <out>/reports/<protocol>/seed<k>/<method>.json, <method>_pr.csv, aggregate.csv
//! <out>/ablation/<variant>/<protocol>/seed<k>/report.json, ablation.csv
//! <out>/importance/importance.{csv,json}
//! ```
//!
//! `<split>` is `shared` for protocols whose partition ignores the seed and
//! `seed<k>` otherwise.

use std::path::{Path, PathBuf};

use telemine_core::eval::Protocol;

use crate::config::Method;

#[derive(Debug, Clone)]
pub struct RunLayout {
    pub root: PathBuf,
}

pub fn split_key(protocol: Protocol, seed: u64) -> String {
    if protocol.is_seeded() {
        format!("seed{seed}")
    } else {
        "shared".to_string()
    }
}

fn run_dir(base: PathBuf, protocol: Protocol, seed: u64) -> PathBuf {
    base.join(protocol.name()).join(format!("seed{seed}"))
}

impl RunLayout {
    pub fn new(root: impl AsRef<Path>) -> Self {
        Self { root: root.as_ref().to_path_buf() }
    }

    pub fn frozen_config(&self, command: &str) -> PathBuf {
        self.root.join("config").join(format!("{command}.toml"))
    }

    pub fn prepared(&self) -> PathBuf {
        self.root.join("prepared")
    }

    pub fn manifest(&self) -> PathBuf {
        self.prepared().join("manifest.json")
    }

    pub fn aligned_dir(&self) -> PathBuf {
        self.prepared().join("aligned")
    }

    pub fn aligned_log(&self, log_id: &str) -> PathBuf {
        self.aligned_dir().join(format!("{log_id}.csv"))
    }

    pub fn features(&self) -> PathBuf {
        self.root.join("features")
    }

    pub fn window_index(&self) -> PathBuf {
        self.features().join("windows.csv")
    }

    pub fn split_dir(&self, protocol: Protocol, seed: u64) -> PathBuf {
        self.features().join(protocol.name()).join(split_key(protocol, seed))
    }

    pub fn model(&self, protocol: Protocol, seed: u64, method: Method) -> PathBuf {
        run_dir(self.root.join("models"), protocol, seed).join(format!("{method}.json"))
    }

    pub fn scores(&self, protocol: Protocol, seed: u64, method: Method) -> PathBuf {
        run_dir(self.root.join("scores"), protocol, seed).join(format!("{method}.csv"))
    }

    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn report(&self, protocol: Protocol, seed: u64, method: Method) -> PathBuf {
        run_dir(self.reports(), protocol, seed).join(format!("{method}.json"))
    }

    pub fn pr_curve(&self, protocol: Protocol, seed: u64, method: Method) -> PathBuf {
        run_dir(self.reports(), protocol, seed).join(format!("{method}_pr.csv"))
    }

    pub fn aggregate(&self) -> PathBuf {
        self.reports().join("aggregate.csv")
    }

    pub fn ablation(&self) -> PathBuf {
        self.root.join("ablation")
    }

    pub fn ablation_report(&self, variant: &str, protocol: Protocol, seed: u64) -> PathBuf {
        run_dir(self.ablation().join(variant), protocol, seed).join("report.json")
    }

    pub fn ablation_table(&self) -> PathBuf {
        self.ablation().join("ablation.csv")
    }

    pub fn importance(&self) -> PathBuf {
        self.root.join("importance")
    }
}
