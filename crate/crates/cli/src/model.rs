//! Saved detector files.

use std::path::Path;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use telemine_baselines::{LinearSgd, PcaDetector};
use telemine_core::eval::Protocol;
use telemine_core::DescriptorGroup;
use telemine_gbdt::BoostedModel;

use crate::config::Method;
use crate::error::{CliError, Result};
use crate::io::{read_json, write_json};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Detector {
    Gbdt(BoostedModel),
    Pca(PcaDetector),
    LinearSgd(LinearSgd),
}

impl Detector {
    /// Window scores, higher is more anomalous. PCA residuals are min-max
    /// scaled over the scored rows.
    pub fn score(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        Ok(match self {
            Detector::Gbdt(m) => m.predict_scores(x)?,
            Detector::Pca(m) => m.score(x)?,
            Detector::LinearSgd(m) => m.score(x)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub method: Method,
    pub protocol: Protocol,
    pub seed: u64,
    /// Descriptor groups of the input columns.
    pub groups: Vec<DescriptorGroup>,
    /// Input column names, in order.
    pub columns: Vec<String>,
    pub detector: Detector,
}

impl ModelFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(CliError::MissingArtifact { what: "model", path: path.to_path_buf(), producer: "train" });
        }
        let m: ModelFile = read_json(path)?;
        if m.schema_version != MODEL_SCHEMA_VERSION {
            return Err(CliError::Data(format!(
                "{}: unsupported model schema version {}",
                path.display(),
                m.schema_version
            )));
        }
        Ok(m)
    }
}
