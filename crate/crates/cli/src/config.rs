//! Run configuration.
//!
//! A TOML document with the tables `[run]`, `[data]`, `[window]`,
//! `[features]`, `[split]`, `[train]` (with `[train.gbdt]`, `[train.pca]`,
//! `[train.linear_sgd]`), `[ablation]`, `[importance]` and `[synth]`. Every
//! key is optional and unknown keys are rejected. Relative paths resolve
//! against the directory holding the config file. Command-line flags
//! override the corresponding keys.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use telemine_baselines::{SgdConfig, DEFAULT_VARIANCE_TARGET};
use telemine_core::eval::{Protocol, SplitFractions};
use telemine_core::synth::SynthConfig;
use telemine_core::telemetry::{DEFAULT_COVERAGE_THRESHOLD, DEFAULT_RATE_HZ};
use telemine_core::{DescriptorGroup, WindowSpec};
use telemine_gbdt::BoostConfig;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub run: RunConfig,
    pub data: DataConfig,
    pub window: WindowConfig,
    pub features: FeatureConfig,
    pub split: SplitConfig,
    pub train: TrainConfig,
    pub ablation: AblationConfig,
    pub importance: ImportanceConfig,
    pub synth: SynthConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Run directory holding every artifact.
    pub out: PathBuf,
    /// Worker threads; 0 lets the pool pick one per core.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { out: PathBuf::from("run"), workers: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Directory of raw per-flight CSV tables. Defaults to `<out>/dataset/raw`,
    /// where `synth` writes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_dir: Option<PathBuf>,
    pub rate_hz: f64,
    pub coverage_threshold: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { raw_dir: None, rate_hz: DEFAULT_RATE_HZ, coverage_threshold: DEFAULT_COVERAGE_THRESHOLD }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub length: usize,
    pub stride: usize,
    pub horizon: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        let s = WindowSpec::default();
        Self { length: s.length, stride: s.stride, horizon: s.horizon }
    }
}

impl WindowConfig {
    pub fn spec(&self) -> WindowSpec {
        WindowSpec { length: self.length, stride: self.stride, horizon: self.horizon }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Descriptor groups computed by `featurize`.
    pub groups: Vec<DescriptorGroup>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { groups: DescriptorGroup::ALL.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub protocols: Vec<Protocol>,
    pub seeds: Vec<u64>,
    pub fractions: SplitFractions,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            protocols: vec![Protocol::Chronological],
            seeds: vec![0, 1, 2, 3, 4],
            fractions: SplitFractions::default(),
        }
    }
}

/// Detectors the pipeline can train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Boosted trees on the configured descriptor groups.
    Tsboost,
    /// Boosted trees on per-channel mean and std only.
    MomentsOnly,
    Pca,
    LinearSgd,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Tsboost, Method::MomentsOnly, Method::Pca, Method::LinearSgd];

    pub fn name(self) -> &'static str {
        match self {
            Method::Tsboost => "tsboost",
            Method::MomentsOnly => "moments_only",
            Method::Pca => "pca",
            Method::LinearSgd => "linear_sgd",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| CliError::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcaConfig {
    pub variance_target: f64,
}

impl Default for PcaConfig {
    fn default() -> Self {
        Self { variance_target: DEFAULT_VARIANCE_TARGET }
    }
}

/// Detector settings. The per-run seed replaces `gbdt.seed` and
/// `linear_sgd.seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub methods: Vec<Method>,
    pub gbdt: BoostConfig,
    pub pca: PcaConfig,
    pub linear_sgd: SgdConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            gbdt: BoostConfig::default(),
            pca: PcaConfig::default(),
            linear_sgd: SgdConfig::default(),
        }
    }
}

pub const DEFAULT_VARIANTS: [&str; 6] =
    ["full", "moments_only", "no_dynamics", "no_autocorr", "no_quantiles", "no_endpoints"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    /// Variant names: `full`, `moments_only`, `no_<group>` (with `no_endpoints`
    /// and `no_extrema` as short forms), or a key of `custom`.
    pub variants: Vec<String>,
    /// Extra variants given as explicit group lists.
    pub custom: BTreeMap<String, Vec<DescriptorGroup>>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self { variants: DEFAULT_VARIANTS.iter().map(|s| s.to_string()).collect(), custom: BTreeMap::new() }
    }
}

impl AblationConfig {
    /// Descriptor groups of a variant.
    pub fn groups(&self, variant: &str) -> Result<Vec<DescriptorGroup>> {
        if let Some(g) = self.custom.get(variant) {
            return Ok(g.clone());
        }
        let all = DescriptorGroup::ALL.to_vec();
        let removed = match variant {
            "full" => return Ok(all),
            "moments_only" => return Ok(vec![DescriptorGroup::Moments]),
            "no_endpoints" => DescriptorGroup::EndpointsDrift,
            "no_extrema" => DescriptorGroup::ExtremaRange,
            other => match other.strip_prefix("no_").map(DescriptorGroup::from_str) {
                Some(Ok(g)) => g,
                _ => return Err(CliError::Config(format!("ablation.variants: unknown variant `{variant}`"))),
            },
        };
        Ok(all.into_iter().filter(|&g| g != removed).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImportanceConfig {
    /// CSV with header `channel,family`. Defaults to
    /// `<out>/dataset/channel_families.csv`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family_map: Option<PathBuf>,
}

/// Flag values that override config keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub protocol: Option<Protocol>,
    pub workers: Option<usize>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl Config {
    /// Parses a TOML document; errors name the offending key path.
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| CliError::Config(e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner().message().trim()))
        })
    }

    /// Reads `path`, resolving relative paths inside it against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| {
            CliError::Config(format!("{}: {}", path.display(), e.to_string().trim_start_matches("config error: ")))
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.run.out = resolve(base, &cfg.run.out);
        cfg.data.raw_dir = cfg.data.raw_dir.map(|p| resolve(base, &p));
        cfg.importance.family_map = cfg.importance.family_map.map(|p| resolve(base, &p));
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.run.out = out.clone();
        }
        if let Some(seed) = o.seed {
            self.split.seeds = vec![seed];
        }
        if let Some(p) = o.protocol {
            self.split.protocols = vec![p];
        }
        if let Some(w) = o.workers {
            self.run.workers = w;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |key: &str, msg: String| Err(CliError::Config(format!("{key}: {msg}")));
        if !(self.data.rate_hz.is_finite() && self.data.rate_hz > 0.0) {
            return fail("data.rate_hz", format!("must be > 0, got {}", self.data.rate_hz));
        }
        if !(0.0..=1.0).contains(&self.data.coverage_threshold) {
            return fail(
                "data.coverage_threshold",
                format!("must lie in [0, 1], got {}", self.data.coverage_threshold),
            );
        }
        if self.window.length < 2 {
            return fail("window.length", format!("must be >= 2, got {}", self.window.length));
        }
        if self.window.stride < 1 {
            return fail("window.stride", "must be >= 1".into());
        }
        if self.features.groups.is_empty() {
            return fail("features.groups", "must name at least one group".into());
        }
        if self.split.protocols.is_empty() {
            return fail("split.protocols", "must name at least one protocol".into());
        }
        if self.split.seeds.is_empty() {
            return fail("split.seeds", "must list at least one seed".into());
        }
        let mut seeds = self.split.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.split.seeds.len() {
            return fail("split.seeds", "seeds must be distinct".into());
        }
        if let Err(e) = self.split.fractions.validate() {
            return fail("split.fractions", e.to_string());
        }
        if self.train.methods.is_empty() {
            return fail("train.methods", "must name at least one method".into());
        }
        if let Err(e) = self.train.gbdt.validate() {
            return fail("train.gbdt", e.to_string());
        }
        let v = self.train.pca.variance_target;
        if !(v > 0.0 && v <= 1.0) {
            return fail("train.pca.variance_target", format!("must lie in (0, 1], got {v}"));
        }
        if let Err(e) = self.train.linear_sgd.validate() {
            return fail("train.linear_sgd", e.to_string());
        }
        if self.ablation.variants.is_empty() {
            return fail("ablation.variants", "must name at least one variant".into());
        }
        for (name, groups) in &self.ablation.custom {
            if groups.is_empty() {
                return fail(&format!("ablation.custom.{name}"), "must name at least one group".into());
            }
        }
        for v in &self.ablation.variants {
            self.ablation.groups(v)?;
        }
        if let Err(e) = self.synth.validate() {
            return fail("synth", e.to_string());
        }
        Ok(())
    }

    pub fn raw_dir(&self) -> PathBuf {
        self.data.raw_dir.clone().unwrap_or_else(|| self.run.out.join("dataset").join("raw"))
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.run.out.join("dataset")
    }

    pub fn family_map(&self) -> PathBuf {
        self.importance.family_map.clone().unwrap_or_else(|| self.dataset_dir().join("channel_families.csv"))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))
    }
}
