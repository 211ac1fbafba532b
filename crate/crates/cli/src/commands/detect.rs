//! Training, scoring and reporting shared by `train`, `evaluate` and `ablate`.

use std::collections::BTreeMap;
use std::io::Write;

use ndarray::Axis;

use telemine_baselines::{LinearSgd, PcaDetector};
use telemine_core::eval::{
    aggregate_seeds, evaluate_scores, write_aggregate_csv, write_pr_csv, AggregateRow, EvalReport, Partition, Protocol,
    ScoredWindows, WindowPos,
};
use telemine_core::{DescriptorGroup, FeatureMatrix};

use crate::commands::featurize::SplitFeatures;
use crate::config::{Config, Method};
use crate::error::{CliError, Result};
use crate::io::{create, write_json};
use crate::layout::RunLayout;
use crate::model::{Detector, ModelFile, MODEL_SCHEMA_VERSION};

/// Groups present in a feature matrix, in canonical order.
fn groups_of(fm: &FeatureMatrix) -> Vec<DescriptorGroup> {
    DescriptorGroup::ALL.into_iter().filter(|g| fm.columns.iter().any(|c| c.group == *g)).collect()
}

/// Columns a method reads; `groups` restricts boosted-tree inputs.
fn method_inputs(method: Method, groups: Option<&[DescriptorGroup]>, fm: &FeatureMatrix) -> Result<FeatureMatrix> {
    let available = groups_of(fm);
    let wanted: Vec<DescriptorGroup> = match (method, groups) {
        (Method::MomentsOnly, _) => vec![DescriptorGroup::Moments],
        (_, Some(g)) => g.to_vec(),
        (_, None) => available.clone(),
    };
    if let Some(g) = wanted.iter().find(|g| !available.contains(g)) {
        return Err(CliError::Config(format!(
            "{method} needs descriptor group `{g}`, which features.groups did not compute"
        )));
    }
    Ok(fm.select_groups(&wanted))
}

fn labels_of(fm: &FeatureMatrix, rows: &[usize]) -> Vec<u8> {
    rows.iter().map(|&i| fm.rows[i].label).collect()
}

/// Fits one detector on the training rows of a split, using the validation
/// rows for early stopping or epoch selection.
pub fn fit_detector(
    cfg: &Config,
    method: Method,
    groups: Option<&[DescriptorGroup]>,
    sf: &SplitFeatures,
    seed: u64,
) -> Result<ModelFile> {
    let fm = method_inputs(method, groups, &sf.features)?;
    let train = sf.rows(Partition::Train);
    let valid = sf.rows(Partition::Valid);
    let (tx, ty) = (fm.values.select(Axis(0), &train), labels_of(&fm, &train));
    let (vx, vy) = (fm.values.select(Axis(0), &valid), labels_of(&fm, &valid));
    let names: Vec<String> = fm.columns.iter().map(|c| c.name.clone()).collect();
    let detector = match method {
        Method::Tsboost | Method::MomentsOnly => {
            let bc = telemine_gbdt::BoostConfig { seed, ..cfg.train.gbdt.clone() };
            Detector::Gbdt(telemine_gbdt::fit(tx.view(), &ty, vx.view(), &vy, &names, &bc)?)
        }
        Method::Pca => {
            // reconstruction baseline: subspace of the normal training windows
            let normal: Vec<usize> = (0..ty.len()).filter(|&i| ty[i] == 0).collect();
            let x = tx.select(Axis(0), &normal);
            Detector::Pca(PcaDetector::fit(x.view(), cfg.train.pca.variance_target)?)
        }
        Method::LinearSgd => {
            let sc = telemine_baselines::SgdConfig { seed, ..cfg.train.linear_sgd.clone() };
            Detector::LinearSgd(LinearSgd::fit(tx.view(), &ty, vx.view(), &vy, &sc)?)
        }
    };
    Ok(ModelFile {
        schema_version: MODEL_SCHEMA_VERSION,
        method,
        protocol: sf.protocol,
        seed,
        groups: groups_of(&fm),
        columns: names,
        detector,
    })
}

/// Test-partition scores of a model together with the scored rows.
pub fn score_test(model: &ModelFile, sf: &SplitFeatures) -> Result<(Vec<usize>, Vec<f64>)> {
    let fm = sf.features.select_groups(&model.groups);
    let names: Vec<&str> = fm.columns.iter().map(|c| c.name.as_str()).collect();
    if names != model.columns.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(CliError::Data(format!(
            "feature columns of {}/{} differ from the ones {} was trained on; rerun train",
            sf.protocol, sf.key, model.method
        )));
    }
    let test = sf.rows(Partition::Test);
    if test.is_empty() {
        return Err(CliError::Data(format!("{}/{}: the test partition is empty", sf.protocol, sf.key)));
    }
    let x = fm.values.select(Axis(0), &test);
    let scores = model.detector.score(x.view())?;
    Ok((test, scores))
}

pub fn report_for(
    method: &str,
    stride: usize,
    protocol: Protocol,
    seed: u64,
    fm: &FeatureMatrix,
    rows: &[usize],
    scores: &[f64],
) -> Result<EvalReport> {
    let labels = labels_of(fm, rows);
    let families: Vec<Option<&str>> = rows.iter().map(|&i| fm.rows[i].family.as_deref()).collect();
    let index: Vec<WindowPos<'_>> = rows
        .iter()
        .map(|&i| WindowPos { log: fm.rows[i].log_id.as_str(), ordinal: fm.rows[i].start / stride })
        .collect();
    let input = ScoredWindows { scores, labels: &labels, families: &families, index: &index };
    Ok(evaluate_scores(method, protocol, seed, &input)?)
}

pub fn write_scores(path: &std::path::Path, fm: &FeatureMatrix, rows: &[usize], scores: &[f64]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(create(path)?);
    w.write_record(["log_id", "start", "label", "score"])?;
    for (&i, s) in rows.iter().zip(scores) {
        let win = &fm.rows[i];
        w.write_record([win.log_id.clone(), win.start.to_string(), win.label.to_string(), s.to_string()])?;
    }
    w.flush().map_err(crate::error::CliError::io(path))?;
    Ok(())
}

/// Lazily loaded split features keyed by (protocol, split key).
#[derive(Default)]
pub struct SplitCache {
    loaded: BTreeMap<(Protocol, String), SplitFeatures>,
}

impl SplitCache {
    pub fn get(&mut self, layout: &RunLayout, protocol: Protocol, seed: u64) -> Result<&SplitFeatures> {
        let key = (protocol, crate::layout::split_key(protocol, seed));
        if !self.loaded.contains_key(&key) {
            let sf = SplitFeatures::load(layout, protocol, seed)?;
            self.loaded.insert(key.clone(), sf);
        }
        Ok(&self.loaded[&key])
    }
}

/// Fits every configured method for every protocol and seed.
pub fn train(cfg: &Config) -> Result<Vec<ModelFile>> {
    let layout = RunLayout::new(&cfg.run.out);
    let mut cache = SplitCache::default();
    let mut out = Vec::new();
    for &protocol in &cfg.split.protocols {
        for &seed in &cfg.split.seeds {
            let sf = cache.get(&layout, protocol, seed)?;
            for &method in &cfg.train.methods {
                let model = fit_detector(cfg, method, None, sf, seed)?;
                model.save(&layout.model(protocol, seed, method))?;
                out.push(model);
            }
        }
    }
    Ok(out)
}

/// Scores the test partitions with saved models, writes per-run reports,
/// score files and PR curves, and the seed-aggregated table.
pub fn evaluate(cfg: &Config) -> Result<Vec<EvalReport>> {
    let layout = RunLayout::new(&cfg.run.out);
    // fail on a missing model before doing any work
    for &protocol in &cfg.split.protocols {
        for &seed in &cfg.split.seeds {
            for &method in &cfg.train.methods {
                let path = layout.model(protocol, seed, method);
                if !path.is_file() {
                    return Err(CliError::MissingArtifact { what: "model", path, producer: "train" });
                }
            }
        }
    }
    let mut cache = SplitCache::default();
    let mut reports = Vec::new();
    for &protocol in &cfg.split.protocols {
        for &seed in &cfg.split.seeds {
            let sf = cache.get(&layout, protocol, seed)?;
            for &method in &cfg.train.methods {
                let model = ModelFile::load(&layout.model(protocol, seed, method))?;
                let (rows, scores) = score_test(&model, sf)?;
                let report =
                    report_for(method.name(), cfg.window.stride, protocol, seed, &sf.features, &rows, &scores)?;
                write_scores(&layout.scores(protocol, seed, method), &sf.features, &rows, &scores)?;
                write_json(&layout.report(protocol, seed, method), &report)?;
                let pr = layout.pr_curve(protocol, seed, method);
                write_pr_csv(&report.pr_curve, create(&pr)?)?;
                reports.push(report);
            }
        }
    }
    let rows = aggregate_rows(reports.iter().map(|r| (r.method.clone(), r)))?;
    write_aggregate_csv(&rows, create(&layout.aggregate())?)?;
    Ok(reports)
}

/// Groups labeled reports by (label, protocol), preserving first appearance.
pub fn aggregate_rows<'a>(labeled: impl IntoIterator<Item = (String, &'a EvalReport)>) -> Result<Vec<AggregateRow>> {
    let mut order: Vec<(String, Protocol)> = Vec::new();
    let mut groups: BTreeMap<(String, Protocol), Vec<EvalReport>> = BTreeMap::new();
    for (label, r) in labeled {
        let key = (label, r.protocol);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r.clone());
    }
    order
        .into_iter()
        .map(|key| {
            let summaries = aggregate_seeds(&groups[&key])?;
            Ok(AggregateRow { method: key.0, protocol: key.1, summaries })
        })
        .collect()
}

/// Human-readable table of mean AUPRC and AUROC per row.
pub fn summary_table(rows: &[AggregateRow]) -> String {
    let mut s = Vec::new();
    writeln!(s, "{:<16} {:<22} {:>3} {:>18} {:>18}", "method", "protocol", "n", "auprc", "auroc").ok();
    for row in rows {
        let cell = |metric: &str| {
            row.summaries
                .iter()
                .find(|m| m.metric == metric)
                .map(|m| match m.std {
                    Some(sd) => format!("{:.4} +/- {:.4}", m.mean, sd),
                    None => format!("{:.4}", m.mean),
                })
                .unwrap_or_default()
        };
        let n = row.summaries.first().map_or(0, |m| m.n);
        writeln!(s, "{:<16} {:<22} {:>3} {:>18} {:>18}", row.method, row.protocol, n, cell("auprc"), cell("auroc"))
            .ok();
    }
    String::from_utf8(s).expect("ascii table")
}
