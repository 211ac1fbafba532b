use telemine_core::eval::{write_aggregate_csv, EvalReport};

use crate::commands::detect::{aggregate_rows, fit_detector, report_for, score_test, SplitCache};
use crate::config::{Config, Method};
use crate::error::Result;
use crate::io::{create, write_json};
use crate::layout::RunLayout;

/// One variant's report for one protocol and seed.
#[derive(Debug, Clone)]
pub struct AblationRun {
    pub variant: String,
    pub report: EvalReport,
}

/// Refits the boosted-tree detector on each descriptor-group variant under
/// identical detector settings and splits. Only the input columns change.
pub fn ablate(cfg: &Config) -> Result<Vec<AblationRun>> {
    let layout = RunLayout::new(&cfg.run.out);
    let variants: Vec<(String, Vec<_>)> =
        cfg.ablation.variants.iter().map(|v| Ok((v.clone(), cfg.ablation.groups(v)?))).collect::<Result<_>>()?;
    let mut cache = SplitCache::default();
    let mut runs = Vec::new();
    for &protocol in &cfg.split.protocols {
        for &seed in &cfg.split.seeds {
            let sf = cache.get(&layout, protocol, seed)?;
            for (variant, groups) in &variants {
                let model = fit_detector(cfg, Method::Tsboost, Some(groups), sf, seed)?;
                let (rows, scores) = score_test(&model, sf)?;
                let report = report_for(
                    Method::Tsboost.name(),
                    cfg.window.stride,
                    protocol,
                    seed,
                    &sf.features,
                    &rows,
                    &scores,
                )?;
                write_json(&layout.ablation_report(variant, protocol, seed), &report)?;
                runs.push(AblationRun { variant: variant.clone(), report });
            }
        }
    }
    let rows = aggregate_rows(runs.iter().map(|r| (r.variant.clone(), &r.report)))?;
    write_aggregate_csv(&rows, create(&layout.ablation_table())?)?;
    Ok(runs)
}
