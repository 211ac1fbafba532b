use std::collections::BTreeSet;

use proptest::prelude::*;

use telemine_core::csv_io::{read_aligned_csv, read_raw_csv, write_aligned_csv, write_raw_csv};
use telemine_core::ingest::{impute, impute_channel, resample_to_grid, StandardizationStats};
use telemine_core::synth::{generate, SynthConfig};
use telemine_core::telemetry::{labels_from_intervals, validate_aligned_log, RawLog, RawRow};

fn raw_strategy() -> impl Strategy<Value = RawLog> {
    (1usize..4, 2usize..40).prop_flat_map(|(d, n)| {
        let row = (
            prop::collection::vec(prop::option::weighted(0.8, -1e6f64..1e6), d),
            0u8..2,
            prop::option::of(prop::sample::select(vec!["spike", "drift"])),
            0.01f64..1.0,
        );
        prop::collection::vec(row, n).prop_map(move |rows| {
            let mut t = 0.0;
            RawLog {
                log_id: "p".into(),
                channels: (0..d).map(|c| format!("ch{c}")).collect(),
                rows: rows
                    .into_iter()
                    .map(|(values, label, ty, dt)| {
                        t += dt;
                        RawRow {
                            time: t,
                            values,
                            label,
                            anomaly_type: if label == 1 { ty.map(str::to_string) } else { None },
                        }
                    })
                    .collect(),
                has_labels: true,
            }
        })
    })
}

proptest! {
    #[test]
    fn raw_csv_round_trip(log in raw_strategy()) {
        let mut buf = Vec::new();
        write_raw_csv(&log, &mut buf).unwrap();
        let back = read_raw_csv(buf.as_slice(), "p").unwrap();
        prop_assert_eq!(back, log);
    }

    #[test]
    fn aligned_csv_round_trip(log in raw_strategy()) {
        let aligned = resample_to_grid(&log, 10.0).unwrap();
        let mut buf = Vec::new();
        write_aligned_csv(&aligned, &mut buf).unwrap();
        let back = read_aligned_csv(buf.as_slice(), "p", 10.0).unwrap();
        prop_assert_eq!(back.labels, aligned.labels.clone());
        prop_assert_eq!(back.anomaly_types, aligned.anomaly_types.clone());
        for (a, b) in back.data.iter().zip(aligned.data.iter()) {
            prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }

    #[test]
    fn resampling_keeps_label_positivity(log in raw_strategy()) {
        let aligned = resample_to_grid(&log, 10.0).unwrap();
        prop_assert_eq!(aligned.has_anomaly(), log.has_anomaly());
    }

    #[test]
    fn imputation_is_idempotent_and_total(values in prop::collection::vec(prop::option::of(-1e3f64..1e3), 1..60)) {
        let mut once: Vec<f64> = values.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        impute_channel(&mut once);
        prop_assert!(once.iter().all(|v| v.is_finite()));
        for (v, orig) in once.iter().zip(&values) {
            if let Some(o) = orig {
                prop_assert_eq!(v, o);
            }
        }
        let mut twice = once.clone();
        impute_channel(&mut twice);
        prop_assert_eq!(once, twice);
    }
}

#[test]
fn standardized_training_samples_have_zero_mean_unit_std() {
    let cfg = SynthConfig { log_count: 3, samples_per_log: 500, ..SynthConfig::default() };
    let logs: Vec<_> =
        generate(&cfg).unwrap().iter().map(|l| impute(&resample_to_grid(&l.raw, cfg.rate_hz).unwrap())).collect();
    let spans: Vec<Vec<std::ops::Range<usize>>> = logs.iter().map(|l| vec![0..l.len() / 2]).collect();
    let stats = StandardizationStats::fit(logs.iter().zip(spans.iter().map(Vec::as_slice))).unwrap();
    let standardized: Vec<_> = logs.iter().map(|l| stats.apply(l).unwrap()).collect();
    for c in 0..cfg.channels {
        let vals: Vec<f64> =
            standardized.iter().zip(&spans).flat_map(|(l, s)| s[0].clone().map(move |t| l.data[[t, c]])).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-9, "channel {c} mean {mean}");
        assert!((std - 1.0).abs() < 1e-9, "channel {c} std {std}");
    }
}

#[test]
fn synthetic_rate_and_alignment() {
    let cfg = SynthConfig { log_count: 50, samples_per_log: 3000, ..SynthConfig::default() };
    let logs = generate(&cfg).unwrap();
    let anomalous: usize = logs.iter().map(|l| l.raw.rows.iter().filter(|r| r.label == 1).count()).sum();
    let realized = anomalous as f64 / (50.0 * 3000.0);
    assert!((realized / cfg.anomaly_rate - 1.0).abs() <= 0.2, "realized rate {realized}");

    let families: BTreeSet<&str> =
        logs.iter().flat_map(|l| l.intervals.iter().filter_map(|iv| iv.family.as_deref())).collect();
    assert_eq!(families.len(), 5);

    // jitter stays inside a grid cell, so aligned labels equal the intervals
    for l in &logs[..5] {
        let aligned = resample_to_grid(&l.raw, cfg.rate_hz).unwrap();
        assert_eq!(aligned.len(), cfg.samples_per_log);
        assert_eq!(aligned.labels, labels_from_intervals(&l.intervals, aligned.len()));
        let clean = impute(&aligned);
        assert!(validate_aligned_log(&clean).is_empty());
    }
}

#[test]
fn normal_segments_are_stationary_across_logs() {
    let cfg = SynthConfig { log_count: 10, anomaly_rate: 0.0, missing_rate: 0.0, ..SynthConfig::default() };
    let logs = generate(&cfg).unwrap();
    let means: Vec<f64> = logs
        .iter()
        .map(|l| l.raw.rows.iter().map(|r| r.values[0].unwrap()).sum::<f64>() / l.raw.rows.len() as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / means.len() as f64;
    // AR(1) with phi <= 0.9 and 3,000 samples: per-log mean error is well under 1
    assert!(means.iter().all(|m| (m - grand).abs() < 1.0), "{means:?}");
}
