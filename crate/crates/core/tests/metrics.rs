mod oracle;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use telemine_core::eval::{auroc, average_precision, best_f1, event_f1, WindowPos};

/// Random instance with both classes; scores are coarsened half the time to
/// force ties.
fn instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<u8>, Vec<String>, Vec<usize>) {
    let n = rng.random_range(2..=200);
    let prevalence = rng.random_range(0.05..0.6);
    let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(prevalence))).collect();
    labels[0] = 1;
    labels[1] = 0;
    let coarse = rng.random_bool(0.5);
    let scores = labels
        .iter()
        .map(|&l| {
            let s = rng.random::<f64>() + 0.3 * l as f64;
            if coarse {
                (s * 8.0).floor() / 8.0
            } else {
                s
            }
        })
        .collect();
    let n_logs = rng.random_range(1..=4);
    let mut logs = Vec::with_capacity(n);
    let mut ordinals = Vec::with_capacity(n);
    let mut next = vec![0usize; n_logs];
    for _ in 0..n {
        let l = rng.random_range(0..n_logs);
        // occasional ordinal gaps break runs
        next[l] += if rng.random_bool(0.1) { 2 } else { 1 };
        logs.push(format!("log{l}"));
        ordinals.push(next[l]);
    }
    (scores, labels, logs, ordinals)
}

#[test]
fn matches_brute_force_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..500 {
        let (scores, labels, logs, ordinals) = instance(&mut rng);
        let a = auroc(&scores, &labels).unwrap();
        assert!((a - oracle::auroc(&scores, &labels)).abs() <= 1e-12, "case {case} auroc");
        let ap = average_precision(&scores, &labels).unwrap();
        assert!((ap - oracle::average_precision(&scores, &labels)).abs() <= 1e-12, "case {case} ap");
        let best = best_f1(&scores, &labels).unwrap();
        let (f, t) = oracle::best_f1(&scores, &labels);
        assert!((best.f1 - f).abs() <= 1e-12, "case {case} f1");
        assert!(
            best.threshold.0 == t || (best.threshold.0 - t).abs() <= 1e-12,
            "case {case} threshold {} vs {t}, f1 {} vs {f}",
            best.threshold.0,
            best.f1
        );
        let index: Vec<WindowPos> =
            logs.iter().zip(&ordinals).map(|(l, &o)| WindowPos { log: l, ordinal: o }).collect();
        let ev = event_f1(&scores, &labels, &index, best.threshold.0).unwrap();
        let want = oracle::event_f1(&scores, &labels, &logs, &ordinals, best.threshold.0);
        assert!((ev.f1 - want).abs() <= 1e-12, "case {case} event f1");
    }
}

proptest! {
    #[test]
    fn rank_metrics_invariant_under_increasing_transform(
        raw in prop::collection::vec((0.0f64..1.0, any::<bool>()), 2..120)
    ) {
        let scores: Vec<f64> = raw.iter().map(|(s, _)| *s).collect();
        let mut labels: Vec<u8> = raw.iter().map(|(_, l)| u8::from(*l)).collect();
        labels[0] = 1;
        labels[1] = 0;
        let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        prop_assert_eq!(auroc(&scores, &labels).unwrap(), auroc(&transformed, &labels).unwrap());
        prop_assert_eq!(
            average_precision(&scores, &labels).unwrap(),
            average_precision(&transformed, &labels).unwrap()
        );
    }

    #[test]
    fn event_f1_depends_only_on_mask(
        flags in prop::collection::vec((any::<bool>(), any::<bool>()), 1..80),
        lift in 0.0f64..10.0,
    ) {
        let labels: Vec<u8> = flags.iter().map(|(l, _)| u8::from(*l)).collect();
        let a: Vec<f64> = flags.iter().map(|(_, p)| if *p { 1.0 } else { 0.0 }).collect();
        let b: Vec<f64> = flags.iter().map(|(_, p)| if *p { 0.5 + lift } else { 0.4 - lift }).collect();
        let index: Vec<WindowPos> = (0..flags.len()).map(|o| WindowPos { log: "a", ordinal: o }).collect();
        prop_assert_eq!(
            event_f1(&a, &labels, &index, 0.5).unwrap(),
            event_f1(&b, &labels, &index, 0.5).unwrap()
        );
    }
}
