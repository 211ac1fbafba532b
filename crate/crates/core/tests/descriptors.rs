#![allow(clippy::needless_range_loop)]

mod oracle;

use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Normal, StudentT};

use telemine_core::descriptors::{describe_channel, featurize, Descriptor, DescriptorGroup};
use telemine_core::telemetry::{AlignedLog, WindowSpec};
use telemine_core::windowing::make_window_set;

fn random_window(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let kind = rng.random_range(0..4);
    let loc = rng.random_range(-50.0..50.0);
    let scale = rng.random_range(0.01..20.0);
    (0..len)
        .map(|_| {
            let z: f64 = match kind {
                0 => Normal::new(0.0, 1.0).unwrap().sample(rng),
                1 => StudentT::new(2.0).unwrap().sample(rng),
                2 => Cauchy::<f64>::new(0.0, 1.0).unwrap().sample(rng).clamp(-1e6, 1e6),
                _ => (rng.random_range(0..5) as f64).round(),
            };
            loc + scale * z
        })
        .collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn matches_direct_summation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..1000 {
        let len = [2, 5, 96][i % 3];
        let w = random_window(&mut rng, len);
        let got = describe_channel(&w).unwrap();
        let want = oracle::descriptors(&w);
        for d in Descriptor::ALL {
            let k = d.index();
            assert!(close(got[k], want[k], 1e-10), "window {i} {}: {} vs {}", d.name(), got[k], want[k]);
        }
    }
}

#[test]
fn ramp_spread_and_autocorrelation_match_oracle() {
    let ramp: Vec<f64> = (1..=96).map(f64::from).collect();
    let got = describe_channel(&ramp).unwrap();
    let want = oracle::descriptors(&ramp);
    assert!(close(got[Descriptor::Std.index()], want[1], 1e-12));
    assert!(close(got[Descriptor::Acf1.index()], want[17], 1e-12));
}

fn finite_window() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3f64..1e3, 2..64)
}

proptest! {
    #[test]
    fn shift_equivariance(w in finite_window(), c in -1e3f64..1e3) {
        let base = describe_channel(&w).unwrap();
        let shifted: Vec<f64> = w.iter().map(|v| v + c).collect();
        let moved = describe_channel(&shifted).unwrap();
        let scale = 1.0 + w.iter().fold(0.0f64, |m, v| m.max(v.abs())) + c.abs();
        for d in Descriptor::ALL {
            let k = d.index();
            let expect = match d {
                Descriptor::Mean | Descriptor::Min | Descriptor::Max | Descriptor::Q10
                | Descriptor::Q25 | Descriptor::Q50 | Descriptor::Q75 | Descriptor::Q90
                | Descriptor::First | Descriptor::Last => base[k] + c,
                _ => base[k],
            };
            if d == Descriptor::Acf1 {
                // the ratio is ill-conditioned when the spread is tiny
                if base[Descriptor::Std.index()] > 1e-3 {
                    prop_assert!((moved[k] - expect).abs() < 1e-6, "acf1 {} vs {}", moved[k], expect);
                }
            } else {
                prop_assert!((moved[k] - expect).abs() <= 1e-9 * scale, "{}: {} vs {}", d.name(), moved[k], expect);
            }
        }
    }

    #[test]
    fn scale_equivariance(w in finite_window(), k in 0.01f64..100.0) {
        let base = describe_channel(&w).unwrap();
        let scaled: Vec<f64> = w.iter().map(|v| v * k).collect();
        let got = describe_channel(&scaled).unwrap();
        let mag = 1.0 + w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for d in Descriptor::ALL {
            let i = d.index();
            if d == Descriptor::Acf1 {
                if base[Descriptor::Std.index()] > 1e-3 {
                    prop_assert!((got[i] - base[i]).abs() < 1e-6);
                }
            } else {
                prop_assert!((got[i] - k * base[i]).abs() <= 1e-9 * k * mag, "{}", d.name());
            }
        }
    }
}

fn log(id: &str, channels: &[&str], data: Array2<f64>) -> AlignedLog {
    let t = data.nrows();
    AlignedLog::new(id, 10.0, 0.0, channels.iter().map(|c| c.to_string()).collect(), data, vec![0; t], vec![None; t])
        .unwrap()
}

#[test]
fn batch_equals_per_window_and_channel_permutation_permutes_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = 300;
    let data = Array2::from_shape_fn((t, 3), |_| rng.random_range(-1.0..1.0));
    let spec = WindowSpec::default();
    let a = log("a", &["x", "y", "z"], data.clone());
    let fm = featurize(&make_window_set(std::slice::from_ref(&a), &spec).unwrap(), &[a], &DescriptorGroup::ALL).unwrap();
    assert_eq!(fm.width(), 54);
    for (r, w) in fm.rows.iter().enumerate() {
        for c in 0..3 {
            let col: Vec<f64> = (w.start..w.start + 96).map(|s| data[[s, c]]).collect();
            let want = describe_channel(&col).unwrap();
            for k in 0..18 {
                assert_eq!(fm.values[[r, c * 18 + k]].to_bits(), want[k].to_bits());
            }
        }
    }

    let perm = [2usize, 0, 1];
    let permuted = Array2::from_shape_fn((t, 3), |(s, c)| data[[s, perm[c]]]);
    let b = log("a", &["z", "x", "y"], permuted);
    let fp = featurize(&make_window_set(std::slice::from_ref(&b), &spec).unwrap(), &[b], &DescriptorGroup::ALL).unwrap();
    for r in 0..fm.n_rows() {
        for c in 0..3 {
            for k in 0..18 {
                assert_eq!(fp.values[[r, c * 18 + k]], fm.values[[r, perm[c] * 18 + k]]);
            }
        }
    }
}

#[test]
fn width_law() {
    for d in [1usize, 5, 87, 443] {
        let channels: Vec<String> = (0..d).map(|c| format!("c{c}")).collect();
        let cols = telemine_core::descriptors::feature_columns(&channels, &DescriptorGroup::ALL);
        assert_eq!(cols.len(), 18 * d);
    }
    let channels: Vec<String> = (0..87).map(|c| format!("c{c}")).collect();
    assert_eq!(telemine_core::descriptors::feature_columns(&channels, &DescriptorGroup::ALL).len(), 1566);
    assert_eq!(telemine_core::descriptors::feature_columns(&channels, &[DescriptorGroup::Moments]).len(), 174);
    let channels: Vec<String> = (0..443).map(|c| format!("c{c}")).collect();
    assert_eq!(telemine_core::descriptors::feature_columns(&channels, &DescriptorGroup::ALL).len(), 7974);
}
