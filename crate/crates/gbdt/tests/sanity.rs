use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use telemine_core::eval::{average_precision, best_f1};
use telemine_gbdt::{fit, sigmoid, BoostConfig, BoostedModel, Node};

fn names(d: usize) -> Vec<String> {
    (0..d).map(|i| format!("f{i}")).collect()
}

/// Noisy linear rule with roughly 10% positives.
fn noisy(n: usize, d: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
    let y = (0..n).map(|i| u8::from(x[[i, 0]] + 0.5 * x[[i, 1]] + 0.4 * rng.random_range(-1.0..1.0) > 0.85)).collect();
    (x, y)
}

fn quick() -> BoostConfig {
    BoostConfig { max_trees: 120, learning_rate: 0.1, ..BoostConfig::default() }
}

#[test]
fn separable_feature_reaches_perfect_ap() {
    let x = Array2::from_shape_fn((200, 1), |(i, _)| i as f64 - 99.5);
    let y: Vec<u8> = (0..200).map(|i| u8::from(x[[i, 0]] > 0.0)).collect();
    let m = fit(x.view(), &y, x.view(), &y, &names(1), &BoostConfig::default()).unwrap();
    assert!(m.best_iteration >= 1);
    let s = m.predict_scores(x.view()).unwrap();
    assert!((average_precision(&s, &y).unwrap() - 1.0).abs() <= 1e-9);
}

#[test]
fn constant_features_give_the_base_score() {
    let x = Array2::from_elem((300, 3), 2.0);
    let y: Vec<u8> = (0..300).map(|i| u8::from(i % 7 == 0)).collect();
    let m = fit(x.view(), &y, x.view(), &y, &names(3), &BoostConfig::default()).unwrap();
    assert!(m.trees.is_empty());
    assert_eq!(m.best_iteration, 0);
    let s = m.predict_scores(x.view()).unwrap();
    assert!(s.iter().all(|&v| v == sigmoid(m.base_score)));
}

#[test]
fn balanced_labels_have_zero_base_score() {
    let (x, _) = noisy(400, 3, 1);
    let y: Vec<u8> = (0..400).map(|i| u8::from(i % 2 == 0)).collect();
    let cfg = BoostConfig { max_trees: 3, ..BoostConfig::default() };
    let m = fit(x.view(), &y, x.view(), &y, &names(3), &cfg).unwrap();
    assert_eq!(m.base_score, 0.0);
}

#[test]
fn class_balanced_weights_equalize_mass() {
    let (x, y) = noisy(2000, 4, 2);
    let m = fit(x.view(), &y, x.view(), &y, &names(4), &BoostConfig { max_trees: 1, ..quick() }).unwrap();
    let pos: f64 = y.iter().filter(|&&l| l == 1).map(|_| m.class_weights.positive).sum();
    let neg: f64 = y.iter().filter(|&&l| l == 0).map(|_| m.class_weights.negative).sum();
    assert!((pos - neg).abs() <= 1e-9, "{pos} vs {neg}");
    // balanced weights make the weighted prior exactly one half
    assert!(m.base_score.abs() <= 1e-12);
}

#[test]
fn one_split_yields_two_scores() {
    let (x, y) = noisy(600, 3, 3);
    let cfg = BoostConfig { max_trees: 1, max_leaves: 2, ..BoostConfig::default() };
    let m = fit(x.view(), &y, x.view(), &y, &names(3), &cfg).unwrap();
    assert_eq!(m.kept_trees().len(), 1);
    let (feature, threshold) = match &m.trees[0].nodes[0] {
        Node::Split { feature, threshold, .. } => (*feature, *threshold),
        other => panic!("root should split: {other:?}"),
    };
    let s = m.predict_scores(x.view()).unwrap();
    let mut distinct = s.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    assert_eq!(distinct.len(), 2);
    let left = s[(0..600).find(|&i| x[[i, feature]] <= threshold).unwrap()];
    for i in 0..600 {
        assert_eq!(s[i] == left, x[[i, feature]] <= threshold);
    }
}

#[test]
fn training_loss_never_increases() {
    let (x, y) = noisy(3000, 6, 4);
    let (vx, vy) = noisy(1000, 6, 5);
    let cfg = BoostConfig { max_trees: 300, ..BoostConfig::default() };
    let m = fit(x.view(), &y, vx.view(), &vy, &names(6), &cfg).unwrap();
    assert!(m.history.len() > 10);
    for w in m.history.windows(2) {
        assert!(w[1].train_loss <= w[0].train_loss, "loss rose at {} trees", w[1].trees);
    }
}

#[test]
fn every_node_holds_min_child_rows() {
    let (x, y) = noisy(3000, 6, 6);
    let m = fit(x.view(), &y, x.view(), &y, &names(6), &quick()).unwrap();
    assert!(!m.trees.is_empty());
    for tree in &m.trees {
        for node in &tree.nodes {
            assert!(node.count() >= 80);
        }
    }
}

#[test]
fn gain_table_sums_kept_split_gains() {
    let (x, y) = noisy(2000, 5, 7);
    let m = fit(x.view(), &y, x.view(), &y, &names(5), &quick()).unwrap();
    let mut want = vec![0.0; 5];
    for tree in m.kept_trees() {
        for node in &tree.nodes {
            if let Node::Split { feature, gain, .. } = node {
                want[*feature] += gain;
            }
        }
    }
    assert_eq!(m.feature_gain, want);
}

fn fit_in_pool(threads: usize, x: &Array2<f64>, y: &[u8]) -> BoostedModel {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| fit(x.view(), y, x.view(), y, &names(x.ncols()), &quick()).unwrap())
}

#[test]
fn fixed_seed_is_bit_identical_across_runs_and_workers() {
    let (x, y) = noisy(2500, 8, 8);
    let a = fit_in_pool(1, &x, &y);
    let b = fit_in_pool(1, &x, &y);
    let c = fit_in_pool(4, &x, &y);
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(a.to_json().unwrap(), c.to_json().unwrap());
}

#[test]
fn monotone_transform_leaves_structure_unchanged() {
    let (x, y) = noisy(2000, 4, 9);
    let t = x.mapv(|v| (3.0 * v).exp() + v);
    let a = fit(x.view(), &y, x.view(), &y, &names(4), &quick()).unwrap();
    let b = fit(t.view(), &y, t.view(), &y, &names(4), &quick()).unwrap();
    assert_eq!(a.trees.len(), b.trees.len());
    for (ta, tb) in a.trees.iter().zip(&b.trees) {
        assert_eq!(ta.nodes.len(), tb.nodes.len());
        for (na, nb) in ta.nodes.iter().zip(&tb.nodes) {
            match (na, nb) {
                (
                    Node::Split { feature: fa, bin: ba, count: ca, left: la, .. },
                    Node::Split { feature: fb, bin: bb, count: cb, left: lb, .. },
                ) => assert_eq!((fa, ba, ca, la), (fb, bb, cb, lb)),
                (Node::Leaf { value: va, count: ca }, Node::Leaf { value: vb, count: cb }) => {
                    assert_eq!((va.to_bits(), ca), (vb.to_bits(), cb))
                }
                _ => panic!("node kinds differ"),
            }
        }
    }
    assert_eq!(a.predict_raw(x.view()).unwrap(), b.predict_raw(t.view()).unwrap());
}

#[test]
fn enough_capacity_to_memorize_random_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let x = Array2::from_shape_fn((500, 4), |_| rng.random::<f64>());
    let y: Vec<u8> = (0..500).map(|_| u8::from(rng.random_bool(0.3))).collect();
    // default regularization is far too strong to memorize noise; this
    // relaxes only the capacity limits
    let cfg = BoostConfig {
        max_trees: 1000,
        learning_rate: 0.3,
        min_child_samples: 1,
        subsample: 1.0,
        colsample: 1.0,
        l1: 0.0,
        l2: 1e-3,
        early_stopping_patience: 20,
        ..BoostConfig::default()
    };
    let m = fit(x.view(), &y, x.view(), &y, &names(4), &cfg).unwrap();
    let s = m.predict_scores(x.view()).unwrap();
    assert_eq!(best_f1(&s, &y).unwrap().f1, 1.0);
    assert!(m.best_iteration < cfg.max_trees);
}

#[test]
fn width_mismatch_on_predict() {
    let (x, y) = noisy(400, 3, 11);
    let m = fit(x.view(), &y, x.view(), &y, &names(3), &BoostConfig { max_trees: 2, ..quick() }).unwrap();
    assert!(m.predict_scores(Array2::zeros((2, 4)).view()).is_err());
}
