use std::collections::BTreeSet;

use proptest::prelude::*;

use telemine_core::eval::{split, split_purged, Partition, Protocol, SplitFractions};
use telemine_core::telemetry::{Window, WindowSpec};
use telemine_core::windowing::{window_count, WindowSet};

fn window_set(lens: &[usize], spec: WindowSpec) -> WindowSet {
    let mut windows = Vec::new();
    for (i, &t) in lens.iter().enumerate() {
        for k in 0..window_count(t, &spec) {
            windows.push(Window { log_id: format!("log{i:03}"), start: k * spec.stride, label: 0, family: None });
        }
    }
    WindowSet { spec, windows }
}

fn rank(p: Partition) -> u8 {
    match p {
        Partition::Train => 0,
        Partition::Valid => 1,
        Partition::Test => 2,
        Partition::Purged => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chronological_order_per_log(lens in prop::collection::vec(96usize..3000, 1..12)) {
        let ws = window_set(&lens, WindowSpec::default());
        let s = split(Protocol::Chronological, &ws, SplitFractions::default(), 0).unwrap();
        for (_, r) in ws.log_ranges() {
            for i in r.clone().skip(1) {
                prop_assert!(rank(s.partitions[i - 1]) <= rank(s.partitions[i]));
            }
        }
    }

    #[test]
    fn purged_windows_avoid_every_embargo_zone(
        lens in prop::collection::vec(96usize..3000, 1..12),
        embargo in 0usize..300,
    ) {
        let spec = WindowSpec::default();
        let ws = window_set(&lens, spec);
        let chrono = split(Protocol::Chronological, &ws, SplitFractions::default(), 0).unwrap();
        let s = split_purged(&ws, SplitFractions::default(), embargo).unwrap();
        for (_, r) in ws.log_ranges() {
            let zones: Vec<(usize, usize)> = r.clone().skip(1)
                .filter(|&i| chrono.partitions[i] != chrono.partitions[i - 1])
                .map(|i| ws.windows[i].start)
                .map(|b| (b.saturating_sub(embargo), b + embargo))
                .collect();
            for i in r {
                let a = ws.windows[i].start;
                let crosses = zones.iter().any(|&(lo, hi)| (a..a + spec.span()).any(|x| lo <= x && x < hi));
                if s.partitions[i] == Partition::Purged {
                    prop_assert!(crosses);
                } else {
                    prop_assert!(!crosses);
                    prop_assert_eq!(s.partitions[i], chrono.partitions[i]);
                }
            }
        }
    }

    #[test]
    fn leave_log_out_is_log_disjoint(lens in prop::collection::vec(96usize..3000, 3..30), seed in any::<u64>()) {
        let ws = window_set(&lens, WindowSpec::default());
        let s = split(Protocol::LeaveLogOut, &ws, SplitFractions::default(), seed).unwrap();
        let mut sets = [BTreeSet::new(), BTreeSet::new(), BTreeSet::new()];
        for (i, w) in ws.windows.iter().enumerate() {
            sets[rank(s.partitions[i]) as usize].insert(w.log_id.clone());
        }
        prop_assert!(sets.iter().all(|s| !s.is_empty()));
        prop_assert!(sets[0].is_disjoint(&sets[1]) && sets[0].is_disjoint(&sets[2]) && sets[1].is_disjoint(&sets[2]));
        prop_assert_eq!(sets.iter().map(BTreeSet::len).sum::<usize>(), lens.len());
    }
}

#[test]
fn retained_cross_partition_spans_are_disjoint() {
    let spec = WindowSpec::default();
    let ws = window_set(&[2000, 3000, 1500], spec);
    let s = split_purged(&ws, SplitFractions::default(), spec.span()).unwrap();
    for (_, r) in ws.log_ranges() {
        for u in r.clone() {
            for v in r.clone() {
                let (pu, pv) = (s.partitions[u], s.partitions[v]);
                if pu == Partition::Purged || pv == Partition::Purged || rank(pu) >= rank(pv) {
                    continue;
                }
                let (a, b) = (ws.windows[u].start, ws.windows[v].start);
                assert!(a + spec.span() <= b, "windows {a} and {b} share samples");
            }
        }
    }
}
