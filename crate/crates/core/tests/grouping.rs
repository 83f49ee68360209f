use proptest::prelude::*;

use cnfet_cache::timing::{CacheGeometry, LatencyMap, LayoutKind};
use cnfet_cache::vawa::build_nonuniform_groups;

mod common;
use common::optimal_savings;

/// Enumerates every labelling of sets with {uncovered, class...}.
fn brute_force(lat: &[u32], classes: &[u32], budget: usize, worst: u32) -> u64 {
    let k = classes.len() + 1;
    let n = lat.len();
    let mut best = 0;
    let mut label = vec![0usize; n];
    loop {
        let feasible = (0..n).all(|i| label[i] == 0 || lat[i] <= classes[label[i] - 1]);
        if feasible {
            let mut runs = vec![0; k];
            for i in 0..n {
                if label[i] != 0 && (i == 0 || label[i - 1] != label[i]) {
                    runs[label[i]] += 1;
                }
            }
            if runs.iter().all(|&r| r <= budget) {
                let s: u64 = label
                    .iter()
                    .filter(|&&l| l != 0)
                    .map(|&l| u64::from(worst - classes[l - 1]))
                    .sum();
                best = best.max(s);
            }
        }
        let mut i = 0;
        while i < n && label[i] == k - 1 {
            label[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
        label[i] += 1;
    }
}

fn map_of(lat: Vec<u32>) -> LatencyMap {
    let sets = lat.len();
    let g = CacheGeometry::new((sets * 8 * 64) as u64, 8, 64).unwrap();
    LatencyMap::new(LayoutKind::WayAligned, g, lat, 6, 10).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dp_oracle_matches_brute_force(lat in proptest::collection::vec(6u32..=10, 8), budget in 1usize..=3) {
        prop_assert_eq!(optimal_savings(&lat, &[6, 7], budget, 10), brute_force(&lat, &[6, 7], budget, 10));
    }

    #[test]
    fn greedy_never_beats_optimum(lat in proptest::collection::vec(6u32..=10, 64), budget in 1usize..=4) {
        let map = map_of(lat.clone());
        let t = build_nonuniform_groups(&map, &[6, 7], budget, 1).unwrap();
        t.validate().unwrap();
        prop_assert!(t.savings() <= optimal_savings(&lat, &[6, 7], budget, 10));
        for (s, &l) in lat.iter().enumerate() {
            prop_assert!(t.lookup_latency(s) >= l);
        }
    }

    #[test]
    fn single_class_with_ample_budget_is_optimal(lat in proptest::collection::vec(6u32..=10, 64)) {
        let map = map_of(lat.clone());
        let t = build_nonuniform_groups(&map, &[7], 32, 1).unwrap();
        prop_assert_eq!(t.savings(), optimal_savings(&lat, &[7], 32, 10));
    }
}

#[test]
fn greedy_gap_example() {
    // One class-6 set splits a long class-7 run; with one segment per class
    // the greedy keeps the split while the optimum covers the run with class 7.
    let lat = vec![7, 7, 7, 6, 7, 7, 7, 10];
    let map = map_of(lat.clone());
    let t = build_nonuniform_groups(&map, &[6, 7], 1, 1).unwrap();
    let opt = optimal_savings(&lat, &[6, 7], 1, 10);
    assert_eq!(t.savings(), 4 + 3 * 3);
    assert_eq!(opt, 7 * 3);
}
