use proptest::prelude::*;

use cnfet_cache::pagemap::{assign_pages, Frame, PageProfile, PageStats};

fn frames(lat: &[u32]) -> Vec<Frame> {
    lat.iter()
        .enumerate()
        .map(|(i, &latency)| Frame {
            pfn: i as u64,
            bank: 0,
            block: i,
            latency,
        })
        .collect()
}

fn profile(counts: &[u64]) -> PageProfile {
    let mut p = PageProfile::new(4096, 1);
    for (v, &c) in counts.iter().enumerate() {
        p.pages.insert(
            v as u64,
            PageStats {
                count: c,
                per_core: vec![c],
            },
        );
    }
    p
}

fn cost_of(counts: &[u64], lat: &[u32], assignment: impl Fn(usize) -> usize) -> u64 {
    counts
        .iter()
        .enumerate()
        .map(|(v, &c)| c * u64::from(lat[assignment(v)]))
        .sum()
}

/// Minimum over every injective page-to-frame assignment.
fn brute_force(counts: &[u64], lat: &[u32]) -> u64 {
    fn go(v: usize, counts: &[u64], lat: &[u32], used: &mut Vec<bool>) -> u64 {
        if v == counts.len() {
            return 0;
        }
        let mut best = u64::MAX;
        for f in 0..lat.len() {
            if !used[f] {
                used[f] = true;
                best = best.min(counts[v] * u64::from(lat[f]) + go(v + 1, counts, lat, used));
                used[f] = false;
            }
        }
        best
    }
    go(0, counts, lat, &mut vec![false; lat.len()])
}

#[test]
fn ten_pages_four_fast_frames() {
    let counts = [50, 3, 90, 7, 60, 1, 40, 2, 80, 5];
    let lat = [10, 6, 10, 6, 10, 10, 6, 10, 6, 10];
    let fs = frames(&lat);
    let map = assign_pages(&profile(&counts), &fs, &|f, _| u64::from(f.latency)).unwrap();
    for v in [2u64, 8, 4, 0] {
        assert_eq!(lat[map.get(v).unwrap() as usize], 6, "page {v}");
    }
    for v in [6u64, 3, 9, 1, 7, 5] {
        assert_eq!(lat[map.get(v).unwrap() as usize], 10, "page {v}");
    }
    let greedy = cost_of(&counts, &lat, |v| map.get(v as u64).unwrap() as usize);
    assert_eq!(greedy, brute_force(&counts, &lat));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn greedy_minimizes_separable_cost(
        counts in proptest::collection::vec(0u64..100, 1..=7),
        lat in proptest::collection::vec(6u32..=12, 7..=8),
    ) {
        let map = assign_pages(&profile(&counts), &frames(&lat), &|f, _| u64::from(f.latency)).unwrap();
        prop_assert!(map.is_injective());
        let greedy = cost_of(&counts, &lat, |v| map.get(v as u64).unwrap() as usize);
        prop_assert_eq!(greedy, brute_force(&counts, &lat));
    }
}
