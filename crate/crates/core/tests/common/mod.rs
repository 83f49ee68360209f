//! Oracles shared by integration tests.

use std::collections::HashMap;

/// Best savings `Σ (worst - class)` over all disjoint segment tables with at
/// most `budget` segments per class, by dynamic programming over sets.
pub fn optimal_savings(lat: &[u32], classes: &[u32], budget: usize, worst: u32) -> u64 {
    let k = classes.len();
    // State: segments used per class, and the class of the open run (k = none).
    let mut best: HashMap<(Vec<usize>, usize), u64> = HashMap::new();
    best.insert((vec![0; k], k), 0);
    for &l in lat {
        let mut next: HashMap<(Vec<usize>, usize), u64> = HashMap::new();
        let mut offer = |key: (Vec<usize>, usize), v: u64| {
            let e = next.entry(key).or_insert(0);
            *e = (*e).max(v);
        };
        for ((used, open), &v) in &best {
            offer((used.clone(), k), v);
            for (ci, &class) in classes.iter().enumerate() {
                if l > class {
                    continue;
                }
                let gain = u64::from(worst - class);
                if *open == ci {
                    offer((used.clone(), ci), v + gain);
                } else if used[ci] < budget {
                    let mut u = used.clone();
                    u[ci] += 1;
                    offer((u, ci), v + gain);
                }
            }
        }
        best = next;
    }
    best.values().copied().max().unwrap_or(0)
}
