#![allow(dead_code)]

use kdual::trace::{generate_random, RequestTrace};

pub const NODE_COUNTS: [u32; 4] = [3, 5, 10, 50];
pub const WEIGHT_MAXES: [u64; 2] = [1, 10];

/// One corpus instance: a random trace plus the cache size it is run with.
pub struct Instance {
    pub seed: u64,
    pub trace: RequestTrace,
    pub k: usize,
}

/// `count` traces of length `len` cycling through node counts, weight caps
/// and `k = 1..=10`.
pub fn corpus(count: usize, len: usize, base_seed: u64) -> Vec<Instance> {
    (0..count)
        .map(|i| {
            let nodes = NODE_COUNTS[i % 4];
            let wmax = WEIGHT_MAXES[(i / 4) % 2];
            let k = 1 + (i / 8) % 10;
            let seed = base_seed + i as u64;
            Instance {
                seed,
                trace: generate_random(nodes, len, wmax, seed),
                k,
            }
        })
        .collect()
}
