#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twoiso::tree::TreeSkeleton;

/// Widest generation a random skeleton may have; keeps dense truncations small.
pub const MAX_WIDTH: usize = 12;

/// Random skeleton with depth `1..=max_depth`, out-degrees `1..=max_degree` and
/// generation width at most `MAX_WIDTH`.
pub fn random_skeleton(rng: &mut impl Rng, max_depth: usize, max_degree: usize) -> TreeSkeleton {
    let depth = rng.random_range(1..=max_depth);
    let mut edges = Vec::new();
    let mut gen = vec!["v0_0".to_string()];
    for g in 0..depth {
        let mut next = Vec::new();
        for (i, u) in gen.iter().enumerate() {
            // leave one slot for every parent still to come
            let room = MAX_WIDTH - next.len() - (gen.len() - i - 1);
            let deg = rng.random_range(1..=max_degree).min(room);
            for _ in 0..deg {
                let v = format!("v{}_{}", g + 1, next.len());
                edges.push((u.clone(), v.clone()));
                next.push(v);
            }
        }
        gen = next;
    }
    TreeSkeleton::new("v0_0", &edges, depth).expect("random skeleton is valid")
}

pub fn skeletons(seed: u64, count: usize, max_depth: usize, max_degree: usize) -> Vec<TreeSkeleton> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_skeleton(&mut rng, max_depth, max_degree)).collect()
}

/// |Chi^k(root)| counted on the skeleton plus ray continuations.
pub fn generation_size(t: &TreeSkeleton, k: usize) -> usize {
    t.generation(k).len()
}
