//! Fixed inputs shared by the benchmarks.

use ultragh::{random_ultrametric, truncated_unramified_ring, zq_delta, ExactValue, UltrametricSpace};

/// `Z/p^a` against `Z/p^b`.
pub fn ring_pair(p: u64, a: u32, b: u32) -> (UltrametricSpace, UltrametricSpace) {
    (truncated_unramified_ring(p, 1, a).unwrap(), truncated_unramified_ring(p, 1, b).unwrap())
}

/// `Z/p` against `Z/q` with `p - q` extra points.
pub fn extra_point_pair(p: u64, q: u64) -> (UltrametricSpace, UltrametricSpace) {
    (truncated_unramified_ring(p, 1, 1).unwrap(), zq_delta(p, q, 1).unwrap())
}

pub fn random_pair(n: usize, seed: u64) -> (UltrametricSpace, UltrametricSpace) {
    let pool: Vec<ExactValue> = ["1/4", "1/2", "1", "2"].iter().map(|s| s.parse().unwrap()).collect();
    (random_ultrametric(n, seed, &pool).unwrap(), random_ultrametric(n, seed + 1, &pool).unwrap())
}
