//! Independent brute-force oracles shared by the integration tests.
//!
//! Nothing here calls the library's search code: correspondences are
//! enumerated as raw subsets of `X × Y`, and every predicate is written out
//! from its definition.

#![allow(dead_code)]

use ultragh::{random_ultrametric, ExactValue, UltrametricSpace};

pub fn v(n: u64, d: u64) -> ExactValue {
    ExactValue::ratio(n, d)
}

/// Values with plenty of coincidences, so random pairs share distances.
pub fn pool() -> Vec<ExactValue> {
    vec![v(1, 4), v(1, 2), v(1, 1), v(3, 2), v(2, 1)]
}

/// Random space with 1 to `max_n` points from the shared pool.
pub fn random_space(seed: u64, max_n: usize) -> UltrametricSpace {
    let n = 1 + (seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 33) as usize % max_n;
    let pool = pool();
    // vary the pool depth so some spaces reuse the smallest value
    let depth = 1 + (seed as usize / 7) % pool.len();
    random_ultrametric(n, seed, &pool[..depth]).unwrap()
}

pub struct Exhaustive {
    /// smallest distortion over all correspondences
    pub classical: ExactValue,
    /// smallest distortion over strong correspondences
    pub strong: ExactValue,
    /// every strong correspondence attaining `strong`, as sorted pair lists
    pub strong_minimizers: Vec<Vec<(usize, usize)>>,
}

/// Enumerates every subset of `X × Y` (at most 16 pairs).
pub fn exhaustive(x: &UltrametricSpace, y: &UltrametricSpace) -> Exhaustive {
    let (n, m) = (x.len(), y.len());
    let k = n * m;
    assert!(k <= 16, "oracle limited to 16 pairs");
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..m).map(move |b| (a, b))).collect();

    // rank every |d_X - d_Y| on the test side
    let mut gaps: Vec<ExactValue> = Vec::with_capacity(k * k);
    for &(a, b) in &pairs {
        for &(c, d) in &pairs {
            gaps.push(x.d(a, c).abs_diff(y.d(b, d)));
        }
    }
    let mut values = gaps.clone();
    values.sort();
    values.dedup();
    let gap: Vec<u32> = gaps.iter().map(|g| values.binary_search(g).unwrap() as u32).collect();

    let full = (1u32 << k) - 1;
    let mut dis = vec![0u32; 1 << k];
    for mask in 1..=full {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let mut best = dis[rest as usize];
        let mut bits = mask;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            best = best.max(gap[low * k + j]);
            bits &= bits - 1;
        }
        dis[mask as usize] = best;
    }

    let covers = |mask: u32| {
        (0..n).all(|a| (0..m).any(|b| mask >> (a * m + b) & 1 == 1))
            && (0..m).all(|b| (0..n).any(|a| mask >> (a * m + b) & 1 == 1))
    };
    let strong = |mask: u32, distortion: &ExactValue| {
        let inside = |a: usize, b: usize| mask >> (a * m + b) & 1 == 1;
        for a in 0..n {
            for b in 0..m {
                if inside(a, b) {
                    continue;
                }
                for b2 in (0..m).filter(|&b2| inside(a, b2)) {
                    for a2 in (0..n).filter(|&a2| inside(a2, b)) {
                        let dl = x.d(a, a2);
                        if dl != y.d(b, b2) || dl <= distortion {
                            return false;
                        }
                    }
                }
            }
        }
        true
    };

    let mut classical = u32::MAX;
    let mut best_strong = u32::MAX;
    let mut minimizers: Vec<u32> = Vec::new();
    for mask in 1..=full {
        if !covers(mask) {
            continue;
        }
        let d = dis[mask as usize];
        classical = classical.min(d);
        if d > best_strong || !strong(mask, &values[d as usize]) {
            continue;
        }
        if d < best_strong {
            best_strong = d;
            minimizers.clear();
        }
        minimizers.push(mask);
    }
    let to_pairs = |mask: u32| (0..k).filter(|&i| mask >> i & 1 == 1).map(|i| pairs[i]).collect::<Vec<_>>();
    let mut strong_minimizers: Vec<Vec<(usize, usize)>> = minimizers.into_iter().map(to_pairs).collect();
    strong_minimizers.sort();
    Exhaustive {
        classical: values[classical as usize].clone(),
        strong: values[best_strong as usize].clone(),
        strong_minimizers,
    }
}

/// Whether some bijection preserves every distance.
pub fn isometric_by_permutation(x: &UltrametricSpace, y: &UltrametricSpace) -> bool {
    if x.len() != y.len() {
        return false;
    }
    fn go(x: &UltrametricSpace, y: &UltrametricSpace, f: &mut Vec<usize>, used: &mut Vec<bool>) -> bool {
        let i = f.len();
        if i == x.len() {
            return true;
        }
        for b in 0..y.len() {
            if used[b] || (0..i).any(|a| x.d(a, i) != y.d(f[a], b)) {
                continue;
            }
            used[b] = true;
            f.push(b);
            if go(x, y, f, used) {
                return true;
            }
            f.pop();
            used[b] = false;
        }
        false
    }
    go(x, y, &mut Vec::new(), &mut vec![false; y.len()])
}

/// Brute-force strongness check straight from the universal condition.
pub fn is_strong(x: &UltrametricSpace, y: &UltrametricSpace, pairs: &[(usize, usize)]) -> bool {
    let inside = |a: usize, b: usize| pairs.contains(&(a, b));
    let mut dis = ExactValue::zero();
    for &(a, b) in pairs {
        for &(c, d) in pairs {
            dis = dis.max(x.d(a, c).abs_diff(y.d(b, d)));
        }
    }
    x.points().all(|a| {
        y.points().all(|b| {
            inside(a, b)
                || pairs.iter().filter(|p| p.0 == a).all(|&(_, b2)| {
                    pairs.iter().filter(|p| p.1 == b).all(|&(a2, _)| {
                        let dl = x.d(a, a2);
                        dl == y.d(b, b2) && *dl > dis
                    })
                })
        })
    })
}
