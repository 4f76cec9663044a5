//! Example spaces: truncated rings of integers of local fields, scaled
//! balls, the `Z_q` plus extra points construction, and random
//! dendrogram spaces.
//!
//! Ring points are indexed by integers whose base `p^f` digits, least
//! significant first, are the digit string of the point. Two points at
//! first differing digit position `j` are at distance `p^-j`.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{index_labels, UltrametricSpace};
use crate::value::ExactValue;

/// Largest number of points a generator will build.
pub const MAX_POINTS: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeneratorError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("parameter `{name}` must be at least {min}")]
    TooSmall { name: &'static str, min: u64 },
    #[error("space would have {points} points, above the cap of {cap}")]
    SizeCapExceeded { points: String, cap: u64 },
    #[error("zq_delta needs p > q (got p = {p}, q = {q})")]
    RequiresPGreaterQ { p: u64, q: u64 },
    #[error("value pool must be nonempty and strictly positive")]
    InvalidPool,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Parameters of a finite extension of `Q_p`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalFieldParams {
    pub p: u64,
    /// ramification index
    pub e: u32,
    /// residue degree
    pub f: u32,
    /// ball exponent: the ball is `M^s`
    pub s: i64,
    pub depth: u32,
}

impl LocalFieldParams {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        if !is_prime(self.p) {
            return Err(GeneratorError::NotPrime(self.p));
        }
        for (name, v) in [("e", self.e), ("f", self.f), ("depth", self.depth)] {
            if v < 1 {
                return Err(GeneratorError::TooSmall { name, min: 1 });
            }
        }
        Ok(())
    }

    pub fn residue_field_size(&self) -> u64 {
        self.p.pow(self.f)
    }

    /// Number of uniformizer digits kept: `e * depth`.
    pub fn digits(&self) -> u32 {
        self.e * self.depth
    }

    fn point_count(&self) -> Result<usize, GeneratorError> {
        let count = BigUint::from(self.residue_field_size()).pow(self.digits());
        if count > BigUint::from(MAX_POINTS) {
            return Err(GeneratorError::SizeCapExceeded { points: count.to_string(), cap: MAX_POINTS });
        }
        Ok(u64::try_from(&count).expect("below cap") as usize)
    }
}

/// Index of the first differing base-`q` digit of `a` and `b` (`a != b`).
fn first_difference(mut a: usize, mut b: usize, q: usize) -> usize {
    let mut j = 0;
    while a % q == b % q {
        a /= q;
        b /= q;
        j += 1;
    }
    j
}

/// Builds a digit-tree space where points differing first at digit `j`
/// are at distance `level[j]`.
fn digit_space(q: usize, n: usize, level: &[ExactValue], inexact: bool) -> UltrametricSpace {
    let mut dist = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            dist.push(if a == b { ExactValue::zero() } else { level[first_difference(a, b, q)].clone() });
        }
    }
    UltrametricSpace::from_trusted(dist, index_labels(n)).with_inexact(inexact)
}

/// `O_F / M^depth` for an unramified extension of degree `f`.
pub fn truncated_unramified_ring(p: u64, f: u32, depth: u32) -> Result<UltrametricSpace, GeneratorError> {
    truncated_scaled_ball(p, f, 0, depth)
}

/// `M^s / M^(s + depth)` for an unramified extension: the ring with every
/// distance multiplied by `p^-s`.
pub fn truncated_scaled_ball(p: u64, f: u32, s: i64, depth: u32) -> Result<UltrametricSpace, GeneratorError> {
    let params = LocalFieldParams { p, e: 1, f, s, depth };
    params.validate()?;
    let n = params.point_count()?;
    let level: Vec<ExactValue> =
        (0..depth as i64).map(|j| ExactValue::power_of_inverse(p, s + j)).collect();
    Ok(digit_space(params.residue_field_size() as usize, n, &level, false))
}

/// `floor(2^bits * p^(-k/e))`, computed with integers only.
fn dyadic_floor(p: u64, e: u32, k: i64, bits: u32) -> BigUint {
    // largest N with N^e * p^k <= 2^(bits*e) (k >= 0), or N^e <= 2^(bits*e) * p^-k
    let pk = BigUint::from(p).pow(k.unsigned_abs() as u32);
    let bound = BigUint::one() << (bits as usize * e as usize);
    let (lhs_scale, rhs) = if k >= 0 { (pk, bound) } else { (BigUint::one(), bound * pk) };
    let fits = |n: &BigUint| n.pow(e) * &lhs_scale <= rhs;
    let mut lo = BigUint::zero();
    let mut hi = BigUint::one();
    while fits(&hi) {
        hi <<= 1;
    }
    while &hi - &lo > BigUint::one() {
        let mid = (&lo + &hi) >> 1;
        if fits(&mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn approx_inverse_root(p: u64, e: u32, k: i64, bits: u32) -> ExactValue {
    if k % e as i64 == 0 {
        return ExactValue::power_of_inverse(p, k / e as i64);
    }
    let n = dyadic_floor(p, e, k, bits);
    ExactValue::from_big(n, BigUint::one() << bits as usize).expect("nonzero denominator")
}

/// `M^s / M^(s + e*depth)` for an extension with ramification index `e`.
///
/// Distances `p^(-(s+j)/e)` are irrational when `e` does not divide `s + j`;
/// those are replaced by `floor(2^b x) / 2^b`, with `b` raised from
/// `precision_bits` until the approximations are strictly ordered. The
/// result is flagged inexact when any value was approximated.
pub fn ramified_ball_approx(
    p: u64,
    e: u32,
    f: u32,
    s: i64,
    depth: u32,
    precision_bits: u32,
) -> Result<UltrametricSpace, GeneratorError> {
    let params = LocalFieldParams { p, e, f, s, depth };
    params.validate()?;
    let n = params.point_count()?;
    let digits = params.digits() as i64;
    let mut bits = precision_bits.max(1);
    let level = loop {
        let level: Vec<ExactValue> = (0..digits).map(|j| approx_inverse_root(p, e, s + j, bits)).collect();
        if level.windows(2).all(|w| w[0] > w[1]) && level.iter().all(ExactValue::is_positive) {
            break level;
        }
        bits += 8;
    };
    let inexact = (0..digits).any(|j| (s + j) % e as i64 != 0);
    Ok(digit_space(params.residue_field_size() as usize, n, &level, inexact))
}

/// `Z/q^depth` plus `p - q` extra points `t_q, ..., t_{p-1}` at distance
/// `1 + 1/q` from everything.
pub fn zq_delta(p: u64, q: u64, depth: u32) -> Result<UltrametricSpace, GeneratorError> {
    for v in [p, q] {
        if !is_prime(v) {
            return Err(GeneratorError::NotPrime(v));
        }
    }
    if p <= q {
        return Err(GeneratorError::RequiresPGreaterQ { p, q });
    }
    let ring = truncated_unramified_ring(q, 1, depth)?;
    let m = ring.len();
    let extra = (p - q) as usize;
    if (m + extra) as u64 > MAX_POINTS {
        return Err(GeneratorError::SizeCapExceeded { points: (m + extra).to_string(), cap: MAX_POINTS });
    }
    let far = ExactValue::one().add(&ExactValue::ratio(1, q));
    let total = m + extra;
    let mut dist = Vec::with_capacity(total * total);
    for a in 0..total {
        for b in 0..total {
            dist.push(if a == b {
                ExactValue::zero()
            } else if a < m && b < m {
                ring.d(a, b).clone()
            } else {
                far.clone()
            });
        }
    }
    let mut labels = index_labels(m);
    labels.extend((q..p).map(|i| format!("t{i}")));
    Ok(UltrametricSpace::from_trusted(dist, labels))
}

/// A random dendrogram space on `n` points.
///
/// The root merges at a random pool value; every child node merges at a
/// random pool value strictly below its parent's, or at the smallest pool
/// value once none is left. Deterministic for a given seed.
pub fn random_ultrametric(n: usize, seed: u64, pool: &[ExactValue]) -> Result<UltrametricSpace, GeneratorError> {
    if n == 0 {
        return Err(GeneratorError::TooSmall { name: "n", min: 1 });
    }
    if n as u64 > MAX_POINTS {
        return Err(GeneratorError::SizeCapExceeded { points: n.to_string(), cap: MAX_POINTS });
    }
    let mut pool: Vec<ExactValue> = pool.to_vec();
    pool.sort();
    pool.dedup();
    if pool.is_empty() || !pool[0].is_positive() {
        return Err(GeneratorError::InvalidPool);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = vec![0usize; n * n];
    let root = rng.gen_range(0..pool.len());
    split(&mut rng, (0..n).collect(), root, n, &mut level);
    let dist = (0..n * n)
        .map(|i| if i / n == i % n { ExactValue::zero() } else { pool[level[i]].clone() })
        .collect();
    Ok(UltrametricSpace::from_trusted(dist, index_labels(n)))
}

fn split(rng: &mut ChaCha8Rng, mut points: Vec<usize>, value: usize, n: usize, level: &mut [usize]) {
    if points.len() < 2 {
        return;
    }
    points.shuffle(rng);
    let k = rng.gen_range(2..=points.len());
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &pt) in points.iter().enumerate() {
        let g = if i < k { i } else { rng.gen_range(0..k) };
        groups[g].push(pt);
    }
    for (gi, g) in groups.iter().enumerate() {
        for h in &groups[gi + 1..] {
            for &a in g {
                for &b in h {
                    level[a * n + b] = value;
                    level[b * n + a] = value;
                }
            }
        }
    }
    for g in groups {
        let child = if value == 0 { 0 } else { rng.gen_range(0..value) };
        split(rng, g, child, n, level);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: u64, d: u64) -> ExactValue {
        ExactValue::ratio(n, d)
    }

    #[test]
    fn small_rings() {
        let x2 = truncated_unramified_ring(2, 1, 1).unwrap();
        assert_eq!(x2.len(), 2);
        assert_eq!(x2.d(0, 1), &v(1, 1));
        let z4 = truncated_unramified_ring(2, 1, 2).unwrap();
        assert_eq!(z4.d(0, 2), &v(1, 2));
        assert_eq!(z4.d(1, 3), &v(1, 2));
        assert_eq!(z4.d(0, 1), &v(1, 1));
        assert_eq!(z4.d(2, 3), &v(1, 1));
        let f4 = truncated_unramified_ring(2, 2, 1).unwrap();
        assert_eq!(f4.len(), 4);
        assert!(f4.points().all(|a| f4.points().all(|b| a == b || f4.d(a, b) == &v(1, 1))));
    }

    #[test]
    fn parameter_errors() {
        assert_eq!(truncated_unramified_ring(4, 1, 1).unwrap_err(), GeneratorError::NotPrime(4));
        assert!(matches!(truncated_unramified_ring(2, 1, 0), Err(GeneratorError::TooSmall { name: "depth", .. })));
        assert!(matches!(truncated_unramified_ring(2, 1, 11), Err(GeneratorError::SizeCapExceeded { .. })));
        assert_eq!(zq_delta(2, 3, 1).unwrap_err(), GeneratorError::RequiresPGreaterQ { p: 2, q: 3 });
        assert_eq!(random_ultrametric(3, 0, &[]).unwrap_err(), GeneratorError::InvalidPool);
    }

    #[test]
    fn scaled_balls() {
        let b = truncated_scaled_ball(2, 1, 1, 1).unwrap();
        assert_eq!(b.d(0, 1), &v(1, 2));
        let b = truncated_scaled_ball(3, 1, 1, 1).unwrap();
        assert_eq!(b.diameter(), v(1, 3));
        assert_eq!(truncated_scaled_ball(2, 1, 0, 2).unwrap(), truncated_unramified_ring(2, 1, 2).unwrap());
        let big = truncated_scaled_ball(2, 1, -1, 1).unwrap();
        assert_eq!(big.diameter(), v(2, 1));
    }

    #[test]
    fn zq_delta_shapes() {
        let y = zq_delta(3, 2, 1).unwrap();
        assert_eq!(y.labels(), &["0", "1", "t2"]);
        assert_eq!(y.d(0, 1), &v(1, 1));
        assert_eq!(y.d(0, 2), &v(3, 2));
        assert_eq!(y.diameter(), v(3, 2));
        let y = zq_delta(5, 3, 1).unwrap();
        assert_eq!(y.len(), 5);
        assert_eq!(y.d(3, 4), &v(4, 3));
        let ring = truncated_unramified_ring(2, 1, 2).unwrap();
        let y = zq_delta(5, 2, 2).unwrap();
        assert_eq!(y.induced_subspace(&[0, 1, 2, 3]).unwrap().matrix(), ring.matrix());
    }

    #[test]
    fn ramified_approximation() {
        let r = ramified_ball_approx(2, 2, 1, 0, 1, 20).unwrap();
        assert!(r.is_inexact());
        assert_eq!(r.len(), 4);
        let a = r.d(0, 2).as_rational().clone();
        // a <= 2^(-1/2) < a + 2^-20, checked by squaring
        let two = num_rational::BigRational::from_integer(2.into());
        let eps = ExactValue::power_of_inverse(2, 20).as_rational().clone();
        assert!(&a * &a * &two <= num_rational::BigRational::one());
        let up = &a + &eps;
        assert!(&up * &up * &two > num_rational::BigRational::one());

        let r = ramified_ball_approx(3, 2, 1, 0, 2, 16).unwrap();
        let values = crate::spectrum::full_spectrum(&r);
        assert_eq!(values.len(), 4);
        assert!(values.contains(&v(1, 3)));
        assert_eq!(values.max_value(), Some(&v(1, 1)));

        let exact = ramified_ball_approx(2, 1, 1, 0, 2, 8).unwrap();
        assert!(!exact.is_inexact());
        assert_eq!(exact, truncated_unramified_ring(2, 1, 2).unwrap());
    }

    #[test]
    fn random_spaces_are_deterministic() {
        let pool = [v(1, 4), v(1, 2), v(1, 1)];
        let a = random_ultrametric(6, 7, &pool).unwrap();
        let b = random_ultrametric(6, 7, &pool).unwrap();
        assert_eq!(a, b);
        assert_eq!(random_ultrametric(1, 3, &pool).unwrap().len(), 1);
        let two = random_ultrametric(2, 9, &[v(1, 1)]).unwrap();
        assert_eq!(two.d(0, 1), &v(1, 1));
    }
}
