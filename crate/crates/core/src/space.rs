//! Validated finite ultrametric spaces and their intrinsic geometry.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::value::ExactValue;

/// A finite ultrametric space.
///
/// Points are identified by position; labels are display metadata. Once
/// constructed through [`UltrametricSpace::validate`] the matrix is known to
/// satisfy the strong triangle inequality and is never mutated.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UltrametricSpace {
    labels: Vec<String>,
    dist: Vec<ExactValue>,
    inexact: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("a space needs at least one point")]
    EmptySpace,
    #[error("distance matrix is not square (row {row} has {len} entries, expected {expected})")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("{labels} labels given for {points} points")]
    LabelCountMismatch { labels: usize, points: usize },
    #[error("label `{0}` is empty or contains whitespace")]
    InvalidLabel(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("d({i},{j}) != d({j},{i})")]
    AsymmetricMatrix { i: usize, j: usize },
    #[error("d({0},{0}) is not zero")]
    NonzeroDiagonal(usize),
    #[error("d({i},{j}) is zero for distinct points")]
    ZeroOffDiagonal { i: usize, j: usize },
    #[error(
        "strong triangle inequality fails: d({i},{k}) = {d_ik} > max(d({i},{j}) = {d_ij}, d({j},{k}) = {d_jk})"
    )]
    UltrametricViolation {
        i: usize,
        j: usize,
        k: usize,
        d_ij: ExactValue,
        d_jk: ExactValue,
        d_ik: ExactValue,
    },
    #[error("empty point subset")]
    EmptySubset,
    #[error("point index {index} out of range for a space of {len} points")]
    IndexOutOfRange { index: usize, len: usize },
}

impl UltrametricSpace {
    /// Checks a square matrix and builds the space.
    ///
    /// Violations are reported for the lexicographically first offending
    /// index (diagonal, then pairs, then ordered triples).
    pub fn validate(matrix: Vec<Vec<ExactValue>>, labels: Vec<String>) -> Result<Self, SpaceError> {
        let n = matrix.len();
        if n == 0 {
            return Err(SpaceError::EmptySpace);
        }
        for (row, r) in matrix.iter().enumerate() {
            if r.len() != n {
                return Err(SpaceError::NotSquare { row, len: r.len(), expected: n });
            }
        }
        check_labels(&labels, n)?;
        let dist: Vec<ExactValue> = matrix.into_iter().flatten().collect();
        let at = |i: usize, j: usize| &dist[i * n + j];

        for i in 0..n {
            if !at(i, i).is_zero() {
                return Err(SpaceError::NonzeroDiagonal(i));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if at(i, j) != at(j, i) {
                    return Err(SpaceError::AsymmetricMatrix { i, j });
                }
                if at(i, j).is_zero() {
                    return Err(SpaceError::ZeroOffDiagonal { i, j });
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if at(i, k) > at(i, j).max_of(at(j, k)) {
                        return Err(SpaceError::UltrametricViolation {
                            i,
                            j,
                            k,
                            d_ij: at(i, j).clone(),
                            d_jk: at(j, k).clone(),
                            d_ik: at(i, k).clone(),
                        });
                    }
                }
            }
        }
        Ok(UltrametricSpace { labels, dist, inexact: false })
    }

    /// Builds a space whose validity is guaranteed by construction.
    /// Debug builds still run the full check on small spaces.
    pub(crate) fn from_trusted(dist: Vec<ExactValue>, labels: Vec<String>) -> Self {
        let space = UltrametricSpace { labels, dist, inexact: false };
        debug_assert!(
            space.len() > 64 || Self::validate(space.matrix(), space.labels.clone()).is_ok(),
            "constructed matrix is not ultrametric"
        );
        space
    }

    pub fn singleton(label: &str) -> Self {
        UltrametricSpace { labels: vec![label.to_string()], dist: vec![ExactValue::zero()], inexact: false }
    }

    pub fn with_inexact(mut self, inexact: bool) -> Self {
        self.inexact = inexact;
        self
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// True for spaces whose distances approximate irrational values.
    pub fn is_inexact(&self) -> bool {
        self.inexact
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> &ExactValue {
        &self.dist[i * self.len() + j]
    }

    pub fn matrix(&self) -> Vec<Vec<ExactValue>> {
        self.dist.chunks(self.len()).map(|r| r.to_vec()).collect()
    }

    pub fn points(&self) -> std::ops::Range<usize> {
        0..self.len()
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<(), SpaceError> {
        if index < self.len() {
            Ok(())
        } else {
            Err(SpaceError::IndexOutOfRange { index, len: self.len() })
        }
    }

    fn checked_set(&self, set: &[usize]) -> Result<Vec<usize>, SpaceError> {
        if set.is_empty() {
            return Err(SpaceError::EmptySubset);
        }
        for &i in set {
            self.check_index(i)?;
        }
        Ok(set.iter().copied().collect::<BTreeSet<_>>().into_iter().collect())
    }

    /// Largest pairwise distance; zero for a singleton.
    pub fn diameter(&self) -> ExactValue {
        self.dist.iter().max().cloned().unwrap_or_else(ExactValue::zero)
    }

    /// Smallest nonzero distance, absent for a singleton.
    pub fn separation(&self) -> Option<ExactValue> {
        self.dist.iter().filter(|v| v.is_positive()).min().cloned()
    }

    /// Restriction of the metric to `subset` (sorted, duplicates dropped).
    pub fn induced_subspace(&self, subset: &[usize]) -> Result<Self, SpaceError> {
        let idx = self.checked_set(subset)?;
        let mut dist = Vec::with_capacity(idx.len() * idx.len());
        for &i in &idx {
            for &j in &idx {
                dist.push(self.d(i, j).clone());
            }
        }
        let labels = idx.iter().map(|&i| self.labels[i].clone()).collect();
        Ok(UltrametricSpace { labels, dist, inexact: self.inexact })
    }

    /// `dist(x, S) = min over s in S of d(x, s)`.
    pub fn dist_to_set(&self, x: usize, set: &[usize]) -> ExactValue {
        set.iter()
            .map(|&s| self.d(x, s))
            .min()
            .cloned()
            .expect("nonempty set")
    }

    /// Hausdorff distance between two nonempty subsets.
    pub fn hausdorff_distance(&self, a: &[usize], b: &[usize]) -> Result<ExactValue, SpaceError> {
        let a = self.checked_set(a)?;
        let b = self.checked_set(b)?;
        let one_sided = |from: &[usize], to: &[usize]| {
            from.iter().map(|&x| self.dist_to_set(x, to)).max().expect("nonempty")
        };
        Ok(one_sided(&a, &b).max(one_sided(&b, &a)))
    }

    /// Whether every point lies strictly closer than `eps` to `set`.
    pub fn is_epsilon_net(&self, set: &[usize], eps: &ExactValue) -> bool {
        !set.is_empty() && self.points().all(|x| self.dist_to_set(x, set) < *eps)
    }

    /// Partition into open balls `{y : d(x, y) < eps}`.
    ///
    /// Classes are sorted and listed in order of their smallest member, which
    /// is also the class representative.
    pub fn ball_partition(&self, eps: &ExactValue) -> Vec<Vec<usize>> {
        self.partition_by(|d| d < eps)
    }

    fn partition_by(&self, same: impl Fn(&ExactValue) -> bool) -> Vec<Vec<usize>> {
        let mut assigned = vec![false; self.len()];
        let mut classes = Vec::new();
        for x in self.points() {
            if assigned[x] {
                continue;
            }
            // the ball around its smallest member is the whole class
            let class: Vec<usize> = (x..self.len()).filter(|&y| !assigned[y] && same(self.d(x, y))).collect();
            for &y in &class {
                assigned[y] = true;
            }
            classes.push(class);
        }
        classes
    }

    /// Representatives of [`Self::ball_partition`]: a minimum-size `eps`-net.
    pub fn ball_representatives(&self, eps: &ExactValue) -> Vec<usize> {
        self.ball_partition(eps).iter().map(|c| c[0]).collect()
    }

    /// Largest distance within `set`.
    pub fn set_diameter(&self, set: &[usize]) -> ExactValue {
        let mut best = ExactValue::zero();
        for &i in set {
            for &j in set {
                if self.d(i, j) > &best {
                    best = self.d(i, j).clone();
                }
            }
        }
        best
    }

    /// Whether a bijection preserving every distance exists, by brute force
    /// over permutations pruned on partial assignments.
    pub fn is_isometric_to(&self, other: &UltrametricSpace) -> bool {
        if self.len() != other.len() || self.diameter() != other.diameter() {
            return false;
        }
        fn extend(x: &UltrametricSpace, y: &UltrametricSpace, img: &mut Vec<usize>, used: &mut [bool]) -> bool {
            let k = img.len();
            if k == x.len() {
                return true;
            }
            for cand in 0..y.len() {
                if used[cand] || (0..k).any(|j| x.d(j, k) != y.d(img[j], cand)) {
                    continue;
                }
                used[cand] = true;
                img.push(cand);
                if extend(x, y, img, used) {
                    return true;
                }
                img.pop();
                used[cand] = false;
            }
            false
        }
        extend(self, other, &mut Vec::new(), &mut vec![false; other.len()])
    }
}

fn check_labels(labels: &[String], n: usize) -> Result<(), SpaceError> {
    if labels.len() != n {
        return Err(SpaceError::LabelCountMismatch { labels: labels.len(), points: n });
    }
    let mut seen = BTreeSet::new();
    for l in labels {
        if l.is_empty() || l.chars().any(char::is_whitespace) {
            return Err(SpaceError::InvalidLabel(l.clone()));
        }
        if !seen.insert(l.as_str()) {
            return Err(SpaceError::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

/// Labels `"0"`, `"1"`, ... for `n` points.
pub fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: u64, d: u64) -> ExactValue {
        ExactValue::ratio(n, d)
    }

    fn from_rows(rows: &[&[(u64, u64)]]) -> Result<UltrametricSpace, SpaceError> {
        let m = rows.iter().map(|r| r.iter().map(|&(a, b)| v(a, b)).collect()).collect();
        UltrametricSpace::validate(m, index_labels(rows.len()))
    }

    fn z4() -> UltrametricSpace {
        let h = (1, 2);
        let o = (1, 1);
        let z = (0, 1);
        from_rows(&[&[z, o, h, o], &[o, z, o, h], &[h, o, z, o], &[o, h, o, z]]).unwrap()
    }

    #[test]
    fn singleton_is_valid() {
        let s = from_rows(&[&[(0, 1)]]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.diameter(), ExactValue::zero());
        assert_eq!(s.separation(), None);
    }

    #[test]
    fn z4_validates_and_matches_brute_force() {
        let s = z4();
        // every ordered triple
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    assert!(s.d(i, k) <= s.d(i, j).max_of(s.d(j, k)));
                }
            }
        }
        assert_eq!(s.diameter(), v(1, 1));
    }

    #[test]
    fn reports_first_ultrametric_violation() {
        let err = from_rows(&[&[(0, 1), (1, 1), (3, 1)], &[(1, 1), (0, 1), (1, 1)], &[(3, 1), (1, 1), (0, 1)]])
            .unwrap_err();
        assert_eq!(
            err,
            SpaceError::UltrametricViolation { i: 0, j: 1, k: 2, d_ij: v(1, 1), d_jk: v(1, 1), d_ik: v(3, 1) }
        );
    }

    #[test]
    fn structural_errors() {
        assert_eq!(
            from_rows(&[&[(0, 1), (1, 1)], &[(1, 2), (0, 1)]]).unwrap_err(),
            SpaceError::AsymmetricMatrix { i: 0, j: 1 }
        );
        assert_eq!(
            from_rows(&[&[(0, 1), (1, 1)], &[(1, 1), (1, 1)]]).unwrap_err(),
            SpaceError::NonzeroDiagonal(1)
        );
        assert_eq!(
            from_rows(&[&[(0, 1), (0, 1)], &[(0, 1), (0, 1)]]).unwrap_err(),
            SpaceError::ZeroOffDiagonal { i: 0, j: 1 }
        );
        let m = vec![vec![v(0, 1)]];
        assert_eq!(
            UltrametricSpace::validate(m.clone(), vec!["a b".into()]).unwrap_err(),
            SpaceError::InvalidLabel("a b".into())
        );
        assert!(matches!(
            UltrametricSpace::validate(m, vec![]).unwrap_err(),
            SpaceError::LabelCountMismatch { .. }
        ));
        assert_eq!(UltrametricSpace::validate(vec![], vec![]).unwrap_err(), SpaceError::EmptySpace);
    }

    #[test]
    fn induced_subspace_reads_the_matrix() {
        let s = z4();
        let sub = s.induced_subspace(&[0, 2]).unwrap();
        assert_eq!(sub.len(), 2);
        assert_eq!(sub.d(0, 1), &v(1, 2));
        assert_eq!(s.induced_subspace(&[0, 1, 2, 3]).unwrap(), s);
        assert_eq!(s.induced_subspace(&[3]).unwrap().len(), 1);
        assert_eq!(s.induced_subspace(&[]).unwrap_err(), SpaceError::EmptySubset);
        assert!(matches!(s.induced_subspace(&[9]), Err(SpaceError::IndexOutOfRange { .. })));
    }

    #[test]
    fn hausdorff_examples() {
        let s = z4();
        assert_eq!(s.hausdorff_distance(&[1, 3], &[3, 1]).unwrap(), ExactValue::zero());
        assert_eq!(s.hausdorff_distance(&[0], &[2]).unwrap(), v(1, 2));
        assert_eq!(s.hausdorff_distance(&[0, 1], &[0, 1, 2, 3]).unwrap(), v(1, 2));
        assert_eq!(s.hausdorff_distance(&[], &[0]).unwrap_err(), SpaceError::EmptySubset);
    }

    #[test]
    fn epsilon_nets_use_strict_inequality() {
        let s = z4();
        assert!(s.is_epsilon_net(&[0, 1, 2, 3], &v(1, 100)));
        assert!(s.is_epsilon_net(&[0, 1], &v(1, 1)));
        assert!(!s.is_epsilon_net(&[0, 1], &v(1, 2)));
        let x3 = from_rows(&[&[(0, 1), (1, 1), (1, 1)], &[(1, 1), (0, 1), (1, 1)], &[(1, 1), (1, 1), (0, 1)]])
            .unwrap();
        assert!(!x3.is_epsilon_net(&[0, 1], &v(1, 1)));
    }

    #[test]
    fn ball_partitions() {
        let s = z4();
        assert_eq!(s.ball_partition(&v(1, 1)), vec![vec![0, 2], vec![1, 3]]);
        assert_eq!(s.ball_partition(&v(1, 2)), vec![vec![0], vec![1], vec![2], vec![3]]);
        assert_eq!(s.ball_partition(&v(3, 2)), vec![vec![0, 1, 2, 3]]);
        assert_eq!(s.ball_representatives(&v(1, 1)), vec![0, 1]);
    }

    #[test]
    fn isometry_check() {
        let s = z4();
        let relabeled = from_rows(&[
            &[(0, 1), (1, 2), (1, 1), (1, 1)],
            &[(1, 2), (0, 1), (1, 1), (1, 1)],
            &[(1, 1), (1, 1), (0, 1), (1, 2)],
            &[(1, 1), (1, 1), (1, 2), (0, 1)],
        ])
        .unwrap();
        assert!(s.is_isometric_to(&relabeled));
        assert!(!s.is_isometric_to(&s.induced_subspace(&[0, 1, 2]).unwrap()));
    }
}
