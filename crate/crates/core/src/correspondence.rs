//! Correspondences between two spaces, their distortion, the strongness
//! predicate, the equilibrium function, glue constructions and exact
//! minimum-distortion searches.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::ladder::{NodeCounter, Ranked};
use crate::space::{SpaceError, UltrametricSpace};
use crate::spectrum::full_spectrum;
use crate::value::ExactValue;

pub type Pair = (usize, usize);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorrespondenceError {
    #[error("{side:?} index {index} out of range ({len} points)")]
    IndexOutOfRange { side: Side, index: usize, len: usize },
    #[error("{side:?} point {index} is not covered by any pair")]
    Uncovered { side: Side, index: usize },
    #[error("map has {got} images for {expected} points")]
    MapLength { got: usize, expected: usize },
    #[error("map is not surjective: right point {0} has no preimage")]
    NotSurjective(usize),
    #[error("correspondence is not strong")]
    NotStrong(Box<StrongnessVerdict>),
    #[error("equilibrium value at ({x},{y}) depends on the chosen partner: {first} vs {second}")]
    WellDefinednessViolation { x: usize, y: usize, first: ExactValue, second: ExactValue },
    #[error("bridge constant {c} is below the required {required}")]
    BridgeTooSmall { c: ExactValue, required: ExactValue },
    #[error("glued matrix failed validation: {0}")]
    GlueNotUltrametric(SpaceError),
}

/// A relation between the points of two spaces covering both sides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Correspondence<'a> {
    left: &'a UltrametricSpace,
    right: &'a UltrametricSpace,
    pairs: BTreeSet<Pair>,
}

fn check_pairs(x: &UltrametricSpace, y: &UltrametricSpace, pairs: &BTreeSet<Pair>) -> Result<(), CorrespondenceError> {
    for &(a, b) in pairs {
        if a >= x.len() {
            return Err(CorrespondenceError::IndexOutOfRange { side: Side::Left, index: a, len: x.len() });
        }
        if b >= y.len() {
            return Err(CorrespondenceError::IndexOutOfRange { side: Side::Right, index: b, len: y.len() });
        }
    }
    Ok(())
}

fn first_uncovered(x: &UltrametricSpace, y: &UltrametricSpace, pairs: &BTreeSet<Pair>) -> Option<(Side, usize)> {
    let mut left = vec![false; x.len()];
    let mut right = vec![false; y.len()];
    for &(a, b) in pairs {
        left[a] = true;
        right[b] = true;
    }
    if let Some(i) = left.iter().position(|c| !c) {
        return Some((Side::Left, i));
    }
    right.iter().position(|c| !c).map(|i| (Side::Right, i))
}

/// Whether `pairs` covers every point of both spaces.
pub fn is_correspondence(
    x: &UltrametricSpace,
    y: &UltrametricSpace,
    pairs: &[Pair],
) -> Result<bool, CorrespondenceError> {
    let set: BTreeSet<Pair> = pairs.iter().copied().collect();
    check_pairs(x, y, &set)?;
    Ok(first_uncovered(x, y, &set).is_none())
}

impl<'a> Correspondence<'a> {
    pub fn new(
        left: &'a UltrametricSpace,
        right: &'a UltrametricSpace,
        pairs: impl IntoIterator<Item = Pair>,
    ) -> Result<Self, CorrespondenceError> {
        let pairs: BTreeSet<Pair> = pairs.into_iter().collect();
        check_pairs(left, right, &pairs)?;
        if let Some((side, index)) = first_uncovered(left, right, &pairs) {
            return Err(CorrespondenceError::Uncovered { side, index });
        }
        Ok(Correspondence { left, right, pairs })
    }

    pub fn full_product(left: &'a UltrametricSpace, right: &'a UltrametricSpace) -> Self {
        let pairs = left.points().flat_map(|a| right.points().map(move |b| (a, b))).collect();
        Correspondence { left, right, pairs }
    }

    /// The graph `{(x, f(x))}` of a surjective map.
    pub fn from_map(
        left: &'a UltrametricSpace,
        right: &'a UltrametricSpace,
        images: &[usize],
    ) -> Result<Self, CorrespondenceError> {
        if images.len() != left.len() {
            return Err(CorrespondenceError::MapLength { got: images.len(), expected: left.len() });
        }
        let pairs: BTreeSet<Pair> = images.iter().copied().enumerate().collect();
        check_pairs(left, right, &pairs)?;
        if let Some((_, missing)) = first_uncovered(left, right, &pairs) {
            return Err(CorrespondenceError::NotSurjective(missing));
        }
        Ok(Correspondence { left, right, pairs })
    }

    pub fn left(&self) -> &'a UltrametricSpace {
        self.left
    }

    pub fn right(&self) -> &'a UltrametricSpace {
        self.right
    }

    pub fn pairs(&self) -> &BTreeSet<Pair> {
        &self.pairs
    }

    pub fn to_vec(&self) -> Vec<Pair> {
        self.pairs.iter().copied().collect()
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.pairs.contains(&(x, y))
    }

    /// Pairs of `X × Y` outside the relation, in lexicographic order.
    pub fn complement(&self) -> impl Iterator<Item = Pair> + '_ {
        self.left
            .points()
            .flat_map(move |a| self.right.points().map(move |b| (a, b)))
            .filter(move |p| !self.pairs.contains(p))
    }

    fn partners_of_left(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.pairs.range((x, 0)..(x + 1, 0)).map(|&(_, b)| b)
    }

    fn partners_of_right(&self, y: usize) -> impl Iterator<Item = usize> + '_ {
        self.pairs.iter().filter(move |&&(_, b)| b == y).map(|&(a, _)| a)
    }

    /// `max |d_X(x, x') - d_Y(y, y')|` over pairs of related pairs.
    pub fn distortion(&self) -> ExactValue {
        let mut best = ExactValue::zero();
        for &(a, b) in &self.pairs {
            for &(c, d) in &self.pairs {
                let gap = self.left.d(a, c).abs_diff(self.right.d(b, d));
                if gap > best {
                    best = gap;
                }
            }
        }
        best
    }

    /// Strongness via the universal form: for every `(x, y)` outside the
    /// relation and all partners `(x, y')`, `(x', y)` inside it,
    /// `d_X(x, x') = d_Y(y, y') > dis`.
    pub fn strongness(&self) -> StrongnessVerdict {
        let distortion = self.distortion();
        for (x, y) in self.complement() {
            for y2 in self.partners_of_left(x) {
                for x2 in self.partners_of_right(y) {
                    let dl = self.left.d(x, x2);
                    let dr = self.right.d(y, y2);
                    if dl != dr || *dl <= distortion {
                        let counterexample = StrongnessCounterexample {
                            outside: (x, y),
                            left_partner: x2,
                            right_partner: y2,
                            d_left: dl.clone(),
                            d_right: dr.clone(),
                        };
                        return StrongnessVerdict { is_strong: false, distortion, counterexample: Some(counterexample) };
                    }
                }
            }
        }
        StrongnessVerdict { is_strong: true, distortion, counterexample: None }
    }

    /// Strongness via the existential form: for every `(x, y)` outside the
    /// relation some partners `(x, y')`, `(x', y)` realize
    /// `d_X(x, x') = d_Y(y, y') > dis`. Equivalent to [`Self::strongness`];
    /// kept as an independent second route.
    pub fn is_strong_existential(&self) -> bool {
        let distortion = self.distortion();
        self.complement().all(|(x, y)| {
            self.partners_of_left(x).any(|y2| {
                self.partners_of_right(y).any(|x2| {
                    let dl = self.left.d(x, x2);
                    dl == self.right.d(y, y2) && *dl > distortion
                })
            })
        })
    }

    /// The equilibrium function on the complement of a strong correspondence.
    pub fn equilibrium_table(&self) -> Result<EquilibriumTable, CorrespondenceError> {
        let verdict = self.strongness();
        if !verdict.is_strong {
            return Err(CorrespondenceError::NotStrong(Box::new(verdict)));
        }
        let mut entries = Vec::new();
        for (x, y) in self.complement() {
            let mut value: Option<ExactValue> = None;
            let mut settle = |candidate: &ExactValue| -> Result<(), CorrespondenceError> {
                match &value {
                    None => value = Some(candidate.clone()),
                    Some(v) if v != candidate => {
                        return Err(CorrespondenceError::WellDefinednessViolation {
                            x,
                            y,
                            first: v.clone(),
                            second: candidate.clone(),
                        })
                    }
                    Some(_) => {}
                }
                Ok(())
            };
            for y2 in self.partners_of_left(x) {
                settle(self.right.d(y, y2))?;
            }
            for x2 in self.partners_of_right(y) {
                settle(self.left.d(x, x2))?;
            }
            let chi = value.expect("a correspondence gives every point a partner");
            entries.push(EquilibriumEntry { x, y, chi });
        }
        let inf = entries.iter().map(|e| &e.chi).min().cloned();
        let sup = entries.iter().map(|e| &e.chi).max().cloned();
        let min_diameter = self.left.diameter().min(self.right.diameter());
        Ok(EquilibriumTable { entries, inf, sup, distortion: verdict.distortion, min_diameter })
    }

    /// Glues `X` and `Y` along a strong correspondence with `r0 = dis`.
    ///
    /// Related pairs sit at distance `r0`; an unrelated pair `(x, y)` sits at
    /// `d_X(x, x')` for any `x'` related to `y`. When `r0 = 0` the result is
    /// a semi-metric and related points are identified.
    pub fn glue(&self) -> Result<GlueResult, CorrespondenceError> {
        let verdict = self.strongness();
        if !verdict.is_strong {
            return Err(CorrespondenceError::NotStrong(Box::new(verdict)));
        }
        let r0 = verdict.distortion;
        let (n, m) = (self.left.len(), self.right.len());
        if r0.is_zero() {
            // zero distortion forces the relation to be the graph of an isometry
            let mut right_embedding = vec![usize::MAX; m];
            for &(a, b) in &self.pairs {
                right_embedding[b] = a;
            }
            return Ok(GlueResult {
                glued_space: self.left.clone(),
                left_embedding: (0..n).collect(),
                right_embedding,
                r0,
                quotient_applied: true,
            });
        }
        let cross = |a: usize, b: usize| -> ExactValue {
            if self.contains(a, b) {
                r0.clone()
            } else {
                let partner = self.partners_of_right(b).next().expect("covered");
                self.left.d(a, partner).clone()
            }
        };
        let mut matrix = vec![vec![ExactValue::zero(); n + m]; n + m];
        for i in 0..n + m {
            for j in 0..n + m {
                matrix[i][j] = match (i < n, j < n) {
                    (true, true) => self.left.d(i, j).clone(),
                    (false, false) => self.right.d(i - n, j - n).clone(),
                    (true, false) => cross(i, j - n),
                    (false, true) => cross(j, i - n),
                };
            }
        }
        let glued_space = UltrametricSpace::validate(matrix, glued_labels(self.left, self.right))
            .map_err(CorrespondenceError::GlueNotUltrametric)?
            .with_inexact(self.left.is_inexact() || self.right.is_inexact());
        Ok(GlueResult {
            glued_space,
            left_embedding: (0..n).collect(),
            right_embedding: (n..n + m).collect(),
            r0,
            quotient_applied: false,
        })
    }
}

fn glued_labels(x: &UltrametricSpace, y: &UltrametricSpace) -> Vec<String> {
    x.labels()
        .iter()
        .map(|l| format!("L.{l}"))
        .chain(y.labels().iter().map(|l| format!("R.{l}")))
        .collect()
}

/// Disjoint union with every cross distance equal to `c`.
///
/// Ultrametric exactly when `c >= max(diam X, diam Y)`; `c` must be positive.
pub fn glue_with_constant_bridge(
    x: &UltrametricSpace,
    y: &UltrametricSpace,
    c: &ExactValue,
) -> Result<GlueResult, CorrespondenceError> {
    let required = x.diameter().max(y.diameter());
    if *c < required || !c.is_positive() {
        return Err(CorrespondenceError::BridgeTooSmall { c: c.clone(), required });
    }
    let (n, m) = (x.len(), y.len());
    let mut matrix = vec![vec![c.clone(); n + m]; n + m];
    for i in 0..n {
        for j in 0..n {
            matrix[i][j] = x.d(i, j).clone();
        }
    }
    for i in 0..m {
        for j in 0..m {
            matrix[n + i][n + j] = y.d(i, j).clone();
        }
    }
    let glued_space = UltrametricSpace::validate(matrix, glued_labels(x, y))
        .map_err(CorrespondenceError::GlueNotUltrametric)?
        .with_inexact(x.is_inexact() || y.is_inexact());
    Ok(GlueResult {
        glued_space,
        left_embedding: (0..n).collect(),
        right_embedding: (n..n + m).collect(),
        r0: c.clone(),
        quotient_applied: false,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrongnessCounterexample {
    /// The unrelated pair `(x, y)`.
    pub outside: Pair,
    /// `x'` with `(x', y)` related.
    pub left_partner: usize,
    /// `y'` with `(x, y')` related.
    pub right_partner: usize,
    /// `d_X(x, x')`
    pub d_left: ExactValue,
    /// `d_Y(y, y')`
    pub d_right: ExactValue,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrongnessVerdict {
    pub is_strong: bool,
    pub distortion: ExactValue,
    pub counterexample: Option<StrongnessCounterexample>,
}

impl StrongnessVerdict {
    /// Whether the counterexample really violates the universal condition.
    pub fn counterexample_replays(&self, c: &Correspondence<'_>) -> bool {
        match &self.counterexample {
            None => self.is_strong,
            Some(ce) => {
                let (x, y) = ce.outside;
                !c.contains(x, y)
                    && c.contains(ce.left_partner, y)
                    && c.contains(x, ce.right_partner)
                    && c.left().d(x, ce.left_partner) == &ce.d_left
                    && c.right().d(y, ce.right_partner) == &ce.d_right
                    && (ce.d_left != ce.d_right || ce.d_left <= self.distortion)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquilibriumEntry {
    pub x: usize,
    pub y: usize,
    pub chi: ExactValue,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquilibriumTable {
    pub entries: Vec<EquilibriumEntry>,
    pub inf: Option<ExactValue>,
    pub sup: Option<ExactValue>,
    pub distortion: ExactValue,
    pub min_diameter: ExactValue,
}

impl EquilibriumTable {
    /// `dis < chi <= min(diam X, diam Y)` on every entry.
    pub fn bounds_hold(&self) -> bool {
        self.entries.iter().all(|e| e.chi > self.distortion && e.chi <= self.min_diameter)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlueResult {
    pub glued_space: UltrametricSpace,
    pub left_embedding: Vec<usize>,
    pub right_embedding: Vec<usize>,
    pub r0: ExactValue,
    pub quotient_applied: bool,
}

impl GlueResult {
    /// Hausdorff distance between the two embedded images.
    pub fn image_hausdorff(&self) -> ExactValue {
        self.glued_space
            .hausdorff_distance(&self.left_embedding, &self.right_embedding)
            .expect("embeddings are nonempty and in range")
    }

    /// Whether both embeddings preserve every distance.
    pub fn embeddings_isometric(&self, x: &UltrametricSpace, y: &UltrametricSpace) -> bool {
        let z = &self.glued_space;
        let ok = |space: &UltrametricSpace, emb: &[usize]| {
            space
                .points()
                .all(|i| space.points().all(|j| z.d(emb[i], emb[j]) == space.d(i, j)))
        };
        ok(x, &self.left_embedding) && ok(y, &self.right_embedding)
    }
}

/// Search limits.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_nodes: u64,
}

impl Budget {
    pub const DEFAULT: Budget = Budget { max_nodes: 5_000_000 };

    pub fn nodes(max_nodes: u64) -> Self {
        Budget { max_nodes }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// An attained minimum with its lexicographically smallest witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Minimum {
    pub pairs: Vec<Pair>,
    pub distortion: ExactValue,
    pub nodes: u64,
}

/// The search ran out of nodes; the true minimum lies in
/// `[lower_bound, incumbent.distortion]`.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("search budget of {limit} nodes exhausted; minimum lies in [{lower_bound}, {}]", incumbent.distortion)]
pub struct BudgetExceeded {
    pub limit: u64,
    pub lower_bound: ExactValue,
    pub incumbent: Minimum,
}

/// Exact minimum distortion over all correspondences.
///
/// Thresholds `delta` are tried in increasing order starting at
/// `|diam X - diam Y|`; for each, a depth-first search over pair inclusion
/// (with forward checking) looks for a covering set of pairwise compatible
/// pairs, i.e. pairs whose mutual distortion is at most `delta`. The first
/// feasible threshold is the minimum. Among minimizers the lexicographically
/// smallest sorted pair list is returned.
pub fn min_distortion_correspondence(
    x: &UltrametricSpace,
    y: &UltrametricSpace,
    budget: Budget,
) -> Result<Minimum, BudgetExceeded> {
    let ranked = Ranked::new(x, y);
    let mut counter = NodeCounter::new(budget.max_nodes);
    let top = ranked.diam_x().max(ranked.diam_y());
    let full = Correspondence::full_product(x, y).to_vec();
    let exceeded = |delta: u32| BudgetExceeded {
        limit: budget.max_nodes,
        lower_bound: ranked.value(delta).clone(),
        incumbent: Minimum { pairs: full.clone(), distortion: ranked.value(top).clone(), nodes: budget.max_nodes },
    };
    for delta in ranked.diam_gap()..=top {
        let cover = CoverSearch::new(&ranked, delta);
        let all: Vec<usize> = (0..x.len() * y.len()).collect();
        match cover.extend(&[], &all, &mut counter) {
            Err(_) => return Err(exceeded(delta)),
            Ok(None) => continue,
            Ok(Some(_)) => {
                let pairs = cover.lexicographically_smallest(&mut counter).map_err(|_| exceeded(delta))?;
                let pairs: Vec<Pair> = pairs.into_iter().map(|p| (p / y.len(), p % y.len())).collect();
                return Ok(Minimum { pairs, distortion: ranked.value(delta).clone(), nodes: counter.used });
            }
        }
    }
    unreachable!("the full product has distortion max(diam X, diam Y)")
}

struct CoverSearch<'r, 'a> {
    ranked: &'r Ranked<'a>,
    delta: u32,
    m: usize,
}

impl CoverSearch<'_, '_> {
    fn new<'r, 'a>(ranked: &'r Ranked<'a>, delta: u32) -> CoverSearch<'r, 'a> {
        CoverSearch { ranked, delta, m: ranked.y.len() }
    }

    #[inline]
    fn compatible(&self, p: usize, q: usize) -> bool {
        let (a, b) = (p / self.m, p % self.m);
        let (c, d) = (q / self.m, q % self.m);
        self.ranked.diff(a, c, b, d) <= self.delta
    }

    /// Extends `chosen` by pairs from `pool` (each compatible with `chosen`)
    /// to a covering compatible set.
    fn extend(
        &self,
        chosen: &[usize],
        pool: &[usize],
        counter: &mut NodeCounter,
    ) -> Result<Option<Vec<usize>>, crate::ladder::OutOfBudget> {
        counter.tick()?;
        let n = self.ranked.x.len();
        let m = self.m;
        let mut covered_l = vec![false; n];
        let mut covered_r = vec![false; m];
        for &p in chosen {
            covered_l[p / m] = true;
            covered_r[p % m] = true;
        }
        // most constrained uncovered point
        let mut best: Option<(usize, Vec<usize>)> = None;
        for (side, covered) in [(0, &covered_l), (1, &covered_r)] {
            for (i, _) in covered.iter().enumerate().filter(|(_, c)| !**c) {
                let cands: Vec<usize> = pool
                    .iter()
                    .copied()
                    .filter(|&p| if side == 0 { p / m == i } else { p % m == i })
                    .collect();
                if cands.is_empty() {
                    return Ok(None);
                }
                if best.as_ref().map_or(true, |(len, _)| cands.len() < *len) {
                    best = Some((cands.len(), cands));
                }
            }
        }
        let Some((_, candidates)) = best else {
            return Ok(Some(chosen.to_vec()));
        };
        let mut pool: Vec<usize> = pool.to_vec();
        for q in candidates {
            let next_pool: Vec<usize> = pool.iter().copied().filter(|&r| r != q && self.compatible(q, r)).collect();
            let mut next = chosen.to_vec();
            next.push(q);
            if let Some(found) = self.extend(&next, &next_pool, counter)? {
                return Ok(Some(found));
            }
            // every cover containing q has been ruled out
            pool.retain(|&r| r != q);
        }
        Ok(None)
    }

    /// Greedy lexicographic construction: repeatedly add the smallest pair
    /// after the last one that still extends to a cover using larger pairs.
    fn lexicographically_smallest(&self, counter: &mut NodeCounter) -> Result<Vec<usize>, crate::ladder::OutOfBudget> {
        let total = self.ranked.x.len() * self.m;
        let mut chosen: Vec<usize> = Vec::new();
        loop {
            let pool_after = |after: usize, chosen: &[usize]| -> Vec<usize> {
                (after..total).filter(|&r| chosen.iter().all(|&c| self.compatible(c, r))).collect()
            };
            if self.covers(&chosen) {
                return Ok(chosen);
            }
            let start = chosen.last().map_or(0, |&l| l + 1);
            let mut advanced = false;
            for p in pool_after(start, &chosen) {
                let mut next = chosen.clone();
                next.push(p);
                let pool = pool_after(p + 1, &next);
                if self.extend(&next, &pool, counter)?.is_some() {
                    chosen = next;
                    advanced = true;
                    break;
                }
            }
            assert!(advanced, "a feasible prefix always extends");
        }
    }

    fn covers(&self, chosen: &[usize]) -> bool {
        let n = self.ranked.x.len();
        let mut l = vec![false; n];
        let mut r = vec![false; self.m];
        for &p in chosen {
            l[p / self.m] = true;
            r[p % self.m] = true;
        }
        l.into_iter().chain(r).all(|c| c)
    }
}

/// Exact minimum distortion over strong correspondences, i.e. the
/// non-Archimedean Gromov-Hausdorff distance.
///
/// A strong correspondence of distortion `r` is exactly a union of blocks
/// `B × φ(B)` where `φ` is a distance-preserving bijection between the
/// closed-`r`-ball classes of `X` and of `Y`. The search therefore walks the
/// thresholds upward from the weight-spectrum lower bound and, at each one,
/// branches over block assignments (class of `X` to class of `Y`) with
/// pruning on inter-class distances. Classes are tried in order of their
/// smallest point, so the first assignment found at the minimal threshold
/// is the lexicographically smallest witness.
pub fn min_distortion_strong_correspondence(
    x: &UltrametricSpace,
    y: &UltrametricSpace,
    budget: Budget,
) -> Result<Minimum, BudgetExceeded> {
    let ranked = Ranked::new(x, y);
    let mut counter = NodeCounter::new(budget.max_nodes);
    let top = ranked.diam_x().max(ranked.diam_y());
    let floor = ranked.rank(&spectra_floor(x, y)).expect("spectrum value on the ladder");
    for r in floor..=top {
        match block_isometry(&ranked, r, &mut counter) {
            Err(_) => {
                return Err(BudgetExceeded {
                    limit: budget.max_nodes,
                    lower_bound: ranked.value(r).clone(),
                    incumbent: Minimum {
                        pairs: Correspondence::full_product(x, y).to_vec(),
                        distortion: ranked.value(top).clone(),
                        nodes: counter.used,
                    },
                })
            }
            Ok(None) => continue,
            Ok(Some(pairs)) => {
                let c = Correspondence::new(x, y, pairs.iter().copied()).expect("blocks cover both sides");
                let verdict = c.strongness();
                assert!(verdict.is_strong, "block correspondence must be strong");
                assert_eq!(&verdict.distortion, ranked.value(r), "first feasible threshold is the distortion");
                return Ok(Minimum { pairs, distortion: verdict.distortion, nodes: counter.used });
            }
        }
    }
    unreachable!("at max diameter both quotients are single points")
}

/// Largest weight present in exactly one of the two spectra (zero when the
/// spectra coincide).
pub(crate) fn spectra_floor(x: &UltrametricSpace, y: &UltrametricSpace) -> ExactValue {
    let wx = full_spectrum(x);
    let wy = full_spectrum(y);
    wx.values()
        .iter()
        .filter(|v| !wy.contains(v))
        .chain(wy.values().iter().filter(|v| !wx.contains(v)))
        .max()
        .cloned()
        .unwrap_or_else(ExactValue::zero)
}

fn closed_classes(n: usize, d: impl Fn(usize, usize) -> u32, r: u32) -> Vec<Vec<usize>> {
    let mut assigned = vec![false; n];
    let mut classes = Vec::new();
    for a in 0..n {
        if assigned[a] {
            continue;
        }
        let class: Vec<usize> = (a..n).filter(|&b| !assigned[b] && d(a, b) <= r).collect();
        for &b in &class {
            assigned[b] = true;
        }
        classes.push(class);
    }
    classes
}

fn block_isometry(
    ranked: &Ranked<'_>,
    r: u32,
    counter: &mut NodeCounter,
) -> Result<Option<Vec<Pair>>, crate::ladder::OutOfBudget> {
    let cx = closed_classes(ranked.x.len(), |a, b| ranked.dx(a, b), r);
    let cy = closed_classes(ranked.y.len(), |a, b| ranked.dy(a, b), r);
    if cx.len() != cy.len() {
        return Ok(None);
    }
    let k = cx.len();
    let qx: Vec<u32> = (0..k * k).map(|i| ranked.dx(cx[i / k][0], cx[i % k][0])).collect();
    let qy: Vec<u32> = (0..k * k).map(|i| ranked.dy(cy[i / k][0], cy[i % k][0])).collect();
    let profile = |q: &[u32], i: usize| {
        let mut p: Vec<u32> = q[i * k..(i + 1) * k].to_vec();
        p.sort_unstable();
        p
    };
    let px: Vec<Vec<u32>> = (0..k).map(|i| profile(&qx, i)).collect();
    let py: Vec<Vec<u32>> = (0..k).map(|i| profile(&qy, i)).collect();
    {
        let mut sx = px.clone();
        let mut sy = py.clone();
        sx.sort();
        sy.sort();
        if sx != sy {
            return Ok(None);
        }
    }

    fn assign(
        i: usize,
        k: usize,
        qx: &[u32],
        qy: &[u32],
        px: &[Vec<u32>],
        py: &[Vec<u32>],
        phi: &mut Vec<usize>,
        used: &mut [bool],
        counter: &mut NodeCounter,
    ) -> Result<bool, crate::ladder::OutOfBudget> {
        if i == k {
            return Ok(true);
        }
        for j in 0..k {
            if used[j] || px[i] != py[j] {
                continue;
            }
            counter.tick()?;
            if (0..i).any(|a| qx[a * k + i] != qy[phi[a] * k + j]) {
                continue;
            }
            used[j] = true;
            phi.push(j);
            if assign(i + 1, k, qx, qy, px, py, phi, used, counter)? {
                return Ok(true);
            }
            phi.pop();
            used[j] = false;
        }
        Ok(false)
    }

    let mut phi = Vec::with_capacity(k);
    let mut used = vec![false; k];
    if !assign(0, k, &qx, &qy, &px, &py, &mut phi, &mut used, counter)? {
        return Ok(None);
    }
    let mut pairs: Vec<Pair> = Vec::new();
    for (i, class) in cx.iter().enumerate() {
        for &a in class {
            for &b in &cy[phi[i]] {
                pairs.push((a, b));
            }
        }
    }
    pairs.sort_unstable();
    Ok(Some(pairs))
}
