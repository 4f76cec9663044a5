//! Integer ranks for the exact values a pair of spaces can produce.
//!
//! Every distance of `X` and `Y` and every difference `|d_X - d_Y|` lies in
//! [`candidate_thresholds`], so the searches compare `u32` ranks instead of
//! big rationals without losing exactness. A threshold `eps` is encoded as a
//! [`Level`]: `2k` when it equals the `k`-th ladder value, `2k + 1` when it
//! lies strictly between ladder values `k` and `k + 1` (or above the top).

use crate::space::UltrametricSpace;
use crate::spectrum::candidate_thresholds;
use crate::value::ExactValue;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Level(pub u32);

impl Level {
    /// `value(rank) < eps`
    #[inline]
    pub fn above(self, rank: u32) -> bool {
        2 * rank < self.0
    }
}

pub(crate) struct Ranked<'a> {
    pub x: &'a UltrametricSpace,
    pub y: &'a UltrametricSpace,
    ladder: Vec<ExactValue>,
    x_local: Vec<u16>,
    y_local: Vec<u16>,
    x_rank: Vec<u32>,
    y_rank: Vec<u32>,
    y_values: usize,
    diff: Vec<u32>,
}

fn local_values(space: &UltrametricSpace) -> (Vec<ExactValue>, Vec<u16>) {
    let mut values: Vec<ExactValue> = space.matrix().into_iter().flatten().collect();
    values.sort();
    values.dedup();
    let n = space.len();
    let mut local = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let idx = values.binary_search(space.d(i, j)).expect("value present");
            local.push(idx as u16);
        }
    }
    (values, local)
}

impl<'a> Ranked<'a> {
    pub fn new(x: &'a UltrametricSpace, y: &'a UltrametricSpace) -> Self {
        let ladder = candidate_thresholds(x, y);
        let rank_of = |v: &ExactValue| ladder.binary_search(v).expect("value on the ladder") as u32;
        let (xv, x_local) = local_values(x);
        let (yv, y_local) = local_values(y);
        let x_rank: Vec<u32> = xv.iter().map(rank_of).collect();
        let y_rank: Vec<u32> = yv.iter().map(rank_of).collect();
        let mut diff = Vec::with_capacity(xv.len() * yv.len());
        for a in &xv {
            for b in &yv {
                diff.push(rank_of(&a.abs_diff(b)));
            }
        }
        Ranked { x, y, x_local, y_local, x_rank, y_rank, y_values: yv.len(), diff, ladder }
    }

    pub fn value(&self, rank: u32) -> &ExactValue {
        &self.ladder[rank as usize]
    }

    pub fn rank(&self, v: &ExactValue) -> Option<u32> {
        self.ladder.binary_search(v).ok().map(|r| r as u32)
    }

    pub fn level(&self, eps: &ExactValue) -> Level {
        match self.ladder.binary_search(eps) {
            Ok(k) => Level(2 * k as u32),
            Err(k) => Level(2 * k as u32 - 1),
        }
    }

    /// Highest level: strictly above every ladder value.
    pub fn top_level(&self) -> Level {
        Level(2 * self.ladder.len() as u32 - 1)
    }

    /// A concrete threshold with the given level.
    pub fn level_value(&self, level: Level) -> ExactValue {
        let k = (level.0 / 2) as usize;
        if level.0 % 2 == 0 {
            self.ladder[k].clone()
        } else if k + 1 < self.ladder.len() {
            self.ladder[k].midpoint(&self.ladder[k + 1])
        } else {
            self.ladder[k].add(&ExactValue::one())
        }
    }

    #[inline]
    pub fn dx(&self, i: usize, j: usize) -> u32 {
        self.x_rank[self.x_local[i * self.x.len() + j] as usize]
    }

    #[inline]
    pub fn dy(&self, i: usize, j: usize) -> u32 {
        self.y_rank[self.y_local[i * self.y.len() + j] as usize]
    }

    /// Rank of `|d_X(x1, x2) - d_Y(y1, y2)|`.
    #[inline]
    pub fn diff(&self, x1: usize, x2: usize, y1: usize, y2: usize) -> u32 {
        let a = self.x_local[x1 * self.x.len() + x2] as usize;
        let b = self.y_local[y1 * self.y.len() + y2] as usize;
        self.diff[a * self.y_values + b]
    }

    pub fn diam_x(&self) -> u32 {
        self.x_rank.last().copied().unwrap_or(0)
    }

    pub fn diam_y(&self) -> u32 {
        self.y_rank.last().copied().unwrap_or(0)
    }

    /// Rank of `|diam X - diam Y|`.
    pub fn diam_gap(&self) -> u32 {
        self.rank(&self.x.diameter().abs_diff(&self.y.diameter())).expect("difference on the ladder")
    }
}

/// Node accounting for the exhaustive searches.
pub(crate) struct NodeCounter {
    pub used: u64,
    pub limit: u64,
}

pub(crate) struct OutOfBudget;

impl NodeCounter {
    pub fn new(limit: u64) -> Self {
        NodeCounter { used: 0, limit }
    }

    #[inline]
    pub fn tick(&mut self) -> Result<(), OutOfBudget> {
        self.used += 1;
        if self.used > self.limit {
            Err(OutOfBudget)
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{truncated_unramified_ring, zq_delta};

    #[test]
    fn ranks_match_exact_comparisons() {
        let x = truncated_unramified_ring(2, 1, 2).unwrap();
        let y = zq_delta(3, 2, 1).unwrap();
        let r = Ranked::new(&x, &y);
        for a in x.points() {
            for b in x.points() {
                assert_eq!(r.value(r.dx(a, b)), x.d(a, b));
                for c in y.points() {
                    for d in y.points() {
                        assert_eq!(r.value(r.diff(a, b, c, d)), &x.d(a, b).abs_diff(y.d(c, d)));
                    }
                }
            }
        }
    }

    #[test]
    fn levels_order_like_values() {
        let x = truncated_unramified_ring(3, 1, 1).unwrap();
        let y = zq_delta(3, 2, 1).unwrap();
        let r = Ranked::new(&x, &y);
        // ladder: 0, 1/2, 1, 3/2, 5/2
        let one = r.rank(&ExactValue::one()).unwrap();
        assert!(r.level(&ExactValue::ratio(3, 2)).above(one));
        assert!(!r.level(&ExactValue::one()).above(one));
        assert!(r.level(&ExactValue::ratio(5, 4)).above(one));
        assert!(!r.level(&ExactValue::ratio(3, 4)).above(one));
        assert_eq!(r.level(&ExactValue::ratio(3, 4)), Level(3));
        assert_eq!(r.level_value(Level(3)), ExactValue::ratio(3, 4));
        assert_eq!(r.level(&ExactValue::from_integer(7)), r.top_level());
        assert_eq!(r.level_value(r.top_level()), ExactValue::ratio(7, 2));
    }
}
