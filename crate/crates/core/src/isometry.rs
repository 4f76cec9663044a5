//! Maps between spaces: distortion, strong epsilon-isometries and strong
//! epsilon-approximations, with exhaustive existence searches.

use serde::Serialize;
use thiserror::Error;

use crate::correspondence::{Budget, Correspondence};
use crate::ladder::{Level, NodeCounter, OutOfBudget, Ranked};
use crate::space::UltrametricSpace;
use crate::value::ExactValue;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IsometryError {
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("map has {got} images for {expected} points")]
    MapLength { got: usize, expected: usize },
    #[error("image {image} of point {point} is out of range")]
    ImageOutOfRange { point: usize, image: usize },
    #[error("witness lists have lengths {left} and {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("witness lists are empty")]
    EmptyWitness,
    #[error("witness index {0} is out of range")]
    IndexOutOfRange(usize),
    #[error("search budget of {limit} nodes exhausted")]
    BudgetExceeded { limit: u64 },
    #[error("some point of Y is farther than eps from every image")]
    NotCovering,
}

/// The first condition a map fails, with the points that witness it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum IsometryFailure {
    /// `|d_X(x1, x2) - d_Y(f x1, f x2)| >= eps`
    Distortion { x1: usize, x2: usize },
    /// `y` is at distance `>= eps` from every image.
    Net { y: usize },
    /// `d_Y(y, f x) >= eps` but no `x'` has `d_Y(y, f x') < eps` and
    /// `d_X(x, x') = d_Y(y, f x)`.
    Si1 { x: usize, y: usize },
    /// `d_X(x1, x2) >= eps` differs from `d_Y(f x1, f x2)`.
    Si2 { x1: usize, x2: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MapWitness {
    pub images: Vec<usize>,
    pub distortion: ExactValue,
    pub epsilon: ExactValue,
    /// `dis f < eps` and `f(X)` is an eps-net.
    pub is_eps_isometry: bool,
    pub is_strong_eps_isometry: bool,
    pub failure: Option<IsometryFailure>,
}

impl MapWitness {
    /// Whether the recorded failure is a genuine violation.
    pub fn failure_replays(&self, x: &UltrametricSpace, y: &UltrametricSpace) -> bool {
        let f = &self.images;
        let eps = &self.epsilon;
        match &self.failure {
            None => self.is_strong_eps_isometry,
            Some(IsometryFailure::Distortion { x1, x2 }) => x.d(*x1, *x2).abs_diff(y.d(f[*x1], f[*x2])) >= *eps,
            Some(IsometryFailure::Net { y: b }) => !x.points().any(|a| y.d(*b, f[a]) < eps),
            Some(IsometryFailure::Si1 { x: a, y: b }) => {
                let target = y.d(*b, f[*a]);
                target >= eps && !x.points().any(|a2| y.d(*b, f[a2]) < eps && x.d(*a, a2) == target)
            }
            Some(IsometryFailure::Si2 { x1, x2 }) => {
                let dx = x.d(*x1, *x2);
                dx >= eps && dx != y.d(f[*x1], f[*x2])
            }
        }
    }
}

fn check_map(x: &UltrametricSpace, y: &UltrametricSpace, f: &[usize]) -> Result<(), IsometryError> {
    if f.len() != x.len() {
        return Err(IsometryError::MapLength { got: f.len(), expected: x.len() });
    }
    if let Some((point, &image)) = f.iter().enumerate().find(|(_, &b)| b >= y.len()) {
        return Err(IsometryError::ImageOutOfRange { point, image });
    }
    Ok(())
}

/// `max |d_Y(f x1, f x2) - d_X(x1, x2)|`.
pub fn map_distortion(x: &UltrametricSpace, y: &UltrametricSpace, f: &[usize]) -> Result<ExactValue, IsometryError> {
    check_map(x, y, f)?;
    let mut best = ExactValue::zero();
    for a in x.points() {
        for b in a + 1..x.len() {
            let gap = x.d(a, b).abs_diff(y.d(f[a], f[b]));
            if gap > best {
                best = gap;
            }
        }
    }
    Ok(best)
}

fn first_failure(r: &Ranked<'_>, level: Level, f: &[usize]) -> Option<IsometryFailure> {
    let (n, m) = (r.x.len(), r.y.len());
    for a in 0..n {
        for b in a + 1..n {
            if !level.above(r.diff(a, b, f[a], f[b])) {
                return Some(IsometryFailure::Distortion { x1: a, x2: b });
            }
        }
    }
    if let Some(y) = (0..m).find(|&b| !(0..n).any(|a| level.above(r.dy(b, f[a])))) {
        return Some(IsometryFailure::Net { y });
    }
    if let Some(first) = first_si1_failure(r, level, f) {
        return Some(first);
    }
    for a in 0..n {
        for b in a + 1..n {
            if !level.above(r.dx(a, b)) && r.dx(a, b) != r.dy(f[a], f[b]) {
                return Some(IsometryFailure::Si2 { x1: a, x2: b });
            }
        }
    }
    None
}

fn first_si1_failure(r: &Ranked<'_>, level: Level, f: &[usize]) -> Option<IsometryFailure> {
    let (n, m) = (r.x.len(), r.y.len());
    for a in 0..n {
        for b in 0..m {
            let target = r.dy(b, f[a]);
            if level.above(target) {
                continue;
            }
            if !(0..n).any(|a2| level.above(r.dy(b, f[a2])) && r.dx(a, a2) == target) {
                return Some(IsometryFailure::Si1 { x: a, y: b });
            }
        }
    }
    None
}

fn witness_for(r: &Ranked<'_>, eps: &ExactValue, f: Vec<usize>) -> MapWitness {
    let level = r.level(eps);
    let failure = first_failure(r, level, &f);
    let is_eps_isometry =
        !matches!(failure, Some(IsometryFailure::Distortion { .. }) | Some(IsometryFailure::Net { .. }));
    let distortion = map_distortion(r.x, r.y, &f).expect("checked map");
    MapWitness {
        is_strong_eps_isometry: failure.is_none(),
        is_eps_isometry,
        failure,
        distortion,
        epsilon: eps.clone(),
        images: f,
    }
}

/// Full verdict for `f` at scale `eps`, with the first failed condition
/// (checked in the order distortion, net, SI1, SI2).
pub fn is_strong_epsilon_isometry(
    x: &UltrametricSpace,
    y: &UltrametricSpace,
    f: &[usize],
    eps: &ExactValue,
) -> Result<MapWitness, IsometryError> {
    if !eps.is_positive() {
        return Err(IsometryError::NonPositiveEpsilon);
    }
    check_map(x, y, f)?;
    Ok(witness_for(&Ranked::new(x, y), eps, f.to_vec()))
}

/// Lexicographically smallest strong eps-isometry `X -> Y`, if any.
pub fn exists_strong_epsilon_isometry(
    x: &UltrametricSpace,
    y: &UltrametricSpace,
    eps: &ExactValue,
    budget: Budget,
) -> Result<Option<MapWitness>, IsometryError> {
    if !eps.is_positive() {
        return Err(IsometryError::NonPositiveEpsilon);
    }
    let r = Ranked::new(x, y);
    let mut counter = NodeCounter::new(budget.max_nodes);
    match search_isometry(&r, r.level(eps), &mut counter) {
        Err(OutOfBudget) => Err(IsometryError::BudgetExceeded { limit: budget.max_nodes }),
        Ok(found) => Ok(found.map(|f| witness_for(&r, eps, f))),
    }
}

/// Depth-first search over maps in mixed-radix order (left index major,
/// right index ascending). Branches are cut as soon as an assigned pair
/// breaks the distortion bound or SI2; the net and SI1 are checked at
/// the leaves.
pub(crate) fn search_isometry(
    r: &Ranked<'_>,
    level: Level,
    counter: &mut NodeCounter,
) -> Result<Option<Vec<usize>>, OutOfBudget> {
    fn go(
        r: &Ranked<'_>,
        level: Level,
        f: &mut Vec<usize>,
        counter: &mut NodeCounter,
    ) -> Result<bool, OutOfBudget> {
        let i = f.len();
        if i == r.x.len() {
            let (n, m) = (r.x.len(), r.y.len());
            let net = (0..m).all(|b| (0..n).any(|a| level.above(r.dy(b, f[a]))));
            return Ok(net && first_si1_failure(r, level, f).is_none());
        }
        for b in 0..r.y.len() {
            counter.tick()?;
            let ok = (0..i).all(|a| {
                let dx = r.dx(a, i);
                level.above(r.diff(a, i, f[a], b)) && (level.above(dx) || dx == r.dy(f[a], b))
            });
            if !ok {
                continue;
            }
            f.push(b);
            if go(r, level, f, counter)? {
                return Ok(true);
            }
            f.pop();
        }
        Ok(false)
    }
    let mut f = Vec::with_capacity(r.x.len());
    Ok(go(r, level, &mut f, counter)?.then_some(f))
}

/// The relation `{(x, y) : d_Y(y, f(x)) <= eps}` built from a map.
pub fn correspondence_from_map<'a>(
    x: &'a UltrametricSpace,
    y: &'a UltrametricSpace,
    f: &[usize],
    eps: &ExactValue,
) -> Result<Correspondence<'a>, IsometryError> {
    check_map(x, y, f)?;
    let pairs = x.points().flat_map(|a| y.points().filter(move |&b| y.d(b, f[a]) <= eps).map(move |b| (a, b)));
    Correspondence::new(x, y, pairs.collect::<Vec<_>>()).map_err(|_| IsometryError::NotCovering)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ApproximationWitness {
    pub xs: Vec<usize>,
    pub ys: Vec<usize>,
    pub epsilon: ExactValue,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum ApproximationFailure {
    /// `xs` is not an eps-net; `point` is far from it.
    LeftNet { point: usize },
    RightNet { point: usize },
    /// `d_X(x_i, x_j) != d_Y(y_i, y_j)`
    Distances { i: usize, j: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ApproximationVerdict {
    pub valid: bool,
    pub failure: Option<ApproximationFailure>,
}

/// Checks both nets and the distance equalities exactly.
pub fn is_strong_epsilon_approximation(
    x: &UltrametricSpace,
    y: &UltrametricSpace,
    eps: &ExactValue,
    witness: &ApproximationWitness,
) -> Result<ApproximationVerdict, IsometryError> {
    if !eps.is_positive() {
        return Err(IsometryError::NonPositiveEpsilon);
    }
    let (xs, ys) = (&witness.xs, &witness.ys);
    if xs.len() != ys.len() {
        return Err(IsometryError::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if xs.is_empty() {
        return Err(IsometryError::EmptyWitness);
    }
    if let Some(&bad) = xs.iter().find(|&&a| a >= x.len()) {
        return Err(IsometryError::IndexOutOfRange(bad));
    }
    if let Some(&bad) = ys.iter().find(|&&b| b >= y.len()) {
        return Err(IsometryError::IndexOutOfRange(bad));
    }
    let fail = |f| Ok(ApproximationVerdict { valid: false, failure: Some(f) });
    if let Some(point) = x.points().find(|&a| &x.dist_to_set(a, xs) >= eps) {
        return fail(ApproximationFailure::LeftNet { point });
    }
    if let Some(point) = y.points().find(|&b| &y.dist_to_set(b, ys) >= eps) {
        return fail(ApproximationFailure::RightNet { point });
    }
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            if x.d(xs[i], xs[j]) != y.d(ys[i], ys[j]) {
                return fail(ApproximationFailure::Distances { i, j });
            }
        }
    }
    Ok(ApproximationVerdict { valid: true, failure: None })
}

/// A strong eps-approximation witness, if one exists.
///
/// `xs` is the list of open eps-ball representatives of `X` (smallest
/// point of each ball, balls ordered by that point); `ys` is the
/// lexicographically smallest matching list.
pub fn exists_strong_epsilon_approximation(
    x: &UltrametricSpace,
    y: &UltrametricSpace,
    eps: &ExactValue,
    budget: Budget,
) -> Result<Option<ApproximationWitness>, IsometryError> {
    if !eps.is_positive() {
        return Err(IsometryError::NonPositiveEpsilon);
    }
    let r = Ranked::new(x, y);
    let mut counter = NodeCounter::new(budget.max_nodes);
    match search_approximation(&r, r.level(eps), &mut counter) {
        Err(OutOfBudget) => Err(IsometryError::BudgetExceeded { limit: budget.max_nodes }),
        Ok(found) => Ok(found.map(|(xs, ys)| ApproximationWitness { xs, ys, epsilon: eps.clone() })),
    }
}

fn open_ball_ids(n: usize, d: impl Fn(usize, usize) -> u32, level: Level) -> (Vec<usize>, Vec<usize>) {
    let mut ball = vec![usize::MAX; n];
    let mut reps = Vec::new();
    for a in 0..n {
        if ball[a] != usize::MAX {
            continue;
        }
        for b in a..n {
            if level.above(d(a, b)) {
                ball[b] = reps.len();
            }
        }
        reps.push(a);
    }
    (reps, ball)
}

pub(crate) fn search_approximation(
    r: &Ranked<'_>,
    level: Level,
    counter: &mut NodeCounter,
) -> Result<Option<(Vec<usize>, Vec<usize>)>, OutOfBudget> {
    let (xs, _) = open_ball_ids(r.x.len(), |a, b| r.dx(a, b), level);
    let (y_reps, y_ball) = open_ball_ids(r.y.len(), |a, b| r.dy(a, b), level);
    if xs.len() != y_reps.len() {
        return Ok(None);
    }

    fn go(
        r: &Ranked<'_>,
        xs: &[usize],
        y_ball: &[usize],
        ys: &mut Vec<usize>,
        used: &mut [bool],
        counter: &mut NodeCounter,
    ) -> Result<bool, OutOfBudget> {
        let i = ys.len();
        if i == xs.len() {
            return Ok(true);
        }
        for b in 0..r.y.len() {
            if used[y_ball[b]] {
                continue;
            }
            counter.tick()?;
            if (0..i).any(|j| r.dx(xs[j], xs[i]) != r.dy(ys[j], b)) {
                continue;
            }
            used[y_ball[b]] = true;
            ys.push(b);
            if go(r, xs, y_ball, ys, used, counter)? {
                return Ok(true);
            }
            ys.pop();
            used[y_ball[b]] = false;
        }
        Ok(false)
    }

    let mut ys = Vec::with_capacity(xs.len());
    let mut used = vec![false; y_reps.len()];
    Ok(go(r, &xs, &y_ball, &mut ys, &mut used, counter)?.then_some((xs, ys)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{truncated_unramified_ring, zq_delta};

    fn v(n: u64, d: u64) -> ExactValue {
        ExactValue::ratio(n, d)
    }

    fn ring(p: u64, depth: u32) -> UltrametricSpace {
        truncated_unramified_ring(p, 1, depth).unwrap()
    }

    #[test]
    fn distortion_of_maps() {
        let (x2, z4) = (ring(2, 1), ring(2, 2));
        assert_eq!(map_distortion(&x2, &x2, &[0, 1]).unwrap(), ExactValue::zero());
        assert_eq!(map_distortion(&x2, &x2, &[0, 0]).unwrap(), v(1, 1));
        assert_eq!(map_distortion(&z4, &x2, &[0, 1, 0, 1]).unwrap(), v(1, 2));
        assert_eq!(
            map_distortion(&x2, &x2, &[0]).unwrap_err(),
            IsometryError::MapLength { got: 1, expected: 2 }
        );
    }

    #[test]
    fn predicate_examples() {
        let (x2, x3) = (ring(2, 1), ring(3, 1));
        let id = is_strong_epsilon_isometry(&x3, &x3, &[0, 1, 2], &v(1, 100)).unwrap();
        assert!(id.is_strong_eps_isometry && id.is_eps_isometry);

        let w = is_strong_epsilon_isometry(&x2, &x3, &[0, 1], &v(1, 1)).unwrap();
        assert!(!w.is_eps_isometry);
        assert_eq!(w.failure, Some(IsometryFailure::Net { y: 2 }));
        assert!(w.failure_replays(&x2, &x3));

        let w = is_strong_epsilon_isometry(&x2, &x3, &[1, 2], &v(3, 2)).unwrap();
        assert!(w.is_strong_eps_isometry);
        assert_eq!(w.distortion, ExactValue::zero());

        assert_eq!(
            is_strong_epsilon_isometry(&x2, &x3, &[0, 1], &ExactValue::zero()).unwrap_err(),
            IsometryError::NonPositiveEpsilon
        );
    }

    #[test]
    fn existence_examples() {
        let (x2, x3, yd) = (ring(2, 1), ring(3, 1), zq_delta(3, 2, 1).unwrap());
        let w = exists_strong_epsilon_isometry(&x3, &x3, &v(1, 3), Budget::DEFAULT).unwrap().unwrap();
        assert_eq!(w.images, vec![0, 1, 2]);
        assert!(exists_strong_epsilon_isometry(&x2, &x3, &v(1, 1), Budget::DEFAULT).unwrap().is_none());
        assert!(exists_strong_epsilon_isometry(&x3, &yd, &v(3, 2), Budget::DEFAULT).unwrap().is_none());
        let w = exists_strong_epsilon_isometry(&x3, &yd, &v(2, 1), Budget::DEFAULT).unwrap().unwrap();
        assert!(w.is_strong_eps_isometry);
        assert!(matches!(
            exists_strong_epsilon_isometry(&x3, &yd, &v(2, 1), Budget::nodes(0)),
            Err(IsometryError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn converter_gives_strong_correspondence() {
        let (z4, x2) = (ring(2, 2), ring(2, 1));
        let eps = v(3, 4);
        let w = exists_strong_epsilon_isometry(&z4, &x2, &eps, Budget::DEFAULT).unwrap().unwrap();
        let c = correspondence_from_map(&z4, &x2, &w.images, &eps).unwrap();
        let verdict = c.strongness();
        assert!(verdict.is_strong);
        assert!(verdict.distortion <= eps);
    }

    #[test]
    fn approximation_predicate_examples() {
        let (x3, yd) = (ring(3, 1), zq_delta(3, 2, 1).unwrap());
        let all = ApproximationWitness { xs: vec![0, 1, 2], ys: vec![0, 1, 2], epsilon: v(1, 2) };
        assert!(is_strong_epsilon_approximation(&x3, &x3, &v(1, 2), &all).unwrap().valid);
        let single = ApproximationWitness { xs: vec![0], ys: vec![0], epsilon: v(2, 1) };
        assert!(is_strong_epsilon_approximation(&x3, &yd, &v(2, 1), &single).unwrap().valid);
        let bad = ApproximationWitness { xs: vec![0, 1], ys: vec![0], epsilon: v(1, 1) };
        assert_eq!(
            is_strong_epsilon_approximation(&x3, &yd, &v(1, 1), &bad).unwrap_err(),
            IsometryError::LengthMismatch { left: 2, right: 1 }
        );
        let w = ApproximationWitness { xs: vec![0, 1, 2], ys: vec![0, 1, 2], epsilon: v(1, 1) };
        let verdict = is_strong_epsilon_approximation(&x3, &yd, &v(1, 1), &w).unwrap();
        assert_eq!(verdict.failure, Some(ApproximationFailure::Distances { i: 0, j: 2 }));
    }

    #[test]
    fn approximation_search_examples() {
        let (x3, yd, z4, x2) = (ring(3, 1), zq_delta(3, 2, 1).unwrap(), ring(2, 2), ring(2, 1));
        let w = exists_strong_epsilon_approximation(&x3, &yd, &v(2, 1), Budget::DEFAULT).unwrap().unwrap();
        assert_eq!((w.xs.len(), w.ys.len()), (1, 1));
        assert!(exists_strong_epsilon_approximation(&x3, &yd, &v(1, 1), Budget::DEFAULT).unwrap().is_none());
        let w = exists_strong_epsilon_approximation(&z4, &x2, &v(1, 1), Budget::DEFAULT).unwrap().unwrap();
        assert_eq!((w.xs, w.ys), (vec![0, 1], vec![0, 1]));
        let w = exists_strong_epsilon_approximation(&z4, &z4, &v(1, 4), Budget::DEFAULT).unwrap().unwrap();
        assert_eq!(w.ys, vec![0, 1, 2, 3]);
    }
}
