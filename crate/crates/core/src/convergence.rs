//! Tools for finite prefixes of sequences of spaces: convergence
//! certificates, the split finder, uniform total boundedness and
//! diameter trends. Conclusions always concern the supplied prefix only.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{dhat_gh, EngineConfig, EngineError};
use crate::isometry::{is_strong_epsilon_isometry, IsometryError, MapWitness};
use crate::space::UltrametricSpace;
use crate::spectrum::weight_spectrum;
use crate::value::ExactValue;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConvergenceError {
    #[error("epsilon {eps} is not below the target separation {separation}")]
    EpsilonTooLarge { eps: ExactValue, separation: ExactValue },
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("{what}: expected {expected} entries, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },
    /// `space` is `None` for the target.
    #[error("net index {index} out of range in space {space:?}")]
    IndexOutOfRange { space: Option<usize>, index: usize },
    #[error("map {index}: {source}")]
    Map { index: usize, source: IsometryError },
    #[error("distance computation at index {index}: {source}")]
    Engine { index: usize, source: EngineError },
}

/// A partition of a space into one class per target point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SplitResult {
    /// `classes[i]` is sent to target point `i`.
    pub classes: Vec<Vec<usize>>,
    pub class_diameters: Vec<ExactValue>,
    pub pairwise_class_distances: Vec<Vec<ExactValue>>,
}

fn class_distance(space: &UltrametricSpace, a: &[usize], b: &[usize]) -> ExactValue {
    a.iter()
        .flat_map(|&i| b.iter().map(move |&j| space.d(i, j)))
        .min()
        .cloned()
        .expect("nonempty classes")
}

impl SplitResult {
    fn from_classes(space: &UltrametricSpace, classes: Vec<Vec<usize>>) -> Self {
        let class_diameters = classes.iter().map(|c| space.set_diameter(c)).collect();
        let pairwise_class_distances = classes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                classes
                    .iter()
                    .enumerate()
                    .map(|(j, b)| if i == j { ExactValue::zero() } else { class_distance(space, a, b) })
                    .collect()
            })
            .collect();
        SplitResult { classes, class_diameters, pairwise_class_distances }
    }

    /// Recomputes everything from the matrices: the classes partition
    /// `space`, every class diameter is below `eps`, and class distances
    /// equal target distances.
    pub fn replays(&self, space: &UltrametricSpace, target: &UltrametricSpace, eps: &ExactValue) -> bool {
        if self.classes.len() != target.len() || self.classes.iter().any(Vec::is_empty) {
            return false;
        }
        let mut seen: Vec<usize> = self.classes.iter().flatten().copied().collect();
        seen.sort_unstable();
        if seen != space.points().collect::<Vec<_>>() {
            return false;
        }
        let fresh = SplitResult::from_classes(space, self.classes.clone());
        fresh == *self
            && fresh.class_diameters.iter().all(|d| d < eps)
            && target.points().all(|i| {
                target.points().all(|j| i == j || &fresh.pairwise_class_distances[i][j] == target.d(i, j))
            })
    }
}

/// Splits `big` into `|target|` nonempty classes of diameter `< eps` whose
/// mutual distances reproduce the target's distances.
///
/// Open `eps`-balls of `big` are assigned to target points by backtracking,
/// balls in order of their smallest point and targets ascending, so the
/// result is the smallest assignment. Requires `eps` below the smallest
/// nonzero distance of the target.
pub fn find_split(
    big: &UltrametricSpace,
    target: &UltrametricSpace,
    eps: &ExactValue,
) -> Result<Option<SplitResult>, ConvergenceError> {
    if !eps.is_positive() {
        return Err(ConvergenceError::NonPositiveEpsilon);
    }
    if let Some(separation) = target.separation() {
        if *eps >= separation {
            return Err(ConvergenceError::EpsilonTooLarge { eps: eps.clone(), separation });
        }
    }
    let balls = big.ball_partition(eps);
    let n = target.len();
    if balls.len() < n {
        return Ok(None);
    }

    struct Search<'s> {
        big: &'s UltrametricSpace,
        target: &'s UltrametricSpace,
        eps: &'s ExactValue,
        balls: Vec<Vec<usize>>,
        classes: Vec<Vec<usize>>,
    }

    impl Search<'_> {
        fn go(&mut self, b: usize) -> bool {
            let n = self.target.len();
            if b == self.balls.len() {
                return self.classes.iter().all(|c| !c.is_empty());
            }
            let empty = self.classes.iter().filter(|c| c.is_empty()).count();
            if empty > self.balls.len() - b {
                return false;
            }
            for t in 0..n {
                let ball = self.balls[b].clone();
                let mut merged = self.classes[t].clone();
                merged.extend(&ball);
                if &self.big.set_diameter(&merged) >= self.eps {
                    continue;
                }
                // class distances only shrink as classes grow
                let ok = (0..n).filter(|&u| u != t && !self.classes[u].is_empty()).all(|u| {
                    class_distance(self.big, &merged, &self.classes[u]) >= *self.target.d(t, u)
                });
                if !ok {
                    continue;
                }
                let saved = std::mem::replace(&mut self.classes[t], merged);
                if self.go(b + 1) {
                    return true;
                }
                self.classes[t] = saved;
            }
            false
        }
    }

    let mut search = Search { big, target, eps, balls, classes: vec![Vec::new(); n] };
    if !search.go(0) {
        return Ok(None);
    }
    let mut classes = search.classes;
    for c in &mut classes {
        c.sort_unstable();
    }
    let result = SplitResult::from_classes(big, classes);
    if !result.replays(big, target, eps) {
        return Ok(None);
    }
    Ok(Some(result))
}

/// Which way the certificate maps go.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapDirection {
    /// `f_n : X_n -> X`
    SequenceToTarget,
    /// `f_n : X -> X_n`
    TargetToSequence,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CertificateVerdict {
    pub per_index: Vec<MapWitness>,
    pub all_maps_hold: bool,
    pub epsilons_decreasing: bool,
    pub min_epsilon: Option<ExactValue>,
    pub holds: bool,
    pub note: &'static str,
}

const PREFIX_NOTE: &str = "finite prefix only: the limit of the epsilons is not certified";

/// Checks that every `maps[n]` is a strong `epsilons[n]`-isometry and that
/// the epsilons weakly decrease.
pub fn check_convergence_certificate(
    sequence: &[UltrametricSpace],
    target: &UltrametricSpace,
    maps: &[Vec<usize>],
    epsilons: &[ExactValue],
    direction: MapDirection,
) -> Result<CertificateVerdict, ConvergenceError> {
    for (what, got) in [("maps", maps.len()), ("epsilons", epsilons.len())] {
        if got != sequence.len() {
            return Err(ConvergenceError::LengthMismatch { what, expected: sequence.len(), got });
        }
    }
    let mut per_index = Vec::with_capacity(sequence.len());
    for (index, ((space, f), eps)) in sequence.iter().zip(maps).zip(epsilons).enumerate() {
        let (from, to) = match direction {
            MapDirection::SequenceToTarget => (space, target),
            MapDirection::TargetToSequence => (target, space),
        };
        let w = is_strong_epsilon_isometry(from, to, f, eps).map_err(|source| ConvergenceError::Map { index, source })?;
        per_index.push(w);
    }
    let all_maps_hold = per_index.iter().all(|w| w.is_strong_eps_isometry);
    let epsilons_decreasing = epsilons.windows(2).all(|w| w[1] <= w[0]);
    Ok(CertificateVerdict {
        per_index,
        all_maps_hold,
        epsilons_decreasing,
        min_epsilon: epsilons.iter().min().cloned(),
        holds: all_maps_hold && epsilons_decreasing,
        note: PREFIX_NOTE,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetFailure {
    /// `point` of space `space` is not within `eps` of its net
    /// (`space = None` for the target).
    NotNet { space: Option<usize>, point: usize },
    Cardinality { space: usize, expected: usize, got: usize },
    /// `d(S_n[i], S_n[j]) != d(S[i], S[j])`
    Distances { space: usize, i: usize, j: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NetVerdict {
    pub holds: bool,
    pub failure: Option<NetFailure>,
}

/// Checks nets `nets[n]` in `sequence[n]` against `target_net` in `target`:
/// all are `eps`-nets of the same size with position-wise equal distances.
pub fn check_net_convergence_certificate(
    sequence: &[UltrametricSpace],
    target: &UltrametricSpace,
    nets: &[Vec<usize>],
    target_net: &[usize],
    eps: &ExactValue,
) -> Result<NetVerdict, ConvergenceError> {
    if !eps.is_positive() {
        return Err(ConvergenceError::NonPositiveEpsilon);
    }
    if nets.len() != sequence.len() {
        return Err(ConvergenceError::LengthMismatch { what: "nets", expected: sequence.len(), got: nets.len() });
    }
    if let Some(&index) = target_net.iter().find(|&&i| i >= target.len()) {
        return Err(ConvergenceError::IndexOutOfRange { space: None, index });
    }
    for (space, (s, net)) in sequence.iter().zip(nets).enumerate() {
        if let Some(&index) = net.iter().find(|&&i| i >= s.len()) {
            return Err(ConvergenceError::IndexOutOfRange { space: Some(space), index });
        }
    }
    let fail = |f| Ok(NetVerdict { holds: false, failure: Some(f) });
    if let Some(point) = target.points().find(|&a| &target.dist_to_set(a, target_net) >= eps) {
        return fail(NetFailure::NotNet { space: None, point });
    }
    for (space, (s, net)) in sequence.iter().zip(nets).enumerate() {
        if let Some(point) = s.points().find(|&a| net.is_empty() || &s.dist_to_set(a, net) >= eps) {
            return fail(NetFailure::NotNet { space: Some(space), point });
        }
        if net.len() != target_net.len() {
            return fail(NetFailure::Cardinality { space, expected: target_net.len(), got: net.len() });
        }
        for i in 0..net.len() {
            for j in i + 1..net.len() {
                if s.d(net[i], net[j]) != target.d(target_net[i], target_net[j]) {
                    return fail(NetFailure::Distances { space, i, j });
                }
            }
        }
    }
    Ok(NetVerdict { holds: true, failure: None })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SutbVerdict {
    pub holds: bool,
    /// per space: a witness net, or `None` when no admissible net exists
    pub nets: Vec<Option<Vec<usize>>>,
}

/// Whether every space has an `eps`-net of at most `max_size` points whose
/// weights all lie in `allowed`.
///
/// One representative per open `eps`-ball is optimal for both conditions:
/// every `eps`-net meets each ball, so it is at least as large, and its
/// weights include the distances between the balls, which are exactly the
/// representatives' weights. No other net needs to be tried.
pub fn sutb_check(
    family: &[UltrametricSpace],
    eps: &ExactValue,
    max_size: usize,
    allowed: &BTreeSet<ExactValue>,
) -> Result<SutbVerdict, ConvergenceError> {
    if !eps.is_positive() {
        return Err(ConvergenceError::NonPositiveEpsilon);
    }
    let nets: Vec<Option<Vec<usize>>> = family
        .iter()
        .map(|space| {
            let reps = space.ball_representatives(eps);
            let weights = weight_spectrum(space, &reps).expect("representatives are valid");
            (reps.len() <= max_size && weights.values().iter().all(|w| allowed.contains(w))).then_some(reps)
        })
        .collect();
    Ok(SutbVerdict { holds: nets.iter().all(Option::is_some), nets })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "from", rename_all = "snake_case")]
pub enum TrendClass {
    Empty,
    /// Diameters are constant and positive from this index to the end
    /// (at least two terms).
    ConstantFrom(usize),
    /// Diameters strictly decrease along the whole prefix.
    ShrinkingTowardZero,
    Unclassified,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrendReport {
    pub diameters: Vec<ExactValue>,
    pub target_diameter: Option<ExactValue>,
    /// distance of each term to the target, when a target is given
    pub dhat_to_target: Vec<Option<ExactValue>>,
    /// first index from which every distance to the target is below the
    /// larger diameter (which forces equal diameters)
    pub equal_diameter_from: Option<usize>,
    /// indices where a forced diameter equality fails
    pub violations: Vec<usize>,
    pub classification: TrendClass,
    pub note: &'static str,
}

fn classify(diameters: &[ExactValue]) -> TrendClass {
    if diameters.is_empty() {
        return TrendClass::Empty;
    }
    let last = diameters.last().expect("nonempty");
    let start = diameters.iter().rposition(|d| d != last).map_or(0, |i| i + 1);
    if last.is_positive() && diameters.len() - start >= 2 {
        return TrendClass::ConstantFrom(start);
    }
    if diameters.len() >= 2 && diameters.windows(2).all(|w| w[1] < w[0]) {
        return TrendClass::ShrinkingTowardZero;
    }
    TrendClass::Unclassified
}

/// Tabulates diameters and classifies the prefix as eventually constant or
/// shrinking. With a target, also computes each distance to it and checks
/// that diameters agree wherever that distance is below the larger diameter.
pub fn diameter_trend(
    sequence: &[UltrametricSpace],
    target: Option<&UltrametricSpace>,
    config: &EngineConfig,
) -> Result<TrendReport, ConvergenceError> {
    let diameters: Vec<ExactValue> = sequence.iter().map(UltrametricSpace::diameter).collect();
    let mut dhat_to_target = vec![None; sequence.len()];
    let mut violations = Vec::new();
    let mut forced = vec![false; sequence.len()];
    if let Some(t) = target {
        for (index, space) in sequence.iter().enumerate() {
            let report = dhat_gh(space, t, config).map_err(|source| ConvergenceError::Engine { index, source })?;
            let bound = diameters[index].clone().max(t.diameter());
            forced[index] = report.dhat < bound;
            if forced[index] && diameters[index] != t.diameter() {
                violations.push(index);
            }
            dhat_to_target[index] = Some(report.dhat);
        }
    }
    let equal_diameter_from = match forced.iter().rposition(|f| !f) {
        None if !forced.is_empty() => Some(0),
        Some(i) if i + 1 < forced.len() => Some(i + 1),
        _ => None,
    };
    Ok(TrendReport {
        classification: classify(&diameters),
        diameters,
        target_diameter: target.map(UltrametricSpace::diameter),
        dhat_to_target,
        equal_diameter_from,
        violations,
        note: "finite prefix only: no limit is certified",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{truncated_scaled_ball, truncated_unramified_ring};

    fn v(n: u64, d: u64) -> ExactValue {
        ExactValue::ratio(n, d)
    }

    fn ring(p: u64, depth: u32) -> UltrametricSpace {
        truncated_unramified_ring(p, 1, depth).unwrap()
    }

    #[test]
    fn split_examples() {
        let (z4, x2, x3) = (ring(2, 2), ring(2, 1), ring(3, 1));
        let s = find_split(&z4, &x2, &v(3, 4)).unwrap().unwrap();
        assert_eq!(s.classes, vec![vec![0, 2], vec![1, 3]]);
        assert_eq!(s.class_diameters, vec![v(1, 2), v(1, 2)]);
        assert_eq!(s.pairwise_class_distances[0][1], v(1, 1));
        assert!(s.replays(&z4, &x2, &v(3, 4)));

        let s = find_split(&x3, &x3, &v(1, 2)).unwrap().unwrap();
        assert_eq!(s.classes, vec![vec![0], vec![1], vec![2]]);

        assert_eq!(find_split(&z4, &x3, &v(3, 4)).unwrap(), None);
        assert_eq!(
            find_split(&z4, &x2, &v(1, 1)).unwrap_err(),
            ConvergenceError::EpsilonTooLarge { eps: v(1, 1), separation: v(1, 1) }
        );

        let s = find_split(&ring(3, 2), &x3, &v(1, 2)).unwrap().unwrap();
        assert_eq!(s.classes, vec![vec![0, 3, 6], vec![1, 4, 7], vec![2, 5, 8]]);
    }

    #[test]
    fn tampered_split_does_not_replay() {
        let (z4, x2) = (ring(2, 2), ring(2, 1));
        let mut s = find_split(&z4, &x2, &v(3, 4)).unwrap().unwrap();
        s.classes = vec![vec![0, 1], vec![2, 3]];
        assert!(!s.replays(&z4, &x2, &v(3, 4)));
    }

    #[test]
    fn map_certificates() {
        let x3 = ring(3, 1);
        let ok = check_convergence_certificate(
            &[x3.clone(), x3.clone()],
            &x3,
            &[vec![0, 1, 2], vec![0, 1, 2]],
            &[v(1, 2), v(1, 4)],
            MapDirection::SequenceToTarget,
        )
        .unwrap();
        assert!(ok.holds);

        let seq = [ring(2, 3), ring(2, 2)];
        let target = ring(2, 1);
        let maps: Vec<Vec<usize>> = seq.iter().map(|s| s.points().map(|i| i % 2).collect()).collect();
        let slightly = [v(51, 100), v(51, 100)];
        let c = check_convergence_certificate(&seq, &target, &maps, &slightly, MapDirection::SequenceToTarget).unwrap();
        assert!(c.holds);
        let exact = [v(1, 2), v(1, 2)];
        let c = check_convergence_certificate(&seq, &target, &maps, &exact, MapDirection::SequenceToTarget).unwrap();
        assert!(!c.holds);
        assert!(matches!(
            check_convergence_certificate(&seq, &target, &maps, &exact[..1], MapDirection::SequenceToTarget),
            Err(ConvergenceError::LengthMismatch { what: "epsilons", .. })
        ));
    }

    #[test]
    fn net_certificates() {
        let (z4, x2) = (ring(2, 2), ring(2, 1));
        let seq = [z4.clone(), z4.clone()];
        let good = check_net_convergence_certificate(&seq, &x2, &[vec![0, 1], vec![0, 1]], &[0, 1], &v(1, 1)).unwrap();
        assert!(good.holds);
        let bad = check_net_convergence_certificate(&seq, &x2, &[vec![0, 2], vec![0, 1]], &[0, 1], &v(1, 1)).unwrap();
        assert_eq!(bad.failure, Some(NetFailure::NotNet { space: Some(0), point: 1 }));
        let wide = check_net_convergence_certificate(&seq, &x2, &[vec![0, 2], vec![0, 1]], &[0, 1], &v(2, 1)).unwrap();
        assert_eq!(wide.failure, Some(NetFailure::Distances { space: 0, i: 0, j: 1 }));
    }

    #[test]
    fn sutb_examples() {
        let (x2, x3) = (ring(2, 1), ring(3, 1));
        let p = UltrametricSpace::singleton("p");
        assert!(sutb_check(&[p.clone(), p], &v(1, 3), 1, &BTreeSet::new()).unwrap().holds);
        let fam = [x2, x3];
        assert!(sutb_check(&fam, &v(2, 1), 1, &BTreeSet::new()).unwrap().holds);
        let r: BTreeSet<ExactValue> = [v(1, 1)].into_iter().collect();
        let verdict = sutb_check(&fam, &v(1, 1), 2, &r).unwrap();
        assert!(!verdict.holds);
        assert_eq!(verdict.nets, vec![Some(vec![0, 1]), None]);
    }

    #[test]
    fn trends() {
        let balls: Vec<UltrametricSpace> = (1..=3).map(|s| truncated_scaled_ball(2, 1, s, 1).unwrap()).collect();
        let p = UltrametricSpace::singleton("p");
        let t = diameter_trend(&balls, Some(&p), &EngineConfig::default()).unwrap();
        assert_eq!(t.diameters, vec![v(1, 2), v(1, 4), v(1, 8)]);
        assert_eq!(t.classification, TrendClass::ShrinkingTowardZero);

        let z4 = ring(2, 2);
        let t = diameter_trend(&[z4.clone(), z4.clone(), z4], Some(&ring(2, 1)), &EngineConfig::default()).unwrap();
        assert_eq!(t.classification, TrendClass::ConstantFrom(0));
        assert_eq!(t.dhat_to_target, vec![Some(v(1, 2)); 3]);
        assert_eq!(t.equal_diameter_from, Some(0));
        assert!(t.violations.is_empty());

        let t = diameter_trend(&[], None, &EngineConfig::default()).unwrap();
        assert_eq!(t.classification, TrendClass::Empty);
        assert!(t.diameters.is_empty());
    }
}
