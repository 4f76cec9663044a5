//! The non-Archimedean Gromov-Hausdorff distance computed by independent
//! methods that must agree, plus the classical distance, the weight
//! spectrum lower bound and the metric ratio.

use serde::Serialize;
use thiserror::Error;

use crate::correspondence::{
    min_distortion_correspondence, min_distortion_strong_correspondence, spectra_floor, Budget, BudgetExceeded, Pair,
};
use crate::isometry::{search_approximation, search_isometry, ApproximationWitness};
use crate::ladder::{Level, NodeCounter, OutOfBudget, Ranked};
use crate::space::UltrametricSpace;
use crate::value::ExactValue;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    StrongCorrespondence,
    IsometryScan,
    ApproximationScan,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::StrongCorrespondence, Method::IsometryScan, Method::ApproximationScan];

    pub fn name(self) -> &'static str {
        match self {
            Method::StrongCorrespondence => "strong_correspondence",
            Method::IsometryScan => "isometry_scan",
            Method::ApproximationScan => "approximation_scan",
        }
    }
}

/// Which methods to run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MethodSelection {
    /// Every method whose size cap admits the input.
    Auto,
    /// Exactly these methods, ignoring caps.
    Only(Vec<Method>),
}

/// Size limits for the automatic method selection.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Caps {
    /// isometry scan runs when `|Y|^|X|` is at most this
    pub isometry_maps: u64,
    /// approximation scan runs when `|X| * |Y|` is at most this
    pub approximation_pairs: usize,
    /// classical distance is searched exactly when `|X| * |Y|` is at most this
    pub classical_pairs: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { isometry_maps: 1024, approximation_pairs: 36, classical_pairs: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub methods: MethodSelection,
    pub budget: Budget,
    pub caps: Caps,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { methods: MethodSelection::Auto, budget: Budget::DEFAULT, caps: Caps::default() }
    }
}

impl EngineConfig {
    pub fn only(methods: &[Method]) -> Self {
        EngineConfig { methods: MethodSelection::Only(methods.to_vec()), ..Self::default() }
    }

    fn enabled(&self, x: &UltrametricSpace, y: &UltrametricSpace) -> Vec<Method> {
        match &self.methods {
            MethodSelection::Only(list) => {
                let mut list = list.clone();
                list.sort();
                list.dedup();
                list
            }
            MethodSelection::Auto => {
                let maps = (y.len() as u64).checked_pow(x.len() as u32);
                let mut list = vec![Method::StrongCorrespondence];
                if maps.is_some_and(|m| m <= self.caps.isometry_maps) {
                    list.push(Method::IsometryScan);
                }
                if x.len() * y.len() <= self.caps.approximation_pairs {
                    list.push(Method::ApproximationScan);
                }
                list
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("methods disagree: {0:?}")]
    MethodDisagreement(Vec<MethodResult>),
    #[error("{} ran out of its {limit}-node budget; value lies in [{lower}, {upper}]", method.name())]
    BudgetExceeded { method: Method, limit: u64, lower: ExactValue, upper: ExactValue },
    #[error("classical search ran out of its {limit}-node budget; value lies in [{lower}, {upper}]")]
    ClassicalBudgetExceeded { limit: u64, lower: ExactValue, upper: ExactValue },
    #[error("no method selected")]
    NoMethod,
    #[error("report invariant violated: {0}")]
    InvariantViolation(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MethodResult {
    pub method: String,
    pub value: ExactValue,
    /// Whether the scan predicate already holds at the infimum (scans only).
    pub attained: Option<bool>,
    pub nodes: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Witnesses {
    /// lexicographically smallest minimizing strong correspondence
    pub strong_correspondence: Option<Vec<Pair>>,
    /// strong isometry at `isometry_epsilon`
    pub isometry: Option<Vec<usize>>,
    pub isometry_epsilon: Option<ExactValue>,
    pub approximation: Option<ApproximationWitness>,
    /// minimizing correspondence for the classical distance
    pub classical: Option<Vec<Pair>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DistanceReport {
    pub dhat: ExactValue,
    /// `None` when no attainment evidence was computed.
    pub dhat_attained: Option<bool>,
    pub methods: Vec<MethodResult>,
    /// Exact classical distance, absent when only bounds are known.
    pub classical_dgh: Option<ExactValue>,
    pub classical_bounds: [ExactValue; 2],
    /// `dhat / classical_dgh`; absent for isometric pairs or unknown classical distance.
    pub ratio: Option<ExactValue>,
    pub isometric: bool,
    pub spectra_lower_bound: ExactValue,
    /// `dhat - spectra_lower_bound`
    pub spectra_gap: ExactValue,
    pub diameter_upper_bound: ExactValue,
    pub agreement: bool,
    pub witnesses: Witnesses,
    pub inexact: bool,
}

/// Largest weight that occurs in exactly one of the two spectra; the
/// infimum of the scales above which the filtered spectra coincide.
pub fn spectra_lower_bound(x: &UltrametricSpace, y: &UltrametricSpace) -> ExactValue {
    spectra_floor(x, y)
}

/// Outcome of a threshold scan: the infimum of the scales where a monotone
/// predicate holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanResult<W> {
    pub infimum: ExactValue,
    pub attained: bool,
    /// the scale at which `witness` was found
    pub epsilon: ExactValue,
    pub witness: W,
    pub nodes: u64,
}

/// Evaluates the predicate at every threshold and at one point inside every
/// gap, from the smallest positive scale upward, and stops at the first hit.
fn scan<W>(
    r: &Ranked<'_>,
    budget: Budget,
    method: Method,
    mut predicate: impl FnMut(Level, &mut NodeCounter) -> Result<Option<W>, OutOfBudget>,
) -> Result<ScanResult<W>, EngineError> {
    let mut counter = NodeCounter::new(budget.max_nodes);
    for level in 1..=r.top_level().0 {
        let level = Level(level);
        match predicate(level, &mut counter) {
            Err(OutOfBudget) => {
                return Err(EngineError::BudgetExceeded {
                    method,
                    limit: budget.max_nodes,
                    lower: r.value(level.0 / 2).clone(),
                    upper: r.x.diameter().max(r.y.diameter()),
                })
            }
            Ok(None) => continue,
            Ok(Some(witness)) => {
                return Ok(ScanResult {
                    infimum: r.value(level.0 / 2).clone(),
                    attained: level.0 % 2 == 0,
                    epsilon: r.level_value(level),
                    witness,
                    nodes: counter.used,
                })
            }
        }
    }
    unreachable!("the predicate holds above every distance")
}

/// Infimum of the scales admitting a strong isometry `X -> Y`.
pub fn isometry_scan(
    x: &UltrametricSpace,
    y: &UltrametricSpace,
    budget: Budget,
) -> Result<ScanResult<Vec<usize>>, EngineError> {
    let r = Ranked::new(x, y);
    scan(&r, budget, Method::IsometryScan, |level, c| search_isometry(&r, level, c))
}

/// Infimum of the scales at which the spaces are strong approximations of
/// each other.
pub fn approximation_scan(
    x: &UltrametricSpace,
    y: &UltrametricSpace,
    budget: Budget,
) -> Result<ScanResult<ApproximationWitness>, EngineError> {
    let r = Ranked::new(x, y);
    let result = scan(&r, budget, Method::ApproximationScan, |level, c| search_approximation(&r, level, c))?;
    let (xs, ys) = result.witness;
    Ok(ScanResult {
        witness: ApproximationWitness { xs, ys, epsilon: result.epsilon.clone() },
        infimum: result.infimum,
        attained: result.attained,
        epsilon: result.epsilon,
        nodes: result.nodes,
    })
}

/// Exact classical distance with its minimizing correspondence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassicalResult {
    pub value: ExactValue,
    pub pairs: Vec<Pair>,
}

/// Half the minimum distortion over all correspondences.
///
/// On budget exhaustion the error carries the interval
/// `[|diam X - diam Y| / 2, incumbent / 2]` (as distortions, before halving
/// in `lower_bound` and `incumbent`).
pub fn classical_gh(
    x: &UltrametricSpace,
    y: &UltrametricSpace,
    budget: Budget,
) -> Result<ClassicalResult, BudgetExceeded> {
    let m = min_distortion_correspondence(x, y, budget)?;
    let value = m.distortion.half();
    assert!(value >= x.diameter().abs_diff(&y.diameter()).half(), "classical distance below the diameter bound");
    Ok(ClassicalResult { value, pairs: m.pairs })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricRatio {
    Value(ExactValue),
    /// The spaces are isometric; the ratio is undefined.
    Isometric,
}

/// `dhat / d_GH`.
pub fn metric_ratio(x: &UltrametricSpace, y: &UltrametricSpace, config: &EngineConfig) -> Result<MetricRatio, EngineError> {
    let dhat = dhat_gh(x, y, config)?.dhat;
    let classical = classical_gh(x, y, config.budget).map_err(|e| EngineError::ClassicalBudgetExceeded {
        limit: e.limit,
        lower: e.lower_bound.half(),
        upper: e.incumbent.distortion.half(),
    })?;
    Ok(match dhat.checked_div(&classical.value) {
        Some(r) => MetricRatio::Value(r),
        None => MetricRatio::Isometric,
    })
}

fn corr_error(e: BudgetExceeded) -> EngineError {
    EngineError::BudgetExceeded {
        method: Method::StrongCorrespondence,
        limit: e.limit,
        lower: e.lower_bound,
        upper: e.incumbent.distortion,
    }
}

/// Computes the distance with every enabled method and cross-checks them.
///
/// When the diameters differ the distance is the larger diameter; only the
/// first enabled method then runs, as a confirmation.
pub fn dhat_gh(x: &UltrametricSpace, y: &UltrametricSpace, config: &EngineConfig) -> Result<DistanceReport, EngineError> {
    let mut enabled = config.enabled(x, y);
    if enabled.is_empty() {
        return Err(EngineError::NoMethod);
    }
    let big_d = x.diameter().max(y.diameter());
    let lower = spectra_lower_bound(x, y);
    let mut methods = Vec::new();
    let mut witnesses = Witnesses::default();

    let shortcut = x.diameter() != y.diameter();
    if shortcut {
        methods.push(MethodResult { method: "diameter_shortcut".into(), value: big_d.clone(), attained: None, nodes: 0 });
        enabled.truncate(1);
    }

    let mut iso_attained = None;
    let mut approx_attained = None;
    for method in enabled {
        match method {
            Method::StrongCorrespondence => {
                let m = min_distortion_strong_correspondence(x, y, config.budget).map_err(corr_error)?;
                methods.push(MethodResult { method: method.name().into(), value: m.distortion, attained: None, nodes: m.nodes });
                witnesses.strong_correspondence = Some(m.pairs);
            }
            Method::IsometryScan => {
                let s = isometry_scan(x, y, config.budget)?;
                iso_attained = Some(s.attained);
                methods.push(MethodResult { method: method.name().into(), value: s.infimum, attained: Some(s.attained), nodes: s.nodes });
                witnesses.isometry = Some(s.witness);
                witnesses.isometry_epsilon = Some(s.epsilon);
            }
            Method::ApproximationScan => {
                let s = approximation_scan(x, y, config.budget)?;
                approx_attained = Some(s.attained);
                methods.push(MethodResult { method: method.name().into(), value: s.infimum, attained: Some(s.attained), nodes: s.nodes });
                witnesses.approximation = Some(s.witness);
            }
        }
    }

    let dhat = methods[0].value.clone();
    if methods.iter().any(|m| m.value != dhat) {
        return Err(EngineError::MethodDisagreement(methods));
    }

    let dhat_attained = iso_attained.or(approx_attained).or_else(|| approximation_attained_at(x, y, &dhat, config.budget));

    let classical_lower = x.diameter().abs_diff(&y.diameter()).half();
    let (classical_dgh, classical_bounds) = if x.len() * y.len() <= config.caps.classical_pairs {
        match classical_gh(x, y, config.budget) {
            Ok(c) => {
                witnesses.classical = Some(c.pairs);
                (Some(c.value.clone()), [c.value.clone(), c.value])
            }
            Err(e) => (None, [e.lower_bound.half(), e.incumbent.distortion.half()]),
        }
    } else {
        (None, [classical_lower, big_d.half()])
    };
    let isometric = dhat.is_zero();
    let ratio = classical_dgh.as_ref().and_then(|c| dhat.checked_div(c));

    if lower > dhat || dhat > big_d {
        return Err(EngineError::InvariantViolation(format!(
            "expected {lower} <= {dhat} <= {big_d}"
        )));
    }
    if shortcut && dhat != big_d {
        return Err(EngineError::InvariantViolation(format!("diameters differ but value {dhat} != {big_d}")));
    }
    if classical_bounds[0].add(&classical_bounds[0]) > dhat {
        return Err(EngineError::InvariantViolation(format!(
            "classical lower bound {} exceeds half of {dhat}",
            classical_bounds[0]
        )));
    }

    Ok(DistanceReport {
        spectra_gap: dhat.checked_sub(&lower).expect("checked above"),
        dhat,
        dhat_attained,
        methods,
        classical_dgh,
        classical_bounds,
        ratio,
        isometric,
        spectra_lower_bound: lower,
        diameter_upper_bound: big_d,
        agreement: true,
        witnesses,
        inexact: x.is_inexact() || y.is_inexact(),
    })
}

/// Whether the approximation predicate holds at `eps` itself.
fn approximation_attained_at(x: &UltrametricSpace, y: &UltrametricSpace, eps: &ExactValue, budget: Budget) -> Option<bool> {
    if eps.is_zero() {
        return Some(false);
    }
    let r = Ranked::new(x, y);
    let mut counter = NodeCounter::new(budget.max_nodes);
    search_approximation(&r, r.level(eps), &mut counter).ok().map(|w| w.is_some())
}
