//! Weight spectra (the sets of distinct nonzero distances) and the
//! candidate thresholds derived from them.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::space::{SpaceError, UltrametricSpace};
use crate::value::ExactValue;

/// Strictly increasing list of the distinct nonzero distances of a subset.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize)]
pub struct WeightSpectrum {
    values: Vec<ExactValue>,
}

impl WeightSpectrum {
    pub fn from_values(values: impl IntoIterator<Item = ExactValue>) -> Self {
        let set: BTreeSet<ExactValue> = values.into_iter().filter(ExactValue::is_positive).collect();
        WeightSpectrum { values: set.into_iter().collect() }
    }

    pub fn values(&self) -> &[ExactValue] {
        &self.values
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Smallest weight, absent for an empty spectrum.
    pub fn min_value(&self) -> Option<&ExactValue> {
        self.values.first()
    }

    /// Largest weight, absent for an empty spectrum.
    pub fn max_value(&self) -> Option<&ExactValue> {
        self.values.last()
    }

    pub fn contains(&self, v: &ExactValue) -> bool {
        self.values.binary_search(v).is_ok()
    }

    pub fn is_subset_of(&self, other: &WeightSpectrum) -> bool {
        self.values.iter().all(|v| other.contains(v))
    }

    /// Elements `>= eps`.
    pub fn at_least(&self, eps: &ExactValue) -> WeightSpectrum {
        WeightSpectrum { values: self.values.iter().filter(|v| *v >= eps).cloned().collect() }
    }
}

/// Distinct nonzero distances among the points of `set`.
pub fn weight_spectrum(space: &UltrametricSpace, set: &[usize]) -> Result<WeightSpectrum, SpaceError> {
    if set.is_empty() {
        return Err(SpaceError::EmptySubset);
    }
    for &i in set {
        space.check_index(i)?;
    }
    let mut values = Vec::new();
    for (a, &i) in set.iter().enumerate() {
        for &j in &set[a + 1..] {
            values.push(space.d(i, j).clone());
        }
    }
    Ok(WeightSpectrum::from_values(values))
}

/// Spectrum of the whole space.
pub fn full_spectrum(space: &UltrametricSpace) -> WeightSpectrum {
    let n = space.len();
    let mut values = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            values.push(space.d(i, j).clone());
        }
    }
    WeightSpectrum::from_values(values)
}

/// Elements of `spectrum` that are `>= eps`.
pub fn spectrum_at_least(spectrum: &WeightSpectrum, eps: &ExactValue) -> WeightSpectrum {
    spectrum.at_least(eps)
}

/// The sorted set of values at which any comparison between distances,
/// distance differences and a threshold can change outcome:
///
/// `{0} ∪ W(X) ∪ W(Y) ∪ {|a - b| : a ∈ W(X) ∪ {0}, b ∈ W(Y) ∪ {0}} ∪ {max diam + 1}`.
pub fn candidate_thresholds(x: &UltrametricSpace, y: &UltrametricSpace) -> Vec<ExactValue> {
    let wx = full_spectrum(x);
    let wy = full_spectrum(y);
    let mut out: BTreeSet<ExactValue> = BTreeSet::new();
    out.insert(ExactValue::zero());
    let zero = [ExactValue::zero()];
    let xs: Vec<&ExactValue> = wx.values().iter().chain(zero.iter()).collect();
    let ys: Vec<&ExactValue> = wy.values().iter().chain(zero.iter()).collect();
    for a in &xs {
        out.insert((*a).clone());
        for b in &ys {
            out.insert((*b).clone());
            out.insert(a.abs_diff(b));
        }
    }
    let top = x.diameter().max(y.diameter());
    out.insert(top.add(&ExactValue::one()));
    out.into_iter().collect()
}
