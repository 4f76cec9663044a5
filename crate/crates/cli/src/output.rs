//! Human-readable `key: value` rendering.

use std::fmt::Display;
use std::fmt::Write as _;

use ultragh::{ExactValue, UltrametricSpace};

#[derive(Default)]
pub struct Lines(String);

impl Lines {
    pub fn kv(&mut self, key: &str, value: impl Display) -> &mut Self {
        writeln!(self.0, "{key}: {value}").unwrap();
        self
    }

    pub fn finish(&mut self) -> String {
        std::mem::take(&mut self.0)
    }
}

pub fn opt<T: Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), ToString::to_string)
}

pub fn values(vs: &[ExactValue]) -> String {
    vs.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

pub fn labels(space: &UltrametricSpace, points: &[usize]) -> String {
    points.iter().map(|&i| space.labels()[i].as_str()).collect::<Vec<_>>().join(" ")
}

pub fn pairs(x: &UltrametricSpace, y: &UltrametricSpace, pairs: &[(usize, usize)]) -> String {
    pairs
        .iter()
        .map(|&(a, b)| format!("({},{})", x.labels()[a], y.labels()[b]))
        .collect::<Vec<_>>()
        .join(" ")
}
