//! The `.ums` text format.
//!
//! ```text
//! ums 1
//! points 2
//! labels a b
//! d 0 1 1/2
//! inexact true
//! ```
//!
//! Every pair `i < j` has exactly one `d` line with a rational in lowest
//! terms; the `inexact` line is optional. Blank lines are ignored.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::space::{SpaceError, UltrametricSpace};
use crate::value::ExactValue;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UmsError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid space: {0}")]
    Validation(#[from] SpaceError),
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
}

fn parse_err(line: usize, reason: impl Into<String>) -> UmsError {
    UmsError::Parse { line, reason: reason.into() }
}

/// Parses and validates a space.
pub fn parse(text: &str) -> Result<UltrametricSpace, UmsError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let mut header = |expect: &str| -> Result<(usize, Vec<&str>), UmsError> {
        let (no, line) = lines.next().ok_or_else(|| parse_err(0, format!("missing `{expect}` line")))?;
        let words: Vec<&str> = line.split_whitespace().collect();
        if words[0] != expect {
            return Err(parse_err(no, format!("expected `{expect}`, found `{}`", words[0])));
        }
        Ok((no, words[1..].to_vec()))
    };

    let (no, version) = header("ums")?;
    if version != ["1"] {
        return Err(parse_err(no, "unsupported version (expected `ums 1`)"));
    }
    let (no, count) = header("points")?;
    let n: usize = match count.as_slice() {
        [c] => c.parse().map_err(|_| parse_err(no, format!("bad point count `{c}`")))?,
        _ => return Err(parse_err(no, "expected `points <n>`")),
    };
    if n == 0 {
        return Err(SpaceError::EmptySpace.into());
    }
    let (no, labels) = header("labels")?;
    if labels.len() != n {
        return Err(parse_err(no, format!("{} labels for {n} points", labels.len())));
    }
    let labels: Vec<String> = labels.into_iter().map(String::from).collect();

    let mut cells: Vec<Option<ExactValue>> = vec![None; n * n];
    let mut inexact = false;
    let mut seen_inexact = false;
    for (no, line) in lines {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["d", i, j, value] => {
                if seen_inexact {
                    return Err(parse_err(no, "`d` line after `inexact`"));
                }
                let index = |s: &str| -> Result<usize, UmsError> {
                    let k: usize = s.parse().map_err(|_| parse_err(no, format!("bad index `{s}`")))?;
                    if k >= n {
                        return Err(parse_err(no, format!("index {k} out of range")));
                    }
                    Ok(k)
                };
                let (i, j) = (index(i)?, index(j)?);
                if i >= j {
                    return Err(parse_err(no, format!("pair ({i},{j}) must have i < j")));
                }
                let Some((a, b)) = value.split_once('/') else {
                    return Err(parse_err(no, format!("distance `{value}` is not of the form a/b")));
                };
                let v: ExactValue = value.parse().map_err(|e| parse_err(no, format!("{e}")))?;
                if v.to_ratio_string() != format!("{a}/{b}") {
                    return Err(parse_err(no, format!("distance `{value}` is not in lowest terms")));
                }
                if cells[i * n + j].is_some() {
                    return Err(parse_err(no, format!("duplicate pair ({i},{j})")));
                }
                cells[i * n + j] = Some(v);
            }
            ["inexact", flag] if !seen_inexact => {
                inexact = match *flag {
                    "true" => true,
                    "false" => false,
                    other => return Err(parse_err(no, format!("bad inexact flag `{other}`"))),
                };
                seen_inexact = true;
            }
            _ => return Err(parse_err(no, format!("unexpected line `{line}`"))),
        }
    }

    let mut matrix = vec![vec![ExactValue::zero(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = cells[i * n + j].take().ok_or_else(|| parse_err(0, format!("missing pair ({i},{j})")))?;
            matrix[j][i] = v.clone();
            matrix[i][j] = v;
        }
    }
    Ok(UltrametricSpace::validate(matrix, labels)?.with_inexact(inexact))
}

/// Canonical text for a space; [`parse`] inverts it exactly.
pub fn to_string(space: &UltrametricSpace) -> String {
    let mut out = String::new();
    let n = space.len();
    writeln!(out, "ums 1").unwrap();
    writeln!(out, "points {n}").unwrap();
    writeln!(out, "labels {}", space.labels().join(" ")).unwrap();
    for i in 0..n {
        for j in i + 1..n {
            writeln!(out, "d {i} {j} {}", space.d(i, j).to_ratio_string()).unwrap();
        }
    }
    if space.is_inexact() {
        writeln!(out, "inexact true").unwrap();
    }
    out
}

pub fn read_file(path: impl AsRef<Path>) -> Result<UltrametricSpace, UmsError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| UmsError::Io { path: path.display().to_string(), reason: e.to_string() })?;
    parse(&text)
}

pub fn write_file(path: impl AsRef<Path>, space: &UltrametricSpace) -> Result<(), UmsError> {
    let path = path.as_ref();
    std::fs::write(path, to_string(space))
        .map_err(|e| UmsError::Io { path: path.display().to_string(), reason: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{ramified_ball_approx, truncated_unramified_ring, zq_delta};

    #[test]
    fn round_trips() {
        for space in [
            truncated_unramified_ring(2, 1, 1).unwrap(),
            truncated_unramified_ring(2, 1, 2).unwrap(),
            zq_delta(3, 2, 1).unwrap(),
            ramified_ball_approx(2, 2, 1, 0, 1, 12).unwrap(),
            UltrametricSpace::singleton("only"),
        ] {
            let text = to_string(&space);
            let back = parse(&text).unwrap();
            assert_eq!(back, space);
            assert_eq!(to_string(&back), text);
        }
    }

    #[test]
    fn x2_text() {
        let text = to_string(&truncated_unramified_ring(2, 1, 1).unwrap());
        assert_eq!(text, "ums 1\npoints 2\nlabels 0 1\nd 0 1 1/1\n");
    }

    #[test]
    fn missing_pair_is_a_parse_error() {
        let text = "ums 1\npoints 3\nlabels a b c\nd 0 1 1/1\nd 0 2 1/1\n";
        assert!(matches!(parse(text), Err(UmsError::Parse { reason, .. }) if reason.contains("missing pair (1,2)")));
    }

    #[test]
    fn violation_is_forwarded() {
        let text = "ums 1\npoints 3\nlabels a b c\nd 0 1 1/1\nd 0 2 3/1\nd 1 2 1/1\n";
        assert!(matches!(parse(text), Err(UmsError::Validation(SpaceError::UltrametricViolation { .. }))));
    }

    #[test]
    fn malformed_lines() {
        let base = "ums 1\npoints 2\nlabels a b\n";
        for (tail, line) in [
            ("d 0 1 2/4\n", 4),
            ("d 0 1 1\n", 4),
            ("d 1 0 1/1\n", 4),
            ("d 0 1 1/1\nd 0 1 1/1\n", 5),
            ("d 0 5 1/1\n", 4),
            ("x\n", 4),
            ("d 0 1 1/1\ninexact maybe\n", 5),
        ] {
            match parse(&format!("{base}{tail}")) {
                Err(UmsError::Parse { line: l, .. }) => assert_eq!(l, line, "{tail}"),
                other => panic!("{tail}: {other:?}"),
            }
        }
        assert!(matches!(parse("ums 2\n"), Err(UmsError::Parse { line: 1, .. })));
        assert!(matches!(parse("ums 1\npoints 2\nlabels a\n"), Err(UmsError::Parse { line: 3, .. })));
        assert!(matches!(
            parse("ums 1\npoints 2\nlabels a a\nd 0 1 1/1\n"),
            Err(UmsError::Validation(SpaceError::DuplicateLabel(_)))
        ));
    }
}
