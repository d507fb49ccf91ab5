//! File formats: transition matrices and trajectories.
//!
//! Matrix files are diff-friendly plain text: the state count on the first
//! line, then one whitespace-separated row of decimals per line. Trajectory
//! files carry a `#n=<universe>` header and one 0-based state per line.
//! `#` starts a comment in both formats.

use std::fmt::Write as _;
use std::path::Path;

use crate::chain::Trajectory;
use crate::linalg::{SquareMatrix, StochasticMatrix};
use crate::{Error, Result};

fn content_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(|l| match l.find('#') {
            Some(idx) => &l[..idx],
            None => l,
        })
        .map(str::trim)
        .filter(|l| !l.is_empty())
}

/// Parse a transition matrix document.
pub fn parse_matrix(text: &str) -> Result<StochasticMatrix> {
    let mut lines = content_lines(text);
    let n: usize = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad state count: {e}")))?;
    if n == 0 {
        return Err(Error::Parse("state count must be positive".into()));
    }
    let mut m = SquareMatrix::zeros(n);
    let mut row = 0usize;
    for line in lines {
        if row >= n {
            return Err(Error::Parse(format!("more than {n} rows")));
        }
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {row}: bad value {tok:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if values.len() != n {
            return Err(Error::Parse(format!(
                "row {row} has {} entries, expected {n}",
                values.len()
            )));
        }
        for (j, v) in values.into_iter().enumerate() {
            m.set(row, j, v);
        }
        row += 1;
    }
    if row != n {
        return Err(Error::Parse(format!("found {row} rows, expected {n}")));
    }
    StochasticMatrix::new(m)
}

pub fn read_matrix(path: &Path) -> Result<StochasticMatrix> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

/// Render a matrix in the file format with full round-trip precision.
pub fn format_matrix(p: &StochasticMatrix) -> String {
    let n = p.n();
    let mut out = String::new();
    let _ = writeln!(out, "{n}");
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{:?}", p.get(i, j))).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

/// Parse a trajectory document (`#n=<universe>` header, one state per line).
pub fn parse_trajectory(text: &str) -> Result<Trajectory> {
    let mut universe: Option<usize> = None;
    for line in text.lines() {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix("#n=") {
            universe = Some(
                rest.trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad universe size: {e}")))?,
            );
            break;
        }
    }
    let n = universe.ok_or_else(|| Error::Parse("missing #n= header".into()))?;
    let mut states = Vec::new();
    for line in content_lines(text) {
        for tok in line.split_whitespace() {
            let s: usize = tok
                .parse()
                .map_err(|e| Error::Parse(format!("bad state {tok:?}: {e}")))?;
            states.push(s);
        }
    }
    Trajectory::new(states, n, 0)
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    parse_trajectory(&std::fs::read_to_string(path)?)
}

pub fn format_trajectory(w: &Trajectory) -> String {
    let mut out = String::with_capacity(w.len() * 3 + 16);
    let _ = writeln!(out, "#n={}", w.universe_size());
    for &s in w.states() {
        let _ = writeln!(out, "{s}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_roundtrip() {
        let p = StochasticMatrix::from_rows(&[
            vec![0.5, 0.3, 0.2],
            vec![0.3, 0.45, 0.25],
            vec![0.2, 0.25, 0.55],
        ])
        .unwrap();
        let text = format_matrix(&p);
        let back = parse_matrix(&text).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn matrix_parse_accepts_comments() {
        let text = "# fixture\n2\n0.5 0.5 # row 0\n0.5 0.5\n";
        let p = parse_matrix(text).unwrap();
        assert_eq!(p.n(), 2);
    }

    #[test]
    fn matrix_parse_rejects_malformed() {
        assert!(matches!(parse_matrix(""), Err(Error::Parse(_))));
        assert!(matches!(parse_matrix("2\n0.5 0.5\n"), Err(Error::Parse(_))));
        assert!(matches!(
            parse_matrix("2\n0.5 0.5 0.5\n0.5 0.5 0.5\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(parse_matrix("2\nx y\nz w\n"), Err(Error::Parse(_))));
        // Parseable but invariant-violating input surfaces the matrix error.
        assert!(matches!(
            parse_matrix("2\n0.6 0.5\n0.5 0.6\n"),
            Err(Error::NotStochastic { .. })
        ));
    }

    #[test]
    fn trajectory_roundtrip() {
        let w = Trajectory::new(vec![0, 3, 2, 2, 1], 4, 7).unwrap();
        let text = format_trajectory(&w);
        assert!(text.starts_with("#n=4\n"));
        let back = parse_trajectory(&text).unwrap();
        assert_eq!(back.states(), w.states());
        assert_eq!(back.universe_size(), 4);
    }

    #[test]
    fn trajectory_requires_header() {
        assert!(matches!(parse_trajectory("0\n1\n"), Err(Error::Parse(_))));
        assert!(matches!(
            parse_trajectory("#n=2\n0\n5\n"),
            Err(Error::InvalidParameter(_))
        ));
    }
}
