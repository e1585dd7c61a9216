//! Synthetic labelled traffic patterns.

use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::ca_engine::BinaryLattice;
use crate::classifier::{ClassId, PatternVector};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("pattern file line {line}: {msg}")]
pub struct PatternFileError {
    pub line: usize,
    pub msg: String,
}

/// One pattern of the two-cluster family: class 0 starts `00`, class 1
/// starts `11`, the remaining bits are uniform noise.
pub fn two_cluster_pattern(bits: usize, class: ClassId, rng: &mut impl Rng) -> PatternVector {
    let prefix = class != 0;
    let cells = (0..bits)
        .map(|i| if i < 2 { prefix } else { rng.gen::<bool>() })
        .collect();
    PatternVector::new(BinaryLattice::new(cells).expect("bits >= 1"), Some(class.min(1)))
}

/// `count` patterns alternating class 0 and class 1.
pub fn two_cluster(count: usize, bits: usize, rng: &mut impl Rng) -> Vec<PatternVector> {
    (0..count)
        .map(|i| two_cluster_pattern(bits, (i % 2) as ClassId, rng))
        .collect()
}

/// Reads `<bits> <label>` lines; `#` starts a comment.
pub fn parse_patterns(text: &str) -> Result<Vec<PatternVector>, PatternFileError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: &str| PatternFileError { line, msg: msg.to_string() };
        let mut parts = content.split_whitespace();
        let (Some(bits), Some(label), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err("expected `<bits> <label>`"));
        };
        let cells = BinaryLattice::parse(bits).map_err(|_| err("bits must be a nonempty 0/1 string"))?;
        let label: ClassId = label.parse().map_err(|_| err("label must be a nonnegative integer"))?;
        if let Some(first) = out.first().map(PatternVector::len) {
            if cells.len() != first {
                return Err(err(&format!("pattern has {} bits, earlier patterns have {first}", cells.len())));
            }
        }
        out.push(PatternVector::new(cells, Some(label)));
    }
    Ok(out)
}

pub fn format_patterns(patterns: &[PatternVector]) -> String {
    let mut s = String::new();
    for p in patterns {
        let _ = writeln!(s, "{} {}", p.cells(), p.label.unwrap_or(0));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn prefixes_follow_the_class() {
        let data = two_cluster(50, 8, &mut seed::rng(9));
        assert_eq!(data.len(), 50);
        for p in &data {
            let c = p.cells().cells();
            assert_eq!(c.len(), 8);
            assert_eq!(c[0], p.label == Some(1));
            assert_eq!(c[1], p.label == Some(1));
        }
        assert_eq!(data.iter().filter(|p| p.label == Some(1)).count(), 25);
    }

    #[test]
    fn pattern_file_round_trip_and_errors() {
        let data = two_cluster(6, 5, &mut seed::rng(2));
        assert_eq!(parse_patterns(&format_patterns(&data)).unwrap(), data);
        assert_eq!(parse_patterns("# only a comment\n\n").unwrap(), vec![]);
        assert_eq!(parse_patterns("0101 1\n011 0\n").unwrap_err().line, 2);
        assert_eq!(parse_patterns("01x1 1\n").unwrap_err().line, 1);
        assert_eq!(parse_patterns("0101\n").unwrap_err().line, 1);
        assert_eq!(parse_patterns("0101 -1\n").unwrap_err().line, 1);
    }
}
