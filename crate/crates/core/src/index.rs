//! Positive integer tuples under the product ordering, and box schedules.
//!
//! `MultiIndex` is the index set of every limit computed in this crate: the
//! sides of a rectangular support, or the argument of a function being tested
//! for coordinate-wise subadditivity. Two indices compare with `leq_pi` when
//! every coordinate of the first is at most the matching coordinate of the
//! second; this is a partial order, and the coordinatewise maximum gives an
//! upper bound for any pair, which makes the tuples a directed set.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("a multi-index needs at least one coordinate")]
    Empty,
    #[error("coordinate {axis} is {value}; coordinates must be positive")]
    NonPositive { axis: usize, value: u64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cannot parse `{0}` as sides (expected e.g. `3` or `2x3`)")]
    Parse(String),
}

/// A d-tuple of positive integers.
///
/// The derived `Ord` is lexicographic; it is a total order used for
/// deterministic tie-breaking, not the product order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u64>);

impl MultiIndex {
    pub fn new(coords: Vec<u64>) -> Result<Self, IndexError> {
        if coords.is_empty() {
            return Err(IndexError::Empty);
        }
        if let Some((axis, &value)) = coords.iter().enumerate().find(|(_, &c)| c == 0) {
            return Err(IndexError::NonPositive { axis, value });
        }
        Ok(MultiIndex(coords))
    }

    /// `(k, …, k)` in dimension `dim`.
    pub fn uniform(dim: usize, k: u64) -> Result<Self, IndexError> {
        Self::new(vec![k; dim])
    }

    pub fn ones(dim: usize) -> Self {
        MultiIndex(vec![1; dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[u64] {
        &self.0
    }

    pub fn get(&self, axis: usize) -> u64 {
        self.0[axis]
    }

    /// Product of the coordinates, saturating at `u64::MAX`.
    pub fn volume(&self) -> u64 {
        self.0.iter().fold(1u64, |acc, &c| acc.saturating_mul(c))
    }

    /// Product of the coordinates as a float; used for ratios.
    pub fn volume_f64(&self) -> f64 {
        self.0.iter().map(|&c| c as f64).product()
    }

    /// Copy of `self` with coordinate `axis` replaced by `value` (≥ 1).
    pub fn with_coord(&self, axis: usize, value: u64) -> Self {
        assert!(value >= 1, "coordinates must be positive");
        let mut coords = self.0.clone();
        coords[axis] = value;
        MultiIndex(coords)
    }

    fn check_dim(&self, other: &MultiIndex) -> Result<(), IndexError> {
        if self.dim() != other.dim() {
            return Err(IndexError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// Product ordering: `self ≤π other` iff every coordinate is ≤.
    pub fn leq_pi(&self, other: &MultiIndex) -> Result<bool, IndexError> {
        self.check_dim(other)?;
        Ok(self.0.iter().zip(&other.0).all(|(a, b)| a <= b))
    }

    /// Coordinatewise maximum, an upper bound of both arguments.
    pub fn join(&self, other: &MultiIndex) -> Result<MultiIndex, IndexError> {
        self.check_dim(other)?;
        Ok(MultiIndex(
            self.0.iter().zip(&other.0).map(|(&a, &b)| a.max(b)).collect(),
        ))
    }

    /// All boxes `y` with `1 ≤π y ≤π self`, in lexicographic order.
    pub fn boxes_below(&self) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![1u64; self.dim()];
        loop {
            out.push(MultiIndex(cur.clone()));
            // odometer, last axis fastest
            let mut axis = self.dim();
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if cur[axis] < self.0[axis] {
                    cur[axis] += 1;
                    break;
                }
                cur[axis] = 1;
            }
        }
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("x")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for MultiIndex {
    type Err = IndexError;

    /// Parses `a x b x c`, with or without spaces around the separators.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let coords = s
            .split(['x', 'X'])
            .map(|part| part.trim().parse::<u64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| IndexError::Parse(s.to_string()))?;
        MultiIndex::new(coords).map_err(|_| IndexError::Parse(s.to_string()))
    }
}

/// Diagonal schedule `(k, …, k)` for `k` in `from..=to`.
pub fn diagonal(dim: usize, from: u64, to: u64) -> Vec<MultiIndex> {
    (from.max(1)..=to).map(|k| MultiIndex(vec![k; dim])).collect()
}

/// Per-coordinate geometric growth: starting from `(1, …, 1)`, multiply one
/// coordinate at a time (cyclically) by `ratio` while it stays ≤ `max`.
///
/// In dimension 1 with `ratio = 2` this is `1, 2, 4, …`.
pub fn geometric(dim: usize, ratio: u64, max: u64) -> Vec<MultiIndex> {
    assert!(ratio >= 2, "geometric ratio must be at least 2");
    let mut cur = vec![1u64; dim];
    let mut out = vec![MultiIndex(cur.clone())];
    let mut stuck = 0;
    let mut axis = 0;
    while stuck < dim {
        match cur[axis].checked_mul(ratio) {
            Some(next) if next <= max => {
                cur[axis] = next;
                out.push(MultiIndex(cur.clone()));
                stuck = 0;
            }
            _ => stuck += 1,
        }
        axis = (axis + 1) % dim;
    }
    out
}

/// The ≤π-maximum of `boxes`, if one exists.
pub fn maximum(boxes: &[MultiIndex]) -> Option<&MultiIndex> {
    let candidate = boxes.iter().max()?;
    boxes
        .iter()
        .all(|b| b.leq_pi(candidate).unwrap_or(false))
        .then_some(candidate)
}

/// The ≤π-maximal elements of `boxes`, deduplicated and in lexicographic order.
pub fn maximal_elements(boxes: &[MultiIndex]) -> Vec<MultiIndex> {
    let mut out: Vec<MultiIndex> = boxes
        .iter()
        .filter(|b| {
            !boxes
                .iter()
                .any(|c| c != *b && b.leq_pi(c).unwrap_or(false))
        })
        .cloned()
        .collect();
    out.sort();
    out.dedup();
    out
}
