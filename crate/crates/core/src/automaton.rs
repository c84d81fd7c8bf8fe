//! Cellular automata `⟨d, Q, N, f⟩` with explicit rule tables, rectangular
//! supports, and the finite-support map `F_E: Q^{E+N} → Q^E`.
//!
//! States are the integers `0..q`. The neighborhood is an ordered list of
//! offsets; its order fixes the rule table index
//! `enc(s_1, …, s_n) = Σ s_i·q^{n-i}`.

use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::index::MultiIndex;

pub type State = u32;
pub type Offset = Vec<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CaError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("need at least two states, got {0}")]
    TooFewStates(u32),
    #[error("neighborhood is empty")]
    EmptyNeighborhood,
    #[error("offset {offset:?} has {found} components, expected {expected}")]
    OffsetDimension {
        offset: Offset,
        expected: usize,
        found: usize,
    },
    #[error("duplicate neighborhood offset {0:?}")]
    DuplicateOffset(Offset),
    #[error("rule table has {found} entries, expected {expected}")]
    TableLength { expected: usize, found: usize },
    #[error("rule table of q^n = {states}^{arity} entries is too large")]
    TableTooLarge { states: u32, arity: usize },
    #[error("state {value} out of range 0..{states}")]
    StateOutOfRange { value: State, states: u32 },
    #[error("expected {expected} neighbor states, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("unknown builtin automaton `{0}` (known: shift, and1d, xor1d, and2d)")]
    UnknownBuiltin(String),
    #[error("input support does not match E+N")]
    SupportMismatch,
    #[error("expected {expected} cells, got {found}")]
    CellCount { expected: usize, found: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

pub const BUILTIN_NAMES: [&str; 4] = ["shift", "and1d", "xor1d", "and2d"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellularAutomaton {
    dim: usize,
    states: u32,
    neighborhood: Vec<Offset>,
    table: Vec<State>,
}

impl CellularAutomaton {
    pub fn new(
        dim: usize,
        states: u32,
        neighborhood: Vec<Offset>,
        table: Vec<State>,
    ) -> Result<Self, CaError> {
        if dim == 0 {
            return Err(CaError::ZeroDimension);
        }
        if states < 2 {
            return Err(CaError::TooFewStates(states));
        }
        if neighborhood.is_empty() {
            return Err(CaError::EmptyNeighborhood);
        }
        let mut seen = HashSet::new();
        for offset in &neighborhood {
            if offset.len() != dim {
                return Err(CaError::OffsetDimension {
                    offset: offset.clone(),
                    expected: dim,
                    found: offset.len(),
                });
            }
            if !seen.insert(offset) {
                return Err(CaError::DuplicateOffset(offset.clone()));
            }
        }
        let expected = table_len(states, neighborhood.len())?;
        if table.len() != expected {
            return Err(CaError::TableLength {
                expected,
                found: table.len(),
            });
        }
        if let Some(&value) = table.iter().find(|&&v| v >= states) {
            return Err(CaError::StateOutOfRange { value, states });
        }
        Ok(CellularAutomaton {
            dim,
            states,
            neighborhood,
            table,
        })
    }

    /// Builds the table by evaluating `rule` on every neighbor tuple.
    pub fn from_rule(
        dim: usize,
        states: u32,
        neighborhood: Vec<Offset>,
        rule: impl Fn(&[State]) -> State,
    ) -> Result<Self, CaError> {
        let n = neighborhood.len();
        let len = table_len(states, n)?;
        let table = (0..len)
            .map(|code| rule(&decode_neighbors(code, states, n)))
            .collect();
        Self::new(dim, states, neighborhood, table)
    }

    pub fn builtin(name: &str) -> Result<Self, CaError> {
        match name {
            "shift" => Self::from_rule(1, 2, vec![vec![1]], |s| s[0]),
            "and1d" => Self::from_rule(1, 2, vec![vec![0], vec![1]], |s| s[0] & s[1]),
            "xor1d" => Self::from_rule(1, 2, vec![vec![0], vec![1]], |s| s[0] ^ s[1]),
            "and2d" => Self::from_rule(
                2,
                2,
                vec![vec![0, 0], vec![1, 0], vec![0, 1]],
                |s| s[0] & s[1] & s[2],
            ),
            other => Err(CaError::UnknownBuiltin(other.to_string())),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn states(&self) -> u32 {
        self.states
    }

    pub fn neighborhood(&self) -> &[Offset] {
        &self.neighborhood
    }

    pub fn arity(&self) -> usize {
        self.neighborhood.len()
    }

    pub fn table(&self) -> &[State] {
        &self.table
    }

    /// `f(s_1, …, s_n)`.
    pub fn apply_local(&self, neighbor_states: &[State]) -> Result<State, CaError> {
        if neighbor_states.len() != self.arity() {
            return Err(CaError::Arity {
                expected: self.arity(),
                found: neighbor_states.len(),
            });
        }
        if let Some(&value) = neighbor_states.iter().find(|&&s| s >= self.states) {
            return Err(CaError::StateOutOfRange {
                value,
                states: self.states,
            });
        }
        Ok(self.table[encode_neighbors(neighbor_states, self.states)])
    }

    /// Table lookup by neighbor code; `code < q^n` is the caller's contract.
    #[inline]
    pub(crate) fn lookup(&self, code: usize) -> State {
        self.table[code]
    }

    /// Sides of the tightest box containing the neighborhood.
    pub fn bounding_sides(&self) -> MultiIndex {
        bounding_sides(&self.neighborhood).expect("neighborhood validated at construction")
    }
}

fn table_len(states: u32, arity: usize) -> Result<usize, CaError> {
    u32::try_from(arity)
        .ok()
        .and_then(|a| (states as usize).checked_pow(a))
        .filter(|&len| len <= 1 << 28)
        .ok_or(CaError::TableTooLarge { states, arity })
}

/// `Σ s_i·q^{n-i}`: the first neighbor is the most significant digit.
pub fn encode_neighbors(states: &[State], q: u32) -> usize {
    states
        .iter()
        .fold(0usize, |acc, &s| acc * q as usize + s as usize)
}

pub fn decode_neighbors(mut code: usize, q: u32, n: usize) -> Vec<State> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = (code % q as usize) as State;
        code /= q as usize;
    }
    out
}

/// `r_i = max_i - min_i + 1` over the offsets' i-th components.
pub fn bounding_sides(neighborhood: &[Offset]) -> Result<MultiIndex, CaError> {
    let first = neighborhood.first().ok_or(CaError::EmptyNeighborhood)?;
    let sides = (0..first.len())
        .map(|i| {
            let (lo, hi) = neighborhood
                .iter()
                .fold((i64::MAX, i64::MIN), |(lo, hi), o| (lo.min(o[i]), hi.max(o[i])));
            (hi - lo + 1) as u64
        })
        .collect();
    Ok(MultiIndex::new(sides).expect("spans are positive"))
}

/// `∏_i {origin_i, …, origin_i + sides_i - 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RightPolytope {
    pub origin: Vec<i64>,
    pub sides: MultiIndex,
}

impl RightPolytope {
    /// `E(x_1, …, x_d)`, anchored at the origin.
    pub fn at_origin(sides: MultiIndex) -> Self {
        RightPolytope {
            origin: vec![0; sides.dim()],
            sides,
        }
    }

    pub fn dim(&self) -> usize {
        self.sides.dim()
    }

    pub fn volume(&self) -> u64 {
        self.sides.volume()
    }

    /// Cells in row-major order (first axis slowest).
    pub fn cells(&self) -> Vec<Vec<i64>> {
        self.sides
            .boxes_below()
            .into_iter()
            .map(|b| {
                b.coords()
                    .iter()
                    .zip(&self.origin)
                    .map(|(&c, &o)| o + c as i64 - 1)
                    .collect()
            })
            .collect()
    }

    pub fn contains(&self, cell: &[i64]) -> bool {
        cell.len() == self.dim()
            && cell
                .iter()
                .zip(&self.origin)
                .zip(self.sides.coords())
                .all(|((&c, &o), &s)| c >= o && c < o + s as i64)
    }
}

pub fn translate_support(support: &RightPolytope, by: &[i64]) -> Result<RightPolytope, CaError> {
    if by.len() != support.dim() {
        return Err(CaError::DimensionMismatch {
            expected: support.dim(),
            found: by.len(),
        });
    }
    Ok(RightPolytope {
        origin: support.origin.iter().zip(by).map(|(o, b)| o + b).collect(),
        sides: support.sides.clone(),
    })
}

/// A finite set of cells, sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellSet {
    cells: Vec<Vec<i64>>,
}

impl CellSet {
    pub fn new(mut cells: Vec<Vec<i64>>) -> Self {
        cells.sort();
        cells.dedup();
        CellSet { cells }
    }

    pub fn cells(&self) -> &[Vec<i64>] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn index_of(&self, cell: &[i64]) -> Option<usize> {
        self.cells
            .binary_search_by(|c| c.as_slice().cmp(cell))
            .ok()
    }

    /// Tightest box around the set.
    pub fn hull(&self) -> Option<RightPolytope> {
        let first = self.cells.first()?;
        let d = first.len();
        let mut lo = first.clone();
        let mut hi = first.clone();
        for c in &self.cells {
            for i in 0..d {
                lo[i] = lo[i].min(c[i]);
                hi[i] = hi[i].max(c[i]);
            }
        }
        let sides = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as u64).collect();
        Some(RightPolytope {
            origin: lo,
            sides: MultiIndex::new(sides).expect("positive spans"),
        })
    }
}

/// The exact set `E + N = {x + ν}`.
pub fn minkowski_sum(support: &RightPolytope, neighborhood: &[Offset]) -> CellSet {
    let mut cells = Vec::with_capacity(support.volume() as usize * neighborhood.len());
    for x in support.cells() {
        for nu in neighborhood {
            cells.push(x.iter().zip(nu).map(|(a, b)| a + b).collect());
        }
    }
    CellSet::new(cells)
}

/// States on the cells of a rectangular support, in row-major order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    support: RightPolytope,
    states: u32,
    cells: Vec<State>,
}

impl Pattern {
    pub fn new(support: RightPolytope, states: u32, cells: Vec<State>) -> Result<Self, CaError> {
        let expected = support.volume() as usize;
        if cells.len() != expected {
            return Err(CaError::CellCount {
                expected,
                found: cells.len(),
            });
        }
        if let Some(&value) = cells.iter().find(|&&c| c >= states) {
            return Err(CaError::StateOutOfRange { value, states });
        }
        Ok(Pattern {
            support,
            states,
            cells,
        })
    }

    /// Inverse of [`Pattern::code`]. Codes at or above `q^volume` are
    /// rejected.
    pub fn from_code(support: RightPolytope, states: u32, code: &BigUint) -> Result<Self, CaError> {
        let volume = support.volume() as usize;
        let mut rest = code.clone();
        let q = BigUint::from(states);
        let mut cells = vec![0; volume];
        for slot in cells.iter_mut().rev() {
            *slot = (&rest % &q).to_u32().expect("digit < q");
            rest /= &q;
        }
        if !rest.is_zero() {
            return Err(CaError::StateOutOfRange {
                value: State::MAX,
                states,
            });
        }
        Ok(Pattern {
            support,
            states,
            cells,
        })
    }

    pub(crate) fn from_u64_code(support: RightPolytope, states: u32, mut code: u64) -> Self {
        let volume = support.volume() as usize;
        let mut cells = vec![0; volume];
        for slot in cells.iter_mut().rev() {
            *slot = (code % states as u64) as State;
            code /= states as u64;
        }
        Pattern {
            support,
            states,
            cells,
        }
    }

    pub fn support(&self) -> &RightPolytope {
        &self.support
    }

    pub fn states(&self) -> u32 {
        self.states
    }

    pub fn cells(&self) -> &[State] {
        &self.cells
    }

    /// `Σ cells[k]·q^{volume-1-k}`.
    pub fn code(&self) -> BigUint {
        let q = BigUint::from(self.states);
        self.cells
            .iter()
            .fold(BigUint::zero(), |acc, &c| acc * &q + BigUint::from(c))
    }

    /// Rows along the last axis; a 1D pattern is a single row.
    pub fn rows(&self) -> Vec<&[State]> {
        let width = *self.support.sides.coords().last().expect("d ≥ 1") as usize;
        self.cells.chunks(width).collect()
    }
}

/// States on an arbitrary finite cell set, aligned with `support.cells()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellPattern {
    pub support: CellSet,
    pub cells: Vec<State>,
}

/// `F_E`: applies the local rule at every cell of `support`, reading the
/// input over exactly `support + N`.
pub fn induced_map(
    ca: &CellularAutomaton,
    support: &RightPolytope,
    input: &CellPattern,
) -> Result<Pattern, CaError> {
    if support.dim() != ca.dim() {
        return Err(CaError::DimensionMismatch {
            expected: ca.dim(),
            found: support.dim(),
        });
    }
    if input.support != minkowski_sum(support, ca.neighborhood()) {
        return Err(CaError::SupportMismatch);
    }
    if input.cells.len() != input.support.len() {
        return Err(CaError::CellCount {
            expected: input.support.len(),
            found: input.cells.len(),
        });
    }
    let mut neighbors = vec![0; ca.arity()];
    let mut out = Vec::with_capacity(support.volume() as usize);
    for x in support.cells() {
        for (slot, nu) in neighbors.iter_mut().zip(ca.neighborhood()) {
            let cell: Vec<i64> = x.iter().zip(nu).map(|(a, b)| a + b).collect();
            *slot = input.cells[input.support.index_of(&cell).expect("cell of E+N")];
        }
        out.push(ca.apply_local(&neighbors)?);
    }
    Pattern::new(support.clone(), ca.states(), out)
}
