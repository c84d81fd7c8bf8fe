//! Exact reachable-pattern counts `Out_f`, orphan patterns, and the
//! one-dimensional surjectivity decision.
//!
//! Two independent routes compute `Out_f`: exhaustive enumeration of
//! `F_E` over every input on `E + N` (any dimension), and path counting in
//! the determinized image automaton (dimension 1 only).

mod brute;
mod transfer;

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Pow, Zero};
use thiserror::Error;

use crate::automaton::{minkowski_sum, CaError, CellularAutomaton, Pattern, RightPolytope};
use crate::index::MultiIndex;

pub use brute::ImageStore;
pub use transfer::{
    decide_surjectivity_1d, out_size_transfer_1d, Decision1d, ImageAutomaton, SubsetDfa,
};

/// Default cap on the number of inputs enumerated by brute force.
pub const DEFAULT_BUDGET: u64 = 1 << 30;
/// Default cap on the number of subsets explored by the subset construction.
pub const DEFAULT_MAX_SUBSETS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CountError {
    #[error(transparent)]
    Ca(#[from] CaError),
    #[error("sides {sides}: enumeration needs {cost} inputs, budget is {budget}")]
    BudgetExceeded {
        sides: MultiIndex,
        cost: BigUint,
        budget: u64,
    },
    #[error("method needs a 1-dimensional automaton, got dimension {0}")]
    NotOneDimensional(usize),
    #[error("subset construction exceeded {limit} subsets")]
    SubsetBlowup { limit: usize },
    #[error("image automaton needs {needed} overlap states, more than {limit}")]
    AutomatonTooLarge { needed: String, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    BruteForce,
    Transfer1d,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::BruteForce => "bruteforce",
            Method::Transfer1d => "transfer1d",
        })
    }
}

/// Exact `Out_f` at one support size.
#[derive(Debug, Clone, PartialEq)]
pub struct OutRecord {
    pub sides: MultiIndex,
    pub states: u32,
    pub out_size: BigUint,
    /// `q^volume`.
    pub full_size: BigUint,
    pub method: Method,
    /// How distinct images were stored; brute force only.
    pub store: Option<ImageStore>,
}

impl OutRecord {
    pub fn is_full(&self) -> bool {
        self.out_size == self.full_size
    }
}

/// A pattern with no preimage under `F_E` for its support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrphanCertificate {
    pub pattern: Pattern,
}

impl OrphanCertificate {
    pub fn sides(&self) -> &MultiIndex {
        &self.pattern.support().sides
    }

    pub fn code(&self) -> BigUint {
        self.pattern.code()
    }
}

pub fn full_size(states: u32, sides: &MultiIndex) -> BigUint {
    BigUint::from(states).pow(sides.volume())
}

/// Number of inputs brute force must enumerate: `q^{|E+N|}`.
pub fn input_cost(ca: &CellularAutomaton, sides: &MultiIndex) -> BigUint {
    let cells = minkowski_sum(&RightPolytope::at_origin(sides.clone()), ca.neighborhood()).len();
    BigUint::from(ca.states()).pow(cells as u64)
}

fn check_sides(ca: &CellularAutomaton, sides: &MultiIndex) -> Result<(), CountError> {
    if sides.dim() != ca.dim() {
        return Err(CaError::DimensionMismatch {
            expected: ca.dim(),
            found: sides.dim(),
        }
        .into());
    }
    Ok(())
}

/// `Out_f` on `E(sides)` by enumerating all `q^{|E+N|}` inputs.
pub fn out_size_bruteforce(
    ca: &CellularAutomaton,
    sides: &MultiIndex,
    budget: u64,
) -> Result<OutRecord, CountError> {
    out_size_on(ca, &RightPolytope::at_origin(sides.clone()), budget)
}

/// Brute-force count on an arbitrarily placed support.
pub fn out_size_on(
    ca: &CellularAutomaton,
    support: &RightPolytope,
    budget: u64,
) -> Result<OutRecord, CountError> {
    check_sides(ca, &support.sides)?;
    let images = brute::image_set(ca, support, budget)?;
    Ok(OutRecord {
        sides: support.sides.clone(),
        states: ca.states(),
        out_size: BigUint::from(images.count()),
        full_size: full_size(ca.states(), &support.sides),
        method: Method::BruteForce,
        store: Some(images.store()),
    })
}

/// The orphan with the smallest canonical code at `sides`, if any.
pub fn find_orphan(
    ca: &CellularAutomaton,
    sides: &MultiIndex,
    budget: u64,
) -> Result<Option<OrphanCertificate>, CountError> {
    check_sides(ca, sides)?;
    let support = RightPolytope::at_origin(sides.clone());
    let images = brute::image_set(ca, &support, budget)?;
    Ok(images.first_missing().map(|code| OrphanCertificate {
        pattern: Pattern::from_u64_code(support, ca.states(), code),
    }))
}

/// Re-enumerates `F_E` at the certificate's size and confirms the pattern
/// is never produced.
pub fn verify_orphan(
    ca: &CellularAutomaton,
    certificate: &OrphanCertificate,
    budget: u64,
) -> Result<bool, CountError> {
    let support = RightPolytope::at_origin(certificate.sides().clone());
    let images = brute::image_set(ca, &support, budget)?;
    let code = certificate.code();
    Ok(!images.contains(&code))
}

/// `Some(k)` when `value = states^k`.
pub(crate) fn is_power_of(value: &BigUint, states: u32) -> Option<u64> {
    if value.is_one() {
        return Some(0);
    }
    if states < 2 || value.is_zero() {
        return None;
    }
    let q = BigUint::from(states);
    // q^k has between k·log2(q) and k·log2(q) + 1 bits
    let guess = ((value.bits() - 1) as f64 / (states as f64).log2()) as u64;
    (guess.saturating_sub(1)..=guess + 1).find(|&k| k > 0 && &Pow::pow(&q, k) == value)
}
