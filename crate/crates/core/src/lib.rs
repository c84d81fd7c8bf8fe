//! Exact information-loss analysis for cellular automata on finite
//! rectangular supports.
//!
//! - [`index`]: positive integer tuples under the product ordering.
//! - [`subadditive`]: multivariate Fekete limits for coordinate-wise
//!   subadditive functions.
//! - [`automaton`]: the automaton `⟨d, Q, N, f⟩` and its finite-support map.
//! - [`counting`]: exact reachable-pattern counts, orphans, and the 1D
//!   surjectivity decision.
//! - [`analysis`]: information loss, entropy brackets, thresholds, verdicts.
//! - [`cli`]: description files and the command-line front end.

pub mod analysis;
pub mod automaton;
pub mod cli;
pub mod counting;
pub mod index;
pub mod subadditive;

pub use automaton::{CellularAutomaton, Pattern, RightPolytope, State};
pub use index::MultiIndex;
