//! Image automaton of a one-dimensional rule and its subset construction.
//!
//! With neighborhood span `m`, the states are the `q^{m-1}` overlap words.
//! Reading one more input symbol `c` after overlap `u` forms a window
//! `w = u·c` of length `m`; the edge goes to the last `m-1` symbols of `w`
//! and is labeled with the rule's output on `w`. Label words of length `n`
//! along paths are exactly the reachable patterns on `n` cells, so
//! determinizing from the full state set counts them without repetition,
//! and reaching the empty subset exhibits an orphan word.

use std::collections::{HashMap, VecDeque};

use num_bigint::BigUint;
use num_traits::Zero;

use super::{full_size, CountError, Method, OrphanCertificate, OutRecord};
use crate::automaton::{CellularAutomaton, Pattern, RightPolytope, State};
use crate::index::MultiIndex;

/// Largest overlap-state space we build.
const MAX_OVERLAP_STATES: usize = 1 << 20;

#[derive(Debug, Clone)]
pub struct ImageAutomaton {
    states: u32,
    span: usize,
    overlaps: usize,
    /// `edges[u * q + c] = (label, target)`.
    edges: Vec<(State, usize)>,
}

impl ImageAutomaton {
    pub fn new(ca: &CellularAutomaton) -> Result<Self, CountError> {
        if ca.dim() != 1 {
            return Err(CountError::NotOneDimensional(ca.dim()));
        }
        let q = ca.states() as usize;
        let lo = ca.neighborhood().iter().map(|o| o[0]).min().expect("nonempty");
        let span = ca.bounding_sides().get(0) as usize;
        let overlaps = u32::try_from(span - 1)
            .ok()
            .and_then(|e| q.checked_pow(e))
            .filter(|&s| s <= MAX_OVERLAP_STATES)
            .ok_or_else(|| CountError::AutomatonTooLarge {
                needed: format!("{q}^{}", span - 1),
                limit: MAX_OVERLAP_STATES,
            })?;
        let positions: Vec<usize> = ca
            .neighborhood()
            .iter()
            .map(|o| (o[0] - lo) as usize)
            .collect();
        let mut window = vec![0u32; span];
        let mut neighbors = vec![0u32; positions.len()];
        let mut edges = Vec::with_capacity(overlaps * q);
        for w in 0..overlaps * q {
            let mut rest = w;
            for slot in window.iter_mut().rev() {
                *slot = (rest % q) as u32;
                rest /= q;
            }
            for (slot, &p) in neighbors.iter_mut().zip(&positions) {
                *slot = window[p];
            }
            let label = ca.apply_local(&neighbors).expect("states in range");
            edges.push((label, w % overlaps));
        }
        Ok(ImageAutomaton {
            states: ca.states(),
            span,
            overlaps,
            edges,
        })
    }

    pub fn span(&self) -> usize {
        self.span
    }

    pub fn overlap_states(&self) -> usize {
        self.overlaps
    }

    fn step(&self, subset: &[u64], words: usize) -> Vec<Vec<u64>> {
        let q = self.states as usize;
        let mut next = vec![vec![0u64; words]; q];
        for (wi, &word) in subset.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let u = wi * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                for &(label, v) in &self.edges[u * q..(u + 1) * q] {
                    next[label as usize][v / 64] |= 1 << (v % 64);
                }
            }
        }
        next
    }
}

/// Reachable part of the determinized image automaton, explored
/// breadth-first from the full overlap set with labels in increasing order.
#[derive(Debug, Clone)]
pub struct SubsetDfa {
    states: u32,
    /// `transitions[s][b]`: successor of subset `s` on label `b`; `None` is
    /// the empty subset.
    transitions: Vec<Vec<Option<usize>>>,
    parent: Vec<Option<(usize, State)>>,
    /// First `(subset, label)` in BFS order whose successor is empty.
    first_dead: Option<(usize, State)>,
}

impl SubsetDfa {
    pub fn explore(automaton: &ImageAutomaton, max_subsets: usize) -> Result<Self, CountError> {
        let words = automaton.overlaps.div_ceil(64);
        let mut full = vec![0u64; words];
        for u in 0..automaton.overlaps {
            full[u / 64] |= 1 << (u % 64);
        }
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut subsets = vec![full.clone()];
        index.insert(full, 0);
        let mut transitions = Vec::new();
        let mut parent = vec![None];
        let mut first_dead = None;
        let mut queue = VecDeque::from([0usize]);
        while let Some(s) = queue.pop_front() {
            let successors = automaton.step(&subsets[s], words);
            let mut row = Vec::with_capacity(successors.len());
            for (label, next) in successors.into_iter().enumerate() {
                if next.iter().all(|&w| w == 0) {
                    if first_dead.is_none() {
                        first_dead = Some((s, label as State));
                    }
                    row.push(None);
                    continue;
                }
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        let id = subsets.len();
                        if id >= max_subsets {
                            return Err(CountError::SubsetBlowup { limit: max_subsets });
                        }
                        index.insert(next.clone(), id);
                        subsets.push(next);
                        parent.push(Some((s, label as State)));
                        queue.push_back(id);
                        id
                    }
                };
                row.push(Some(id));
            }
            // BFS pops subsets in creation order
            debug_assert_eq!(transitions.len(), s);
            transitions.push(row);
        }
        Ok(SubsetDfa {
            states: automaton.states,
            transitions,
            parent,
            first_dead,
        })
    }

    pub fn subset_count(&self) -> usize {
        self.transitions.len()
    }

    fn word_to(&self, mut s: usize) -> Vec<State> {
        let mut word = Vec::new();
        while let Some((p, label)) = self.parent[s] {
            word.push(label);
            s = p;
        }
        word.reverse();
        word
    }

    /// Shortest, then lexicographically least, word with no preimage.
    pub fn shortest_orphan(&self) -> Option<Vec<State>> {
        self.first_dead.map(|(s, label)| {
            let mut word = self.word_to(s);
            word.push(label);
            word
        })
    }

    /// `Out_f(n)` for `n = 1..=n_max`: the number of label paths of length
    /// `n` from the full subset that avoid the empty subset.
    pub fn count_words(&self, n_max: u64) -> Vec<BigUint> {
        let mut counts = vec![BigUint::zero(); self.subset_count()];
        counts[0] = BigUint::from(1u32);
        let mut out = Vec::with_capacity(n_max as usize);
        for _ in 0..n_max {
            let mut next = vec![BigUint::zero(); counts.len()];
            for (s, count) in counts.iter().enumerate() {
                if count.is_zero() {
                    continue;
                }
                for target in self.transitions[s].iter().flatten() {
                    next[*target] += count;
                }
            }
            out.push(next.iter().sum());
            counts = next;
        }
        out
    }

    pub fn states(&self) -> u32 {
        self.states
    }
}

/// `Out_f(n)` for `n = 1..=n_max` through the subset construction.
pub fn out_size_transfer_1d(
    ca: &CellularAutomaton,
    n_max: u64,
    max_subsets: usize,
) -> Result<Vec<OutRecord>, CountError> {
    let dfa = SubsetDfa::explore(&ImageAutomaton::new(ca)?, max_subsets)?;
    Ok(dfa
        .count_words(n_max)
        .into_iter()
        .enumerate()
        .map(|(i, out_size)| {
            let sides = MultiIndex::new(vec![i as u64 + 1]).expect("positive");
            OutRecord {
                full_size: full_size(ca.states(), &sides),
                sides,
                states: ca.states(),
                out_size,
                method: Method::Transfer1d,
                store: None,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision1d {
    Surjective { subsets: usize },
    Nonsurjective {
        orphan: OrphanCertificate,
        subsets: usize,
    },
}

/// Decides surjectivity of a one-dimensional automaton: it is surjective iff
/// no word drives the full overlap set to the empty set.
pub fn decide_surjectivity_1d(
    ca: &CellularAutomaton,
    max_subsets: usize,
) -> Result<Decision1d, CountError> {
    let dfa = SubsetDfa::explore(&ImageAutomaton::new(ca)?, max_subsets)?;
    let subsets = dfa.subset_count();
    Ok(match dfa.shortest_orphan() {
        None => Decision1d::Surjective { subsets },
        Some(word) => {
            let sides = MultiIndex::new(vec![word.len() as u64]).expect("nonempty word");
            let pattern = Pattern::new(RightPolytope::at_origin(sides), ca.states(), word)?;
            Decision1d::Nonsurjective {
                orphan: OrphanCertificate { pattern },
                subsets,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::DEFAULT_MAX_SUBSETS;

    #[test]
    fn and1d_automaton() {
        let and = CellularAutomaton::builtin("and1d").unwrap();
        let aut = ImageAutomaton::new(&and).unwrap();
        assert_eq!(aut.span(), 2);
        assert_eq!(aut.overlap_states(), 2);
        let dfa = SubsetDfa::explore(&aut, DEFAULT_MAX_SUBSETS).unwrap();
        // {0,1}, {1}, {0}
        assert_eq!(dfa.subset_count(), 3);
        assert_eq!(dfa.shortest_orphan(), Some(vec![1, 0, 1]));
        let counts: Vec<u64> = dfa
            .count_words(6)
            .into_iter()
            .map(|c| c.try_into().unwrap())
            .collect();
        assert_eq!(counts, vec![2, 4, 7, 12, 21, 37]);
    }

    #[test]
    fn shift_has_one_overlap_state() {
        let shift = CellularAutomaton::builtin("shift").unwrap();
        let aut = ImageAutomaton::new(&shift).unwrap();
        assert_eq!(aut.overlap_states(), 1);
        let records = out_size_transfer_1d(&shift, 40, DEFAULT_MAX_SUBSETS).unwrap();
        assert!(records.iter().all(OutRecord::is_full));
        assert_eq!(
            decide_surjectivity_1d(&shift, DEFAULT_MAX_SUBSETS).unwrap(),
            Decision1d::Surjective { subsets: 1 }
        );
    }

    #[test]
    fn decisions() {
        let and = CellularAutomaton::builtin("and1d").unwrap();
        match decide_surjectivity_1d(&and, DEFAULT_MAX_SUBSETS).unwrap() {
            Decision1d::Nonsurjective { orphan, .. } => {
                assert_eq!(orphan.pattern.cells(), &[1, 0, 1]);
            }
            other => panic!("unexpected {other:?}"),
        }
        let xor = CellularAutomaton::builtin("xor1d").unwrap();
        assert!(matches!(
            decide_surjectivity_1d(&xor, DEFAULT_MAX_SUBSETS).unwrap(),
            Decision1d::Surjective { .. }
        ));
        let and2 = CellularAutomaton::builtin("and2d").unwrap();
        assert_eq!(
            decide_surjectivity_1d(&and2, DEFAULT_MAX_SUBSETS).unwrap_err(),
            CountError::NotOneDimensional(2)
        );
    }

    #[test]
    fn gapped_neighborhood() {
        // f(c(x-1), c(x+1)) = left AND right; span 3 with an unread middle cell
        let ca = CellularAutomaton::from_rule(1, 2, vec![vec![-1], vec![1]], |s| s[0] & s[1]).unwrap();
        let records = out_size_transfer_1d(&ca, 8, DEFAULT_MAX_SUBSETS).unwrap();
        for r in &records {
            let brute = crate::counting::out_size_bruteforce(&ca, &r.sides, 1 << 20).unwrap();
            assert_eq!(brute.out_size, r.out_size, "n = {}", r.sides);
        }
    }

    #[test]
    fn subset_limit_is_enforced() {
        let and = CellularAutomaton::builtin("and1d").unwrap();
        let aut = ImageAutomaton::new(&and).unwrap();
        assert_eq!(
            SubsetDfa::explore(&aut, 2).unwrap_err(),
            CountError::SubsetBlowup { limit: 2 }
        );
    }
}
