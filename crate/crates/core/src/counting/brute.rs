//! Exhaustive enumeration of `F_E` over all inputs on `E + N`.
//!
//! Inputs are visited in canonical code order, split into contiguous ranges
//! for parallel workers. Within a range an odometer advances the input; only
//! the outputs that read a changed cell are recomputed, which keeps the
//! amortized cost near `n` lookups per input. Each worker records images in
//! a local set; sets are merged by union.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use super::CountError;
use crate::automaton::{minkowski_sum, CellularAutomaton, RightPolytope};

/// Output spaces up to this size use a dense bitmap.
const BITMAP_LIMIT: u64 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageStore {
    Bitmap,
    SortedMerge,
}

pub(crate) enum ImageSet {
    Bitmap { words: Vec<u64>, possible: u64 },
    Sorted { codes: Vec<u64>, possible: u64 },
}

impl ImageSet {
    pub(crate) fn count(&self) -> u64 {
        match self {
            ImageSet::Bitmap { words, .. } => words.iter().map(|w| w.count_ones() as u64).sum(),
            ImageSet::Sorted { codes, .. } => codes.len() as u64,
        }
    }

    pub(crate) fn store(&self) -> ImageStore {
        match self {
            ImageSet::Bitmap { .. } => ImageStore::Bitmap,
            ImageSet::Sorted { .. } => ImageStore::SortedMerge,
        }
    }

    pub(crate) fn contains(&self, code: &BigUint) -> bool {
        let Some(code) = code.to_u64() else {
            return false;
        };
        match self {
            ImageSet::Bitmap { words, possible } => {
                code < *possible && words[(code / 64) as usize] & (1 << (code % 64)) != 0
            }
            ImageSet::Sorted { codes, .. } => codes.binary_search(&code).is_ok(),
        }
    }

    /// Smallest code in `0..possible` that is not an image.
    pub(crate) fn first_missing(&self) -> Option<u64> {
        match self {
            ImageSet::Bitmap { words, possible } => words
                .iter()
                .enumerate()
                .find(|(_, &w)| w != u64::MAX)
                .map(|(i, &w)| i as u64 * 64 + (!w).trailing_zeros() as u64)
                .filter(|&c| c < *possible),
            ImageSet::Sorted { codes, possible } => {
                let gap = codes
                    .iter()
                    .enumerate()
                    .find(|(i, &c)| c != *i as u64)
                    .map(|(i, _)| i as u64)
                    .unwrap_or(codes.len() as u64);
                (gap < *possible).then_some(gap)
            }
        }
    }
}

/// Precomputed gather plan for one support.
struct Plan<'a> {
    ca: &'a CellularAutomaton,
    q: u64,
    inputs: usize,
    outputs: usize,
    /// `gather[k * n + i]` is the input index of neighbor `i` of output `k`.
    gather: Vec<usize>,
    /// Smallest output index reading an input cell at index ≥ p.
    first_affected: Vec<usize>,
}

impl<'a> Plan<'a> {
    fn new(ca: &'a CellularAutomaton, support: &RightPolytope) -> Self {
        let sum = minkowski_sum(support, ca.neighborhood());
        let n = ca.arity();
        let cells = support.cells();
        let mut gather = Vec::with_capacity(cells.len() * n);
        for x in &cells {
            for nu in ca.neighborhood() {
                let y: Vec<i64> = x.iter().zip(nu).map(|(a, b)| a + b).collect();
                gather.push(sum.index_of(&y).expect("E+N contains x+ν"));
            }
        }
        let inputs = sum.len();
        let mut first_affected = vec![cells.len(); inputs + 1];
        for k in (0..cells.len()).rev() {
            let max_read = gather[k * n..(k + 1) * n].iter().copied().max().unwrap_or(0);
            for slot in first_affected.iter_mut().take(max_read + 1) {
                *slot = (*slot).min(k);
            }
        }
        Plan {
            ca,
            q: ca.states() as u64,
            inputs,
            outputs: cells.len(),
            gather,
            first_affected,
        }
    }

    #[inline]
    fn output(&self, k: usize, digits: &[u32]) -> u32 {
        let n = self.ca.arity();
        let code = self.gather[k * n..(k + 1) * n]
            .iter()
            .fold(0usize, |acc, &i| acc * self.q as usize + digits[i] as usize);
        self.ca.lookup(code)
    }

    /// Calls `sink` with the image code of every input in `start..end`.
    fn run(&self, start: u64, end: u64, mut sink: impl FnMut(u64)) {
        if start >= end {
            return;
        }
        let mut digits = vec![0u32; self.inputs];
        let mut rest = start;
        for d in digits.iter_mut().rev() {
            *d = (rest % self.q) as u32;
            rest /= self.q;
        }
        // prefix[k + 1] is the code of outputs 0..=k
        let mut prefix = vec![0u64; self.outputs + 1];
        let mut from = 0;
        let mut code = start;
        loop {
            for k in from..self.outputs {
                prefix[k + 1] = prefix[k] * self.q + self.output(k, &digits) as u64;
            }
            sink(prefix[self.outputs]);
            code += 1;
            if code == end {
                return;
            }
            let mut p = self.inputs - 1;
            while digits[p] as u64 == self.q - 1 {
                digits[p] = 0;
                p -= 1;
            }
            digits[p] += 1;
            from = self.first_affected[p];
        }
    }
}

fn merge_sorted(a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let next = a[i].min(b[j]);
        if a[i] == next {
            i += 1;
        }
        if b[j] == next {
            j += 1;
        }
        out.push(next);
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

pub(crate) fn image_set(
    ca: &CellularAutomaton,
    support: &RightPolytope,
    budget: u64,
) -> Result<ImageSet, CountError> {
    image_set_with(ca, support, budget, BITMAP_LIMIT)
}

fn image_set_with(
    ca: &CellularAutomaton,
    support: &RightPolytope,
    budget: u64,
    bitmap_limit: u64,
) -> Result<ImageSet, CountError> {
    let plan = Plan::new(ca, support);
    let q = BigUint::from(ca.states());
    let cost = num_traits::pow::Pow::pow(&q, plan.inputs as u64);
    let total = match cost.to_u64() {
        Some(c) if c <= budget => c,
        _ => {
            return Err(CountError::BudgetExceeded {
                sides: support.sides.clone(),
                cost,
                budget,
            })
        }
    };
    // images never outnumber inputs, and q^|E| ≤ q^|E+N|
    let possible = (ca.states() as u64).pow(plan.outputs as u32);

    let chunk_count = (rayon::current_num_threads() as u64 * 8).clamp(1, total.div_ceil(4096));
    let chunk_len = total.div_ceil(chunk_count);
    let ranges: Vec<(u64, u64)> = (0..chunk_count)
        .map(|c| (c * chunk_len, ((c + 1) * chunk_len).min(total)))
        .collect();

    if possible <= bitmap_limit {
        let words_len = possible.div_ceil(64) as usize;
        let words = ranges
            .par_iter()
            .fold(
                || vec![0u64; words_len],
                |mut words, &(start, end)| {
                    plan.run(start, end, |code| words[(code / 64) as usize] |= 1 << (code % 64));
                    words
                },
            )
            .reduce(
                || vec![0u64; words_len],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x |= y);
                    a
                },
            );
        Ok(ImageSet::Bitmap { words, possible })
    } else {
        let codes = ranges
            .par_iter()
            .map(|&(start, end)| {
                let mut local = Vec::new();
                plan.run(start, end, |code| local.push(code));
                local.sort_unstable();
                local.dedup();
                local
            })
            .reduce(Vec::new, merge_sorted);
        Ok(ImageSet::Sorted { codes, possible })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{induced_map, CellPattern};
    use crate::index::MultiIndex;
    use std::collections::BTreeSet;

    /// Image codes through the reference `induced_map`, one input at a time.
    fn reference_images(ca: &CellularAutomaton, support: &RightPolytope) -> BTreeSet<u64> {
        let sum = minkowski_sum(support, ca.neighborhood());
        let q = ca.states() as u64;
        let total = q.pow(sum.len() as u32);
        (0..total)
            .map(|mut code| {
                let mut cells = vec![0; sum.len()];
                for c in cells.iter_mut().rev() {
                    *c = (code % q) as u32;
                    code /= q;
                }
                let input = CellPattern {
                    support: sum.clone(),
                    cells,
                };
                induced_map(ca, support, &input).unwrap().code().to_u64().unwrap()
            })
            .collect()
    }

    #[test]
    fn incremental_enumeration_matches_reference() {
        let rule = CellularAutomaton::from_rule(
            2,
            3,
            vec![vec![0, 0], vec![1, -1], vec![-1, 1]],
            |s| (s[0] * 2 + s[1] + s[1] * s[2]) % 3,
        )
        .unwrap();
        let support = RightPolytope::at_origin(MultiIndex::new(vec![2, 2]).unwrap());
        let expected = reference_images(&rule, &support);
        let got = image_set(&rule, &support, u64::MAX).unwrap();
        assert_eq!(got.count(), expected.len() as u64);
        for code in 0..81u64 {
            assert_eq!(got.contains(&BigUint::from(code)), expected.contains(&code));
        }
    }

    #[test]
    fn run_covers_partial_ranges() {
        let and = CellularAutomaton::builtin("and1d").unwrap();
        let plan = Plan::new(&and, &RightPolytope::at_origin(MultiIndex::new(vec![3]).unwrap()));
        let mut all = Vec::new();
        plan.run(0, 16, |c| all.push(c));
        let mut pieces = Vec::new();
        for (s, e) in [(0, 5), (5, 6), (6, 16)] {
            plan.run(s, e, |c| pieces.push(c));
        }
        assert_eq!(all, pieces);
        // input 1011 → 001
        assert_eq!(all[0b1011], 0b001);
    }

    #[test]
    fn sorted_store_agrees_with_bitmap() {
        let a = vec![0, 1, 3, 7];
        let b = vec![1, 2, 7, 9];
        assert_eq!(merge_sorted(a, b), vec![0, 1, 2, 3, 7, 9]);
        let sorted = ImageSet::Sorted {
            codes: vec![0, 1, 2, 4],
            possible: 8,
        };
        assert_eq!(sorted.first_missing(), Some(3));
        let full = ImageSet::Sorted {
            codes: vec![0, 1],
            possible: 2,
        };
        assert_eq!(full.first_missing(), None);
        let mut words = vec![0u64; 1];
        for c in [0u64, 1, 2, 4] {
            words[0] |= 1 << c;
        }
        let bitmap = ImageSet::Bitmap { words, possible: 8 };
        assert_eq!(bitmap.first_missing(), Some(3));
        assert_eq!(bitmap.count(), 4);
    }

    #[test]
    fn sorted_merge_path_agrees_with_bitmap_path() {
        for name in ["and1d", "xor1d", "shift"] {
            let ca = CellularAutomaton::builtin(name).unwrap();
            for n in 1..=14 {
                let support = RightPolytope::at_origin(MultiIndex::new(vec![n]).unwrap());
                let dense = image_set_with(&ca, &support, u64::MAX, BITMAP_LIMIT).unwrap();
                let sorted = image_set_with(&ca, &support, u64::MAX, 0).unwrap();
                assert_eq!(dense.store(), ImageStore::Bitmap);
                assert_eq!(sorted.store(), ImageStore::SortedMerge);
                assert_eq!(dense.count(), sorted.count());
                assert_eq!(dense.first_missing(), sorted.first_missing());
            }
        }
    }
}
