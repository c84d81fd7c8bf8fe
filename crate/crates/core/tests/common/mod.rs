#![allow(dead_code)]

use fekete_ca::automaton::{CellularAutomaton, Offset};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The 16 binary rules on the neighborhood `{0, 1}`.
pub fn elementary_pairs() -> Vec<CellularAutomaton> {
    (0u32..16)
        .map(|bits| {
            let table = (0..4).map(|i| (bits >> i) & 1).collect();
            CellularAutomaton::new(1, 2, vec![vec![0], vec![1]], table).unwrap()
        })
        .collect()
}

/// `count` seeded one-dimensional rules with `q ∈ {2, 3}` and one to three
/// distinct offsets from `-1..=1`, in random order.
pub fn random_rules(count: usize, seed: u64) -> Vec<CellularAutomaton> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let q: u32 = rng.gen_range(2..=3);
            let n: usize = rng.gen_range(1..=3);
            let mut offsets: Vec<Offset> = vec![vec![-1], vec![0], vec![1]];
            offsets.shuffle(&mut rng);
            offsets.truncate(n);
            let table = (0..q.pow(n as u32)).map(|_| rng.gen_range(0..q)).collect();
            CellularAutomaton::new(1, q, offsets, table).unwrap()
        })
        .collect()
}

pub const CORPUS_SEED: u64 = 0;

pub fn corpus() -> Vec<CellularAutomaton> {
    let mut all = elementary_pairs();
    all.extend(random_rules(100, CORPUS_SEED));
    all
}
