#![allow(dead_code)]

use knockout::{ComparisonMatrix, Draw, Matrix, PlayerId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn pid(i: usize) -> PlayerId {
    PlayerId::new(i).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Upper-triangle entries uniform in `[lo, hi]`.
pub fn random_matrix(rounds: u32, lo: f64, hi: f64, seed: u64) -> Matrix {
    let mut r = rng(seed);
    ComparisonMatrix::from_upper(rounds, |_, _| r.gen_range(lo..=hi)).unwrap()
}

pub fn random_deterministic(rounds: u32, seed: u64) -> Matrix {
    let mut r = rng(seed);
    ComparisonMatrix::from_upper(rounds, |_, _| if r.gen_bool(0.5) { 1.0 } else { 0.0 }).unwrap()
}

pub fn random_permutation(size: usize, seed: u64) -> Draw {
    let mut leaves: Vec<usize> = (1..=size).collect();
    leaves.shuffle(&mut rng(seed));
    Draw::new(leaves).unwrap()
}

/// Reference shape of a draw: each subtree rendered with its two children
/// sorted as strings. Equal shapes mean isomorphic brackets.
pub fn shape(leaves: &[usize]) -> String {
    if leaves.len() == 1 {
        return format!("{:03}", leaves[0]);
    }
    let half = leaves.len() / 2;
    let mut kids = [shape(&leaves[..half]), shape(&leaves[half..])];
    kids.sort();
    format!("[{},{}]", kids[0], kids[1])
}

pub fn factorial(n: u128) -> u128 {
    (1..=n).product()
}
