//! Adversarial tournament families and their closed-form recursions.

use crate::draw::Draw;
use crate::error::{Error, Result};
use crate::matrix::{ComparisonMatrix, PlayerId};
use crate::scalar::Scalar;
use crate::winprob::win_probabilities;

/// Spawner of every position after `rounds` spawning iterations, starting
/// from a single player. Each iteration inserts, immediately right of every
/// current player, a new player spawned by it. Position 0 has no spawner.
pub fn spawn_parents(rounds: u32) -> Vec<Option<usize>> {
    // (id, spawner id) in left-to-right order; ids are creation order
    let mut seq: Vec<(usize, Option<usize>)> = vec![(0, None)];
    let mut next_id = 1;
    for _ in 0..rounds {
        let mut grown = Vec::with_capacity(seq.len() * 2);
        for &(id, parent) in &seq {
            grown.push((id, parent));
            grown.push((next_id, Some(id)));
            next_id += 1;
        }
        seq = grown;
    }
    let mut position = vec![0; seq.len()];
    for (pos, &(id, _)) in seq.iter().enumerate() {
        position[id] = pos;
    }
    seq.iter()
        .map(|&(_, parent)| parent.map(|p| position[p]))
        .collect()
}

/// The hard tournament: players numbered by final spawn position; everyone
/// beats all players to their left except their own spawner, who beats them.
pub fn gen_hard<T: Scalar>(rounds: u32) -> Result<ComparisonMatrix<T>> {
    if rounds == 0 {
        return Err(Error::Parameter("hard tournament needs n >= 1".into()));
    }
    let parents = spawn_parents(rounds);
    // upper(i, j), i < j: P_ij = 1 iff i spawned j
    ComparisonMatrix::from_upper(rounds, |i, j| {
        if parents[j] == Some(i) {
            T::one()
        } else {
            T::zero()
        }
    })
}

/// The unbalanced tournament: a hard tournament on the first half plus added
/// players who lose to player 1 and beat players 2..=N/2. Among the added
/// players the higher number wins.
pub fn gen_unbalanced<T: Scalar>(rounds: u32) -> Result<ComparisonMatrix<T>> {
    if rounds < 2 {
        return Err(Error::Parameter("unbalanced tournament needs n >= 2".into()));
    }
    let half = 1usize << (rounds - 1);
    let hard = gen_hard::<T>(rounds - 1)?;
    ComparisonMatrix::from_upper(rounds, |i, j| match (i < half, j < half) {
        (true, true) => hard.at(i, j),
        (true, false) if i == 0 => T::one(),
        (true, false) => T::zero(),
        _ => T::zero(),
    })
}

/// A field where each of the upper half ("big") beats each of the lower half
/// ("small") with the same probability `p`; intra-group matches are even.
#[derive(Debug, Clone)]
pub struct BigSmallInstance<T> {
    pub rounds: u32,
    pub p: T,
    pub matrix: ComparisonMatrix<T>,
}

impl<T: Scalar> BigSmallInstance<T> {
    pub fn is_big(&self, player: PlayerId) -> bool {
        player.index() > self.matrix.size() / 2
    }

    pub fn big(&self) -> Vec<PlayerId> {
        let n = self.matrix.size();
        (n / 2..n).map(PlayerId::from_zero_based).collect()
    }

    pub fn small(&self) -> Vec<PlayerId> {
        (0..self.matrix.size() / 2).map(PlayerId::from_zero_based).collect()
    }

    /// Probability that some big player wins under `draw`.
    pub fn big_win_probability(&self, draw: &Draw) -> Result<T> {
        let wp = win_probabilities(&self.matrix, draw)?;
        let half = self.matrix.size() / 2;
        Ok(wp[half..].iter().copied().sum())
    }

    /// Whether every first-round match pits a big player against a small one.
    pub fn is_mixed(&self, draw: &Draw) -> bool {
        draw.leaves()
            .chunks(2)
            .all(|pair| self.is_big(pair[0]) != self.is_big(pair[1]))
    }
}

pub fn gen_bigsmall<T: Scalar>(rounds: u32, p: T) -> Result<BigSmallInstance<T>> {
    if !(p > T::lit(0.5) && p < T::one()) {
        return Err(Error::Parameter(format!("p = {p} must lie in (0.5, 1)")));
    }
    if rounds == 0 {
        return Err(Error::Parameter("big vs small tournament needs n >= 1".into()));
    }
    let half = 1usize << (rounds - 1);
    let matrix = ComparisonMatrix::from_upper(rounds, |i, j| {
        if i < half && j >= half {
            T::one() - p
        } else {
            T::lit(0.5)
        }
    })?;
    Ok(BigSmallInstance { rounds, p, matrix })
}

/// Groups of the three-tier field over 2^(rounds+1) players (zero-based):
/// player 0, small `1..2^n`, medium `2^n..2^n + 2^(n-1)`, big the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tier {
    Favourite,
    Small,
    Medium,
    Big,
}

fn tier(n: u32, i: usize) -> Tier {
    let small_end = 1usize << n;
    let medium_end = small_end + (1usize << (n - 1));
    match i {
        0 => Tier::Favourite,
        _ if i < small_end => Tier::Small,
        _ if i < medium_end => Tier::Medium,
        _ => Tier::Big,
    }
}

/// The three-tier tournament over 2^(n+1) players, n >= 2, 0 < eps < 0.5:
/// player 1 beats small players surely, medium ones with 0.4 and big ones
/// with 0.6; small players lose to everyone else; medium beats big with
/// `0.5 - eps/2`; intra-group matches are even.
pub fn gen_threetier<T: Scalar>(n: u32, eps: T) -> Result<ComparisonMatrix<T>> {
    if n < 2 {
        return Err(Error::Parameter("three-tier tournament needs n >= 2".into()));
    }
    if !(eps > T::zero() && eps < T::lit(0.5)) {
        return Err(Error::Parameter(format!("eps = {eps} must lie in (0, 0.5)")));
    }
    let half = T::lit(0.5);
    ComparisonMatrix::from_upper(n + 1, |i, j| match (tier(n, i), tier(n, j)) {
        (Tier::Favourite, Tier::Small) => T::one(),
        (Tier::Favourite, Tier::Medium) => T::lit(0.4),
        (Tier::Favourite, Tier::Big) => T::lit(0.6),
        (Tier::Small, Tier::Medium | Tier::Big) => T::zero(),
        (Tier::Medium, Tier::Big) => half - eps / T::lit(2.0),
        _ => half,
    })
}

/// Turns every 0/1 entry into eps / 1 - eps; interior entries are unchanged.
pub fn uniform_perturbation<T: Scalar>(matrix: &ComparisonMatrix<T>, eps: T) -> Result<ComparisonMatrix<T>> {
    if !(eps > T::zero() && eps < T::lit(0.5)) {
        return Err(Error::Parameter(format!("eps = {eps} must lie in (0, 0.5)")));
    }
    ComparisonMatrix::from_upper(matrix.rounds(), |i, j| {
        let v = matrix.at(i, j);
        if v == T::zero() {
            eps
        } else if v == T::one() {
            T::one() - eps
        } else {
            v
        }
    })
}

/// `p_k`: chance that the winner of a k-round hard subtournament still wins
/// its first k rounds once every match is softened to (eps, 1 - eps).
pub fn hard_path_probability<T: Scalar>(k: u32, eps: T) -> Result<T> {
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    let mut p = T::one() - eps;
    for _ in 1..k {
        p = p * (p * (T::one() - eps) + (T::one() - p) * eps);
    }
    Ok(p)
}

/// `e_k`: chance a big player wins a k-round mixed big vs small tournament
/// with big-beats-small probability 0.5 + eps.
pub fn bigsmall_even_probability<T: Scalar>(k: u32, eps: T) -> Result<T> {
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let mut e = half + eps;
    for _ in 1..k {
        e = two * e * (T::one() - e) * (half + eps) + e * e;
    }
    Ok(e)
}

/// Chance a big player wins a bracket whose halves are won by big players
/// with probabilities `l` and `r`: `p(l + r) + (1 - 2p) l r`.
pub fn compose_big_win<T: Scalar>(l: T, r: T, p: T) -> T {
    p * (l + r) + (T::one() - p - p) * l * r
}
