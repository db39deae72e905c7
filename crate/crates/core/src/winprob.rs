//! Exact winning probabilities for a complete tournament.

use crate::draw::Draw;
use crate::error::{Error, Result};
use crate::matrix::{ComparisonMatrix, PlayerId};
use crate::scalar::Scalar;

/// Largest field size handled by [`wp_by_outcome_enumeration`].
pub const OUTCOME_ENUMERATION_LIMIT: usize = 16;

pub(crate) fn check_dims<T: Scalar>(matrix: &ComparisonMatrix<T>, draw: &Draw) -> Result<()> {
    if matrix.size() != draw.size() {
        return Err(Error::DimensionMismatch {
            matrix: matrix.size(),
            draw: draw.size(),
        });
    }
    Ok(())
}

/// Probability that each player labels each node of the bracket.
///
/// `levels[h][pos]` is the probability that the player on leaf `pos` labels
/// its ancestor at height `h` (height 0 is the leaf itself, height `rounds`
/// the root). A player never reaches a node outside its own leaf's ancestry,
/// so one entry per leaf and level is enough.
#[derive(Debug, Clone)]
pub struct ReachTable<T> {
    leaves: Vec<usize>,
    levels: Vec<Vec<T>>,
}

impl<T: Scalar> ReachTable<T> {
    pub fn build(matrix: &ComparisonMatrix<T>, draw: &Draw) -> Result<Self> {
        check_dims(matrix, draw)?;
        Ok(Self::build_unchecked(matrix, &draw.zero_based()))
    }

    pub(crate) fn build_unchecked(matrix: &ComparisonMatrix<T>, leaves: &[usize]) -> Self {
        let size = leaves.len();
        let rounds = size.trailing_zeros() as usize;
        let mut levels = Vec::with_capacity(rounds + 1);
        levels.push(vec![T::one(); size]);
        for h in 0..rounds {
            let below = &levels[h];
            let half = 1usize << h;
            let mut above = vec![T::zero(); size];
            for start in (0..size).step_by(2 * half) {
                let (left, right) = (start..start + half, start + half..start + 2 * half);
                for i in left.clone() {
                    let beat: T = right.clone().map(|j| below[j] * matrix.at(leaves[i], leaves[j])).sum();
                    above[i] = below[i] * beat;
                }
                for i in right.clone() {
                    let beat: T = left.clone().map(|j| below[j] * matrix.at(leaves[i], leaves[j])).sum();
                    above[i] = below[i] * beat;
                }
            }
            levels.push(above);
        }
        ReachTable {
            leaves: leaves.to_vec(),
            levels,
        }
    }

    pub fn rounds(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }

    /// Distribution of the label of the node that decides `round` (1 = first
    /// round) at position `index` from the left; round 0 addresses the leaves.
    pub fn node(&self, round: u32, index: usize) -> Vec<(PlayerId, T)> {
        let width = 1usize << round;
        let level = &self.levels[round as usize];
        (index * width..(index + 1) * width)
            .map(|pos| (PlayerId::from_zero_based(self.leaves[pos]), level[pos]))
            .collect()
    }

    /// Winning probability of every player, indexed by player number - 1.
    pub fn root(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.leaves.len()];
        let top = self.levels.last().expect("at least one level");
        for (pos, &player) in self.leaves.iter().enumerate() {
            out[player] = top[pos];
        }
        out
    }
}

/// `wp(i, P, d)` for every player i; entry `k` belongs to player `k + 1`.
///
/// Evaluated on the canonical form of `d`, so isomorphic draws give
/// bit-identical results.
pub fn win_probabilities<T: Scalar>(matrix: &ComparisonMatrix<T>, draw: &Draw) -> Result<Vec<T>> {
    Ok(ReachTable::build(matrix, &draw.canonicalize())?.root())
}

pub(crate) fn player_wp<T: Scalar>(matrix: &ComparisonMatrix<T>, leaves: &[usize], player: usize) -> T {
    ReachTable::build_unchecked(matrix, leaves).root()[player]
}

/// Labels of every bracket node in heap order (root at 1, leaves at
/// `N..2N`), playing the deterministic matrix out bottom-up. `flip` names a
/// node whose match is won by the player who would otherwise lose.
pub(crate) fn play_out<T: Scalar>(
    matrix: &ComparisonMatrix<T>,
    leaves: &[usize],
    flip: Option<usize>,
) -> Vec<usize> {
    let size = leaves.len();
    let mut label = vec![usize::MAX; 2 * size];
    label[size..].copy_from_slice(leaves);
    for v in (1..size).rev() {
        let (a, b) = (label[2 * v], label[2 * v + 1]);
        let a_wins = matrix.at(a, b) == T::one();
        let a_wins = if flip == Some(v) { !a_wins } else { a_wins };
        label[v] = if a_wins { a } else { b };
    }
    label
}

/// The player labelling the root of a deterministic tournament.
pub fn winner<T: Scalar>(matrix: &ComparisonMatrix<T>, draw: &Draw) -> Result<PlayerId> {
    check_dims(matrix, draw)?;
    if !matrix.is_deterministic() {
        return Err(Error::NotDeterministic);
    }
    Ok(PlayerId::from_zero_based(play_out(matrix, &draw.zero_based(), None)[1]))
}

/// Rounds won by `player` in the deterministic play-out (N's log2 for the
/// champion).
pub(crate) fn rounds_survived<T: Scalar>(
    matrix: &ComparisonMatrix<T>,
    leaves: &[usize],
    player: usize,
) -> u32 {
    let label = play_out(matrix, leaves, None);
    let size = leaves.len();
    let mut v = size + leaves.iter().position(|&p| p == player).expect("player on a leaf");
    let mut won = 0;
    while v > 1 && label[v / 2] == player {
        won += 1;
        v /= 2;
    }
    won
}

/// Sums the probability of every joint outcome of the N - 1 matches in which
/// `player` ends up champion. Independent of the reach-table recursion.
pub fn wp_by_outcome_enumeration<T: Scalar>(
    matrix: &ComparisonMatrix<T>,
    draw: &Draw,
    player: PlayerId,
) -> Result<T> {
    check_dims(matrix, draw)?;
    let size = draw.size();
    if size > OUTCOME_ENUMERATION_LIMIT {
        return Err(Error::Scale {
            what: "outcome enumeration",
            limit: OUTCOME_ENUMERATION_LIMIT,
        });
    }
    let target = player.checked(size)?;
    let leaves = draw.zero_based();
    let matches = size - 1;
    let mut total = T::zero();
    let mut label = vec![0usize; 2 * size];
    label[size..].copy_from_slice(&leaves);
    // bit (v - 1) of `outcome` says whether the right child wins at node v
    for outcome in 0u32..(1u32 << matches) {
        let mut weight = T::one();
        for v in (1..size).rev() {
            let (a, b) = (label[2 * v], label[2 * v + 1]);
            if outcome >> (v - 1) & 1 == 1 {
                weight = weight * matrix.at(b, a);
                label[v] = b;
            } else {
                weight = weight * matrix.at(a, b);
                label[v] = a;
            }
        }
        if label[1] == target {
            total = total + weight;
        }
    }
    Ok(total)
}
