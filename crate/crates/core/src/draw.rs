//! Draws: arrangements of players on the leaves of a balanced bracket.
//!
//! Two leaf sequences describe the same draw when one can be turned into the
//! other by swapping the children of internal nodes. The canonical
//! representative puts, at every internal node, the child whose smallest
//! player is smaller on the left.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::{rounds_for, PlayerId};

/// Largest field size enumerated without an explicit override.
pub const ENUMERATION_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Draw {
    leaves: Vec<PlayerId>,
}

impl Draw {
    /// Validates that `leaves` is a permutation of 1..=N with N a power of two.
    pub fn new(leaves: Vec<usize>) -> Result<Self> {
        let size = leaves.len();
        rounds_for(size).map_err(|_| {
            Error::Permutation(format!("{size} leaves is not a power of two >= 2"))
        })?;
        let mut seen = vec![false; size];
        for &p in &leaves {
            if p == 0 || p > size || seen[p - 1] {
                return Err(Error::Permutation(format!(
                    "{leaves:?} is not a permutation of 1..={size}"
                )));
            }
            seen[p - 1] = true;
        }
        Ok(Draw {
            leaves: leaves.into_iter().map(|p| PlayerId::from_zero_based(p - 1)).collect(),
        })
    }

    /// The draw (1, 2, ..., 2^rounds).
    pub fn identity(rounds: u32) -> Self {
        Draw {
            leaves: (0..1usize << rounds).map(PlayerId::from_zero_based).collect(),
        }
    }

    pub(crate) fn from_zero_based(leaves: &[usize]) -> Self {
        Draw {
            leaves: leaves.iter().map(|&p| PlayerId::from_zero_based(p)).collect(),
        }
    }

    pub fn leaves(&self) -> &[PlayerId] {
        &self.leaves
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.leaves.iter().map(|p| p.index()).collect()
    }

    pub(crate) fn zero_based(&self) -> Vec<usize> {
        self.leaves.iter().map(|p| p.zero_based()).collect()
    }

    pub fn size(&self) -> usize {
        self.leaves.len()
    }

    pub fn rounds(&self) -> u32 {
        self.leaves.len().trailing_zeros()
    }

    pub fn canonicalize(&self) -> Draw {
        let mut leaves = self.leaves.clone();
        canonicalize_in_place(&mut leaves);
        Draw { leaves }
    }

    pub fn is_canonical(&self) -> bool {
        let n = self.leaves.len();
        (1..n).all(|p| {
            let sibling = p - (1 << p.trailing_zeros());
            self.leaves[sibling] < self.leaves[p]
        })
    }

    /// Whether both sequences describe the same draw.
    pub fn equivalent(&self, other: &Draw) -> bool {
        self.canonicalize() == other.canonicalize()
    }

    pub fn to_file(&self) -> DrawFile {
        DrawFile {
            leaves: self.to_vec(),
        }
    }
}

impl fmt::Display for Draw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, p) in self.leaves.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

fn canonicalize_in_place(leaves: &mut [PlayerId]) {
    if leaves.len() < 2 {
        return;
    }
    let half = leaves.len() / 2;
    let (left, right) = leaves.split_at_mut(half);
    canonicalize_in_place(left);
    canonicalize_in_place(right);
    // canonical blocks start with their minimum
    if right[0] < left[0] {
        left.swap_with_slice(right);
    }
}

/// Free-function form of [`Draw::canonicalize`].
pub fn canonicalize(draw: &Draw) -> Draw {
    draw.canonicalize()
}

/// On-disk draw format: `{ "leaves": [ints] }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawFile {
    pub leaves: Vec<usize>,
}

impl Serialize for Draw {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_file().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Draw {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let file = DrawFile::deserialize(deserializer)?;
        Draw::new(file.leaves).map_err(serde::de::Error::custom)
    }
}

/// Number of distinct draws, N! / 2^(N-1), for N = 2^rounds.
///
/// Uses `count(n) = C(N-1, N/2-1) * count(n-1)^2`: the left half holds
/// player 1 plus any N/2-1 others, and each half is drawn independently.
pub fn count_draws(rounds: u32) -> Result<u128> {
    if rounds == 0 {
        return Err(Error::Parameter("rounds must be at least 1".into()));
    }
    let overflow = Error::Overflow { rounds };
    let mut count: u128 = 1;
    for k in 1..=rounds {
        if k >= 32 {
            return Err(overflow);
        }
        let size = 1u128 << k;
        let choose = binomial(size - 1, size / 2 - 1).ok_or_else(|| overflow.clone())?;
        count = count
            .checked_mul(count)
            .and_then(|c| c.checked_mul(choose))
            .ok_or_else(|| overflow.clone())?;
    }
    Ok(count)
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Lazily yields every canonical draw for `rounds` rounds exactly once, in
/// lexicographic order of leaf sequences.
///
/// Fields larger than [`ENUMERATION_LIMIT`] players require
/// `allow_large = true`.
pub fn enumerate_draws(rounds: u32, allow_large: bool) -> Result<CanonicalDraws> {
    if rounds == 0 {
        return Err(Error::Parameter("rounds must be at least 1".into()));
    }
    let limit = if allow_large { 32 } else { ENUMERATION_LIMIT };
    if rounds > 5 || (1usize << rounds) > limit {
        return Err(Error::Scale {
            what: "draw enumeration",
            limit,
        });
    }
    let size = 1usize << rounds;
    Ok(CanonicalDraws::new(size))
}

/// Depth-first walk over positions, trying values in increasing order.
///
/// A sequence is canonical iff every position `p > 0` holds a larger value
/// than the first leaf of its left sibling block, at `p - lowbit(p)`. Such a
/// value must also be the minimum of the block of size `lowbit(p)` starting at
/// `p`, so enough larger values must remain unused.
#[derive(Debug, Clone)]
pub struct CanonicalDraws {
    size: usize,
    leaves: Vec<usize>,
    used: Vec<bool>,
    /// Next candidate value to try at each depth.
    next: Vec<usize>,
    depth: usize,
    done: bool,
}

impl CanonicalDraws {
    fn new(size: usize) -> Self {
        let mut it = CanonicalDraws {
            size,
            leaves: vec![0; size],
            used: vec![false; size],
            next: vec![0; size],
            depth: 0,
            done: false,
        };
        // position 0 always holds player 1
        it.leaves[0] = 0;
        it.used[0] = true;
        it.next[0] = size;
        it.depth = 1;
        it
    }

    fn block_len(&self, pos: usize) -> usize {
        1 << pos.trailing_zeros()
    }

    fn admissible(&self, pos: usize, value: usize) -> bool {
        if self.used[value] {
            return false;
        }
        let sibling = pos - self.block_len(pos);
        if value <= self.leaves[sibling] {
            return false;
        }
        let larger_free = (value + 1..self.size).filter(|&v| !self.used[v]).count();
        larger_free + 1 >= self.block_len(pos)
    }
}

impl Iterator for CanonicalDraws {
    type Item = Draw;

    fn next(&mut self) -> Option<Draw> {
        if self.done {
            return None;
        }
        loop {
            if self.depth == self.size {
                let out = Draw::from_zero_based(&self.leaves);
                self.depth -= 1;
                self.used[self.leaves[self.depth]] = false;
                return Some(out);
            }
            let pos = self.depth;
            let mut value = self.next[pos];
            while value < self.size && !self.admissible(pos, value) {
                value += 1;
            }
            if value < self.size {
                self.leaves[pos] = value;
                self.used[value] = true;
                self.next[pos] = value + 1;
                self.depth += 1;
                if self.depth < self.size {
                    self.next[self.depth] = 0;
                }
            } else {
                // exhausted this position; backtrack
                self.depth -= 1;
                if self.depth == 0 {
                    self.done = true;
                    return None;
                }
                self.used[self.leaves[self.depth]] = false;
            }
        }
    }
}
