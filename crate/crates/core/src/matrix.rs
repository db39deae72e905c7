//! Players and pairwise comparison matrices.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A player, numbered from 1 to N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(usize);

impl PlayerId {
    /// Returns `None` for 0; players are 1-based.
    pub fn new(index: usize) -> Option<Self> {
        (index >= 1).then_some(PlayerId(index))
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub(crate) fn from_zero_based(i: usize) -> Self {
        PlayerId(i + 1)
    }

    pub(crate) fn zero_based(self) -> usize {
        self.0 - 1
    }

    /// Checks the player exists in a tournament of `size` players and returns
    /// the zero-based index.
    pub(crate) fn checked(self, size: usize) -> Result<usize> {
        if self.0 <= size {
            Ok(self.0 - 1)
        } else {
            Err(Error::InvalidPlayer {
                player: self.0,
                size,
            })
        }
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Number of rounds for a field of `size` players, if `size` is a power of
/// two of at least 2.
pub(crate) fn rounds_for(size: usize) -> Result<u32> {
    if size >= 2 && size.is_power_of_two() {
        Ok(size.trailing_zeros())
    } else {
        Err(Error::Dimension(format!(
            "side {size} is not a power of two >= 2"
        )))
    }
}

/// Pairwise win probabilities: `P_ij` is the chance player i beats player j.
///
/// Off-diagonal entries lie in [0, 1] and satisfy `P_ij + P_ji = 1` up to the
/// scalar tolerance. Diagonal entries are undefined and stored as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonMatrix<T> {
    rounds: u32,
    size: usize,
    entries: Vec<T>,
}

impl<T: Scalar> ComparisonMatrix<T> {
    /// Validates a raw square table. Diagonal cells may be anything, including
    /// `None`; off-diagonal cells must be present.
    pub fn validate(rows: &[Vec<Option<T>>]) -> Result<Self> {
        let size = rows.len();
        let rounds = rounds_for(size)?;
        let mut entries = vec![T::zero(); size * size];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::Dimension(format!(
                    "row {} has {} entries, expected {size}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, cell) in row.iter().enumerate() {
                if i == j {
                    continue;
                }
                let value = cell.ok_or_else(|| Error::Range {
                    i: i + 1,
                    j: j + 1,
                    value: f64::NAN,
                })?;
                entries[i * size + j] = value;
            }
        }
        let matrix = ComparisonMatrix {
            rounds,
            size,
            entries,
        };
        matrix.check()?;
        Ok(matrix)
    }

    /// Validates a dense table; the diagonal is ignored.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let raw: Vec<Vec<Option<T>>> = rows
            .iter()
            .map(|r| r.iter().copied().map(Some).collect())
            .collect();
        Self::validate(&raw)
    }

    /// Builds a matrix for `rounds` rounds from the upper triangle:
    /// `upper(i, j)` with zero-based `i < j` gives `P_ij`, and `P_ji` is its
    /// complement.
    pub fn from_upper(rounds: u32, mut upper: impl FnMut(usize, usize) -> T) -> Result<Self> {
        if rounds == 0 || rounds >= usize::BITS / 2 {
            return Err(Error::Dimension(format!("unsupported number of rounds {rounds}")));
        }
        let size = 1usize << rounds;
        let mut matrix = ComparisonMatrix {
            rounds,
            size,
            entries: vec![T::zero(); size * size],
        };
        for i in 0..size {
            for j in i + 1..size {
                matrix.set_pair(i, j, upper(i, j));
            }
        }
        matrix.check()?;
        Ok(matrix)
    }

    fn check(&self) -> Result<()> {
        let tol = T::tolerance();
        for i in 0..self.size {
            for j in 0..self.size {
                if i == j {
                    continue;
                }
                let v = self.at(i, j);
                if !(v >= T::zero() && v <= T::one()) {
                    return Err(Error::Range {
                        i: i + 1,
                        j: j + 1,
                        value: v.to_f64_lossy(),
                    });
                }
                if j > i {
                    let sum = v + self.at(j, i);
                    if (sum - T::one()).abs() > tol {
                        return Err(Error::Complementarity {
                            i: i + 1,
                            j: j + 1,
                            sum: sum.to_f64_lossy(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn rounds(&self) -> u32 {
        self.rounds
    }

    /// Number of players N = 2^rounds.
    pub fn size(&self) -> usize {
        self.size
    }

    /// `P_ab`. Panics if either player is out of range; `prob(a, a)` is zero.
    pub fn prob(&self, a: PlayerId, b: PlayerId) -> T {
        assert!(a.index() <= self.size && b.index() <= self.size);
        self.at(a.zero_based(), b.zero_based())
    }

    #[inline]
    pub(crate) fn at(&self, i: usize, j: usize) -> T {
        self.entries[i * self.size + j]
    }

    /// Sets `P_ij = p` and `P_ji = 1 - p` without validation.
    pub(crate) fn set_pair(&mut self, i: usize, j: usize, p: T) {
        self.entries[i * self.size + j] = p;
        self.entries[j * self.size + i] = T::one() - p;
    }

    pub(crate) fn set_raw(&mut self, i: usize, j: usize, pij: T, pji: T) {
        self.entries[i * self.size + j] = pij;
        self.entries[j * self.size + i] = pji;
    }

    /// Copy with `P_ab = p` and `P_ba = 1 - p`.
    pub fn with_pair(&self, a: PlayerId, b: PlayerId, p: T) -> Result<Self> {
        let i = a.checked(self.size)?;
        let j = b.checked(self.size)?;
        if i == j {
            return Err(Error::Parameter("a pair needs two distinct players".into()));
        }
        let mut out = self.clone();
        out.set_pair(i, j, p);
        out.check()?;
        Ok(out)
    }

    /// True when every off-diagonal entry is exactly 0 or 1.
    pub fn is_deterministic(&self) -> bool {
        self.off_diagonal()
            .all(|v| v == T::zero() || v == T::one())
    }

    /// Smallest nonzero off-diagonal entry; 1 for deterministic matrices.
    pub fn xi(&self) -> T {
        self.off_diagonal()
            .filter(|&v| v != T::zero())
            .fold(T::one(), |m, v| m.min(v))
    }

    fn off_diagonal(&self) -> impl Iterator<Item = T> + '_ {
        let n = self.size;
        self.entries
            .iter()
            .enumerate()
            .filter(move |(k, _)| k / n != k % n)
            .map(|(_, &v)| v)
    }

    /// Converts to another precision.
    pub fn cast<U: Scalar>(&self) -> ComparisonMatrix<U> {
        ComparisonMatrix {
            rounds: self.rounds,
            size: self.size,
            entries: self
                .entries
                .iter()
                .map(|v| U::from_f64(v.to_f64_lossy()).unwrap_or_else(U::nan))
                .collect(),
        }
    }

    pub fn to_file(&self) -> MatrixFile {
        let matrix = (0..self.size)
            .map(|i| {
                (0..self.size)
                    .map(|j| (i != j).then(|| self.at(i, j).to_f64_lossy()))
                    .collect()
            })
            .collect();
        MatrixFile {
            n: self.rounds,
            matrix,
        }
    }

    pub fn from_file(file: &MatrixFile) -> Result<Self> {
        let raw: Vec<Vec<Option<T>>> = file
            .matrix
            .iter()
            .map(|row| row.iter().map(|c| c.and_then(T::from_f64)).collect())
            .collect();
        let m = Self::validate(&raw)?;
        if m.rounds != file.n {
            return Err(Error::Dimension(format!(
                "declared n = {} but the matrix side is {}",
                file.n, m.size
            )));
        }
        Ok(m)
    }
}

/// On-disk matrix format: `{ "n": rounds, "matrix": [[...]] }`, row-major,
/// diagonal `null` (any value is accepted and ignored on input).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: u32,
    pub matrix: Vec<Vec<Option<f64>>>,
}

impl<T: Scalar> Serialize for ComparisonMatrix<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_file().serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for ComparisonMatrix<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let file = MatrixFile::deserialize(deserializer)?;
        Self::from_file(&file).map_err(serde::de::Error::custom)
    }
}
