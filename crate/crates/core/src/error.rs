use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("complementarity violated at ({i}, {j}): P_ij + P_ji = {sum}")]
    Complementarity { i: usize, j: usize, sum: f64 },
    #[error("entry ({i}, {j}) = {value} is outside [0, 1]")]
    Range { i: usize, j: usize, value: f64 },
    #[error("not a permutation: {0}")]
    Permutation(String),
    #[error("dimension mismatch: matrix has {matrix} players, draw has {draw}")]
    DimensionMismatch { matrix: usize, draw: usize },
    #[error("{what} is limited to {limit}; pass the explicit override to go beyond")]
    Scale { what: &'static str, limit: usize },
    #[error("draw count for {rounds} rounds overflows 128 bits")]
    Overflow { rounds: u32 },
    #[error("comparison matrix is not deterministic")]
    NotDeterministic,
    #[error("player {player} does not win the tournament (winner is {winner})")]
    NotWinner { player: usize, winner: usize },
    #[error("epsilon must be positive, got {0}")]
    NonpositiveEpsilon(f64),
    #[error("epsilon {eps} exceeds the smallest nonzero entry {xi}")]
    EpsilonTooLarge { eps: f64, xi: f64 },
    #[error("invalid player {player} for a tournament of {size} players")]
    InvalidPlayer { player: usize, size: usize },
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("no draw makes player {0} win with certainty")]
    NoWinningDraw(usize),
}

impl Error {
    /// Stable machine-readable name of the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "DimensionError",
            Error::Complementarity { .. } => "ComplementarityError",
            Error::Range { .. } => "RangeError",
            Error::Permutation(_) => "PermutationError",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::Scale { .. } => "ScaleError",
            Error::Overflow { .. } => "OverflowError",
            Error::NotDeterministic => "NotDeterministic",
            Error::NotWinner { .. } => "NotWinner",
            Error::NonpositiveEpsilon(_) => "NonpositiveEpsilon",
            Error::EpsilonTooLarge { .. } => "EpsilonTooLarge",
            Error::InvalidPlayer { .. } => "InvalidPlayer",
            Error::Parameter(_) => "ParameterError",
            Error::NoWinningDraw(_) => "NoWinningDraw",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
