//! Balanced knockout tournaments: exact winning probabilities, first-order
//! robustness of draws under bounded perturbation of the comparison matrix,
//! crucial-match counting, adversarial tournament families, and exact
//! small-field search for fixing problems.
//!
//! The math is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix it to `f64`, which is what the file formats and the CLI use.

pub mod draw;
pub mod error;
pub mod generators;
pub mod matrix;
pub mod robustness;
pub mod scalar;
pub mod solvers;
pub mod winprob;

pub use draw::{canonicalize, count_draws, enumerate_draws, Draw, DrawFile};
pub use error::{Error, Result};
pub use matrix::{ComparisonMatrix, MatrixFile, PlayerId};
pub use robustness::{
    crucial_matches, crucial_matches_oracle, drop_estimate, exact_worst_drop_oracle, sensitivity,
    worst_perturbation_witness, CrucialMatchReport, Direction,
};
pub use scalar::Scalar;
pub use solvers::{solve, Answer, Problem, SearchMode, SolveRequest};
pub use winprob::{win_probabilities, winner, wp_by_outcome_enumeration, ReachTable};

pub type Matrix = ComparisonMatrix<f64>;
pub type Matrix32 = ComparisonMatrix<f32>;
pub type Reach = ReachTable<f64>;
pub type SensitivityReport = robustness::SensitivityReport<f64>;
pub type DropEstimate = robustness::DropEstimate<f64>;
pub type WorstPerturbationWitness = robustness::WorstPerturbationWitness<f64>;
pub type ExactWorstDrop = robustness::ExactWorstDrop<f64>;
pub type BigSmallInstance = generators::BigSmallInstance<f64>;
pub type SolveResult = solvers::SolveResult<f64>;
pub type RatedDraw = solvers::RatedDraw<f64>;
