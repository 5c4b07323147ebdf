use nalgebra::DMatrix;
use thiserror::Error;

use crate::coverage::CandidateRecord;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate ellipsoid: shape matrix has a zero eigenvalue")]
    DegenerateEllipsoid,

    /// The points do not span the ambient space. `basis` holds an orthonormal
    /// basis of their span (or of their affine hull's direction space) as rows.
    #[error("rank deficient point set: rank {rank} < {dim}")]
    RankDeficient {
        rank: usize,
        dim: usize,
        basis: DMatrix<f64>,
    },

    #[error("frame is not tight: {0}")]
    NotATightFrame(String),

    #[error("no candidate met the coverage floor of {floor:.3} points ({} candidates recorded)", .candidates.len())]
    NoFeasibleCandidate {
        floor: f64,
        candidates: Vec<CandidateRecord>,
    },

    #[error("oracle budget exceeded: {subsets} subsets > {budget}")]
    BudgetExceeded { subsets: u128, budget: u64 },

    #[error("graph is not regular: {0}")]
    GraphNotRegular(String),

    #[error("zero vector encountered at point id {0}")]
    ZeroVector(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
