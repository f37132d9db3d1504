use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("bitstring {0:?} has the wrong hamming weight")]
    WrongWeight(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("invalid branching path {0:?}")]
    InvalidPath(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("singular triangular system at order {0}")]
    SingularSystem(usize),
    #[error("expansion infeasible: cosine argument {0} < -1")]
    Infeasible(f64),
    #[error("state does not split into the two expected branches (residual {0:.3e})")]
    BranchDecompositionFailed(f64),
    #[error("jump of {q} qubits exceeds the maximum {qmax}")]
    JumpInfeasible { q: usize, qmax: usize },
    #[error("amplification did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("reflection cascade is ill-conditioned (condition number {0:.3e})")]
    SingularCascade(f64),
    #[error("sector evolution deviates from unitarity by {0:.3e}")]
    NotNearUnitary(f64),
    #[error("diagonal families never cross (closest approach {0:.4e})")]
    NoCrossing(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
