use thiserror::Error;

use crate::renorm::NonConvergence;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("angles live on different lattices (modulus {0} vs {1})")]
    ModulusMismatch(u64, u64),

    #[error("invalid angle context: {0}")]
    InvalidContext(String),

    #[error("angle {0} is a critical angle")]
    CriticalAngle(String),

    #[error("critical images do not induce a permutation of the cells: {0}")]
    NotAPermutation(String),

    #[error("parameters do not describe a Misiurewicz-Sierpinski structure: {0}")]
    InvalidMs(String),

    #[error("requested level {requested} exceeds the depth cap {cap}")]
    DepthCap { requested: usize, cap: usize },

    #[error("boundary is not invariant under rotation by {0}/(m+n)")]
    NotInvariant(i64),

    #[error("no value given for vertex {0}")]
    MissingValue(usize),

    #[error("vertex set mismatch: expected {expected} vertices, got {got}")]
    VertexMismatch { expected: usize, got: usize },

    #[error("vertices {0} and {1} lie in different support components")]
    Disconnected(usize, usize),

    #[error("fixed-point iteration did not converge: {0}")]
    NonConvergence(Box<NonConvergence>),

    #[error("form is not in M_J: {0}")]
    NotInMJ(String),

    #[error("quotient form is degenerate: {0}")]
    DegenerateQuotient(String),

    #[error("denominator form is not positive definite on the complement of the kernel")]
    DegeneratePencil,

    #[error("kappa is undefined for this context: {0}")]
    KappaUndefined(String),

    #[error("ground set of size {size} exceeds the enumeration cap {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("relation is trivial")]
    TrivialRelation,

    #[error("invalid vertex subset: {0}")]
    SubsetInvalid(String),

    #[error("relation is not defined on this ground set: {0}")]
    GroundSetMismatch(String),

    #[error("input is not harmonic (interior residual {0:e})")]
    NonHarmonic(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("relation is not preserved: {0}")]
    NotPreserved(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl From<NonConvergence> for Error {
    fn from(diag: NonConvergence) -> Self {
        Error::NonConvergence(Box::new(diag))
    }
}
