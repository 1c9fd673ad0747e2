//! Error type shared by all modules.

/// Errors surfaced by the numerical kernels, filter design, feedback
/// tracking, and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input violated a documented precondition (shape, range, emptiness).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Matrix expected to be Hermitian positive semidefinite was not.
    #[error("not positive semidefinite: {0}")]
    NotPSD(String),

    /// Reflection matrix has a singular value at or above one.
    #[error("not contractive: {0}")]
    NotContractive(String),

    /// Doppler argument reached the first Bessel zero; AR(1) coefficient
    /// would leave (0, 1).
    #[error("doppler coefficient out of range: {0}")]
    AlphaOutOfRange(String),

    /// Equivalent channel is singular; no ZF rate for this subcarrier.
    #[error("rank deficient: {0}")]
    RankDeficient(String),

    /// A matrix inversion or closure became ill-conditioned.
    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    /// Interpolation fit stopped above the requested node residual.
    #[error("design did not converge: residual {residual:.3e} > tol {tol:.3e}")]
    DesignNotConverged { residual: f64, tol: f64 },

    /// Lattice parameters violate the contractivity/unitarity conditions.
    #[error("unstable lattice: {0}")]
    UnstableLattice(String),

    /// Direct-form input to the lattice conversion is unstable or not
    /// all-pass.
    #[error("unstable or non-all-pass input: {0}")]
    UnstableInput(String),

    /// Geodesic endpoint pair has a rotation angle of exactly pi; the
    /// principal logarithm is undefined.
    #[error("geodesic branch cut: {0}")]
    BranchCut(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    /// A serialized record (filter, nodes, transcript, CSV) failed to parse.
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
