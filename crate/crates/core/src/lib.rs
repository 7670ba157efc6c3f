//! Multi-photon interference in linear-optical networks.
//!
//! The crate computes coincidence probabilities for `n` partially
//! distinguishable photons propagating through an `m`-mode interferometer.
//! Distinguishability enters only through a block-diagonal Hermitian *rate
//! matrix* built from symmetric-group representation theory and pairwise
//! wave-packet overlaps; the network enters only through a vector of matrix
//! functions (permanent, immanants, determinant) of the scattering submatrix.
//! A coincidence probability is the quadratic form of the two.
//!
//! Module map:
//!
//! * [`symgroup`] — permutations, partitions, characters, irreducible
//!   representations and the symmetry adapter for `S_n`.
//! * [`matfunc`] — permanents (Ryser), determinants, immanants and
//!   row-permuted submatrices over complex matrices.
//! * [`wavepacket`] — Gaussian single-photon wave packets and the overlap
//!   amplitudes that weight each permutation.
//! * [`interference`] — rate matrices, basis vectors, coincidence
//!   probabilities, delay landscapes and output distributions.
//! * [`mesh`] — beam-splitter/phase-shifter meshes and their composed
//!   unitaries.
//! * [`reconstruct`] — Hong–Ou–Mandel dip fitting, visibility prediction and
//!   least-squares recovery of mesh parameters.

pub mod interference;
pub mod matfunc;
pub mod mesh;
pub mod reconstruct;
pub mod symgroup;
pub mod wavepacket;

#[cfg(doctest)]
mod book;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An input exceeds a documented size guard (factorial growth, Ryser cap, ...).
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    /// Matrix shape does not satisfy the operation's requirements.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Objects of incompatible degree were combined.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A value violates a domain invariant.
    #[error("invalid value: {0}")]
    InvalidValue(String),
    /// A computation produced or received a non-finite number.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// An iterative fit ran out of iterations without meeting its tolerance.
    #[error("fit did not converge: {0}")]
    FitFailed(String),
    /// No optimizer start produced a descent.
    #[error("optimization failed: {0}")]
    OptimizationFailed(String),
    /// Not enough data to determine the requested parameters.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn factorial(n: usize) -> usize {
    (2..=n).product::<usize>().max(1)
}
