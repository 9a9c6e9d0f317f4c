//! Geometry of unitary orbits of finite-dimensional density matrices.
//!
//! A unitary orbit is the set of all states reachable from a given density
//! matrix by conjugation with unitaries; it is labelled by the sorted
//! spectrum. This crate provides the orbit-space coordinate charts for
//! d = 2, 3, 4, detection of orbits that contain product states, the
//! constructive map from any bipartite state to a classically correlated
//! state on its orbit, and maximal negativity over a two-qubit orbit.

pub mod classical;
pub mod density;
pub mod entanglement;
pub mod orbits;
pub mod product;

pub use density::{DensityMatrix, RandomSource, Subsystem, UnitaryMatrix};
pub use orbits::{OrbitCoords, ScalarMeasures, Spectrum};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |H - H^dag| entry = {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not unitary: ||U U^dag - I|| = {deviation:.3e}")]
    NotUnitary { deviation: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("coordinates outside the ordered chamber: violated {inequality}")]
    OutOfChamber { inequality: String },
    #[error("capacity exceeded: composite dimension {got} > {limit}")]
    CapacityExceeded { got: usize, limit: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
