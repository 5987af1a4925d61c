//! Simulation of a dispersive spin-mechanical system with spin post-selection.
//!
//! The library covers the preparation of a mechanical qubit, single Fock
//! states, and Schrodinger-cat states of a harmonic oscillator coupled to a
//! spin through a conditional displacement interaction
//! `H = b'b - lambda sigma_z (b' + b)` (all rates and times scaled by the
//! mechanical frequency). Dynamics come in three flavors:
//!
//! - lossless closed forms ([`closed_form`]),
//! - an exact zero-temperature damped solution ([`damped`]),
//! - full thermal Lindblad integration ([`lindblad`]).
//!
//! Analysis tools (Wigner function, l1 coherence, quadrature amplification)
//! live in [`observables`]; weak-value machinery in [`aav`]; Monte-Carlo
//! angle-jitter studies in [`robustness`].
//!
//! # Conventions
//!
//! Fixed globally and relied upon by every module:
//!
//! - Composite order is spin (x) Fock, spin factor first. Basis index
//!   `i = s * n_max + n` with `s = 0` for up, `s = 1` for down.
//! - Quadratures are `x = (b + b')/2`, `p = (b - b')/(2i)`, so `[x, p] = i/2`
//!   and a coherent state `|alpha>` has `<x> = Re alpha`, `<p> = Im alpha`.

pub mod aav;
pub mod closed_form;
pub mod damped;
pub mod exec;
pub mod hilbert;
pub mod lindblad;
pub mod linalg;
pub mod observables;
pub mod quad;
pub mod robustness;

pub use hilbert::{C64, DensityMatrix, FockDim, Ket, Operator};

/// Errors shared across the simulation modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("Fock dimension must be at least 2, got {0}")]
    FockTooSmall(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coherent state truncation leakage {leakage:.3e} exceeds tolerance {tolerance:.3e}; increase n_max")]
    CoherentLeakage { leakage: f64, tolerance: f64 },
    #[error("|lambda eta| = {0:.4} exceeds the weak-coupling guard 0.5; the two-level truncation is invalid")]
    WeakCouplingExceeded(f64),
    #[error("post-selection probability {0:.3e} below 1e-15 (near-orthogonal post-selection)")]
    DegeneratePostselection(f64),
    #[error("the analytic phonon distribution is derived at t = pi; got t = {0}")]
    NotAtPi(f64),
    #[error("top two Fock levels hold population {population:.3e} > tail tolerance {tolerance:.3e}; cutoff too small")]
    TailOverflow { population: f64, tolerance: f64 },
    #[error("trace drifted by {0:.3e} during integration")]
    TraceDrift(f64),
    #[error("step size underflow in adaptive integration at t = {0}")]
    StepUnderflow(f64),
    #[error("population {0:.3e} outside the {{|0>, |1>}} subspace; the quadrature-coherence identity does not apply")]
    SubspaceLeakage(f64),
    #[error("weak value is not finite (orthogonal pre/post-selection)")]
    NonFiniteWeakValue,
    #[error("amplification factors are undefined at lambda = 0")]
    ZeroCoupling,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
