//! Dense operator algebra on truncated Fock and spin (x) Fock spaces.
//!
//! This module owns the ordering convention for the composite system: the
//! spin factor always comes first in tensor products, so a joint index is
//! `i = s * n_max + n` with `s = 0` for `|up>` and `s = 1` for `|down>`.
//! Every other module builds on top of these types and inherits the
//! convention from here.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;

/// Number of Fock levels retained, states `|0> ..= |n_max - 1>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockDim(usize);

impl FockDim {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::FockTooSmall(n_max));
        }
        Ok(FockDim(n_max))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// Dense complex square matrix acting on a truncated Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    mat: Array2<C64>,
}

impl Operator {
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        let (r, c) = mat.dim();
        if r != c {
            return Err(Error::DimensionMismatch { expected: r, got: c });
        }
        Ok(Operator { mat })
    }

    pub fn zeros(dim: usize) -> Self {
        Operator { mat: Array2::zeros((dim, dim)) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_mat(self) -> Array2<C64> {
        self.mat
    }

    pub fn dagger(&self) -> Operator {
        Operator { mat: self.mat.t().mapv(|z| z.conj()) }
    }

    pub fn dot(&self, other: &Operator) -> Operator {
        Operator { mat: self.mat.dot(&other.mat) }
    }

    pub fn apply(&self, ket: &Ket) -> Ket {
        Ket { amps: self.mat.dot(&ket.amps) }
    }

    pub fn scale(&self, z: C64) -> Operator {
        Operator { mat: self.mat.mapv(|e| e * z) }
    }

    pub fn add(&self, other: &Operator) -> Operator {
        Operator { mat: &self.mat + &other.mat }
    }

    pub fn sub(&self, other: &Operator) -> Operator {
        Operator { mat: &self.mat - &other.mat }
    }
}

/// Pure state on a truncated Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amps: Array1<C64>,
}

impl Ket {
    pub fn new(amps: Array1<C64>) -> Self {
        Ket { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Ket {
        let n = self.norm();
        Ket { amps: self.amps.mapv(|z| z / n) }
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &Ket) -> C64 {
        self.amps.iter().zip(other.amps.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn to_density(&self) -> DensityMatrix {
        let d = self.dim();
        let mut mat = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                mat[[i, j]] = self.amps[i] * self.amps[j].conj();
            }
        }
        DensityMatrix { mat }
    }
}

/// Dense density matrix. Construction does not enforce physicality; use
/// [`DensityMatrix::validate`] where an invariant check is wanted.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: Array2<C64>,
}

impl DensityMatrix {
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        let (r, c) = mat.dim();
        if r != c {
            return Err(Error::DimensionMismatch { expected: r, got: c });
        }
        Ok(DensityMatrix { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn mat_mut(&mut self) -> &mut Array2<C64> {
        &mut self.mat
    }

    pub fn into_mat(self) -> Array2<C64> {
        self.mat
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.mat[[i, i]]).sum()
    }

    /// Largest deviation from Hermiticity, `max |rho_ij - conj(rho_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let e = (self.mat[[i, j]] - self.mat[[j, i]].conj()).norm();
                worst = worst.max(e);
            }
        }
        worst
    }

    pub fn normalized(&self) -> DensityMatrix {
        let tr = self.trace();
        DensityMatrix { mat: self.mat.mapv(|z| z / tr) }
    }

    /// Checks Hermiticity (1e-10), unit trace (1e-8) and positivity
    /// (eigenvalue floor -1e-8).
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::InvalidConfig(format!(
                "density matrix not Hermitian: deviation {herm:.3e}"
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(Error::InvalidConfig(format!("density matrix trace {tr} is not 1")));
        }
        let min_eig = crate::linalg::hermitian_eigenvalues(&self.mat)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-8 {
            return Err(Error::InvalidConfig(format!(
                "density matrix has negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }
}

/// Bosonic annihilation operator, `<n-1|b|n> = sqrt(n)`.
pub fn annihilation(n_max: FockDim) -> Operator {
    let n = n_max.get();
    let mut mat = Array2::zeros((n, n));
    for k in 1..n {
        mat[[k - 1, k]] = C64::new((k as f64).sqrt(), 0.0);
    }
    Operator { mat }
}

pub fn creation(n_max: FockDim) -> Operator {
    annihilation(n_max).dagger()
}

pub fn number_op(n_max: FockDim) -> Operator {
    let n = n_max.get();
    let mut mat = Array2::zeros((n, n));
    for k in 0..n {
        mat[[k, k]] = C64::new(k as f64, 0.0);
    }
    Operator { mat }
}

pub fn identity_op(dim: usize) -> Operator {
    let mut mat = Array2::zeros((dim, dim));
    for k in 0..dim {
        mat[[k, k]] = C64::new(1.0, 0.0);
    }
    Operator { mat }
}

/// Position quadrature `x = (b + b')/2`.
pub fn position(n_max: FockDim) -> Operator {
    let b = annihilation(n_max);
    b.add(&b.dagger()).scale(C64::new(0.5, 0.0))
}

/// Momentum quadrature `p = (b - b')/(2i)`.
pub fn momentum(n_max: FockDim) -> Operator {
    let b = annihilation(n_max);
    b.sub(&b.dagger()).scale(C64::new(0.0, 0.5).conj())
}

/// Photon-number parity `(-1)^n`.
pub fn parity_op(n_max: FockDim) -> Operator {
    let n = n_max.get();
    let mut mat = Array2::zeros((n, n));
    for k in 0..n {
        mat[[k, k]] = C64::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    }
    Operator { mat }
}

pub fn sigma_z() -> Operator {
    let mut mat = Array2::zeros((2, 2));
    mat[[0, 0]] = C64::new(1.0, 0.0);
    mat[[1, 1]] = C64::new(-1.0, 0.0);
    Operator { mat }
}

/// Lowering operator `|down><up|`; relaxation drives the spin toward `|down>`.
pub fn sigma_minus() -> Operator {
    let mut mat = Array2::zeros((2, 2));
    mat[[1, 0]] = C64::new(1.0, 0.0);
    Operator { mat }
}

pub fn sigma_plus() -> Operator {
    sigma_minus().dagger()
}

pub fn fock_ket(n: usize, n_max: FockDim) -> Ket {
    let mut amps = Array1::zeros(n_max.get());
    amps[n] = C64::new(1.0, 0.0);
    Ket { amps }
}

pub fn spin_up() -> Ket {
    let mut amps = Array1::zeros(2);
    amps[0] = C64::new(1.0, 0.0);
    Ket { amps }
}

pub fn spin_down() -> Ket {
    let mut amps = Array1::zeros(2);
    amps[1] = C64::new(1.0, 0.0);
    Ket { amps }
}

/// Raw truncated coherent amplitudes `c_n = e^{-|alpha|^2/2} alpha^n / sqrt(n!)`
/// without renormalization.
pub fn coherent_amplitudes_raw(alpha: C64, n_max: FockDim) -> Array1<C64> {
    let n = n_max.get();
    let mut amps = Array1::zeros(n);
    let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amps[0] = c;
    for k in 1..n {
        c *= alpha / C64::new((k as f64).sqrt(), 0.0);
        amps[k] = c;
    }
    amps
}

/// Truncated coherent state `|alpha>`, renormalized after truncation.
///
/// Returns the ket together with the truncation leakage `1 - sum |c_n|^2`
/// of the raw amplitudes; errors if the leakage exceeds `leak_tol`.
pub fn coherent_ket(alpha: C64, n_max: FockDim, leak_tol: f64) -> Result<(Ket, f64)> {
    let raw = coherent_amplitudes_raw(alpha, n_max);
    let norm_sq: f64 = raw.iter().map(|z| z.norm_sqr()).sum();
    let leakage = (1.0 - norm_sq).max(0.0);
    if leakage > leak_tol {
        return Err(Error::CoherentLeakage { leakage, tolerance: leak_tol });
    }
    let n = norm_sq.sqrt();
    Ok((Ket { amps: raw.mapv(|z| z / n) }, leakage))
}

/// Kronecker product of operators, first factor (spin by convention) varying
/// slowest.
pub fn tensor_op(a: &Operator, b: &Operator) -> Operator {
    let (da, db) = (a.dim(), b.dim());
    let mut mat = Array2::zeros((da * db, da * db));
    for i in 0..da {
        for j in 0..da {
            let aij = a.mat[[i, j]];
            for k in 0..db {
                for l in 0..db {
                    mat[[i * db + k, j * db + l]] = aij * b.mat[[k, l]];
                }
            }
        }
    }
    Operator { mat }
}

pub fn tensor_ket(a: &Ket, b: &Ket) -> Ket {
    let (da, db) = (a.dim(), b.dim());
    let mut amps = Array1::zeros(da * db);
    for i in 0..da {
        for k in 0..db {
            amps[i * db + k] = a.amps[i] * b.amps[k];
        }
    }
    Ket { amps }
}

/// Traces out the spin of a joint state on spin (x) Fock, returning the
/// reduced mechanical density matrix.
pub fn partial_trace_spin(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let d = rho.dim();
    if !d.is_multiple_of(2) {
        return Err(Error::DimensionMismatch { expected: d + d % 2, got: d });
    }
    let n = d / 2;
    let mut mat = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            mat[[i, j]] = rho.mat[[i, j]] + rho.mat[[n + i, n + j]];
        }
    }
    Ok(DensityMatrix { mat })
}

/// `Tr[rho * obs]`.
pub fn expectation(rho: &DensityMatrix, obs: &Operator) -> Result<C64> {
    if rho.dim() != obs.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: obs.dim() });
    }
    let d = rho.dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += rho.mat[[i, j]] * obs.mat[[j, i]];
        }
    }
    Ok(acc)
}

/// Trace distance `(1/2) ||a - b||_1` between two density matrices.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let diff = a.mat() - b.mat();
    let eigs = crate::linalg::hermitian_eigenvalues(&diff);
    Ok(0.5 * eigs.iter().map(|e| e.abs()).sum::<f64>())
}
