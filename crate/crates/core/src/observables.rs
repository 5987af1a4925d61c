//! Phase-space and coherence diagnostics for mechanical states.
//!
//! The Wigner function is evaluated through the displaced-parity form
//! `W(x, p) = (2/pi) Tr[rho D(2 alpha) P]` with `alpha = x + i p`, using a
//! stable column recurrence for the displacement matrix elements instead of
//! Laguerre polynomials. Grid evaluation fans out row-by-row over the
//! execution strategy.

use ndarray::Array2;

use crate::exec::{self, Strategy};
use crate::hilbert::{self, C64, DensityMatrix, FockDim};
use crate::{Error, Result};

/// Rectangular phase-space grid, symmetric about the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_half: f64,
    pub p_half: f64,
    pub n_x: usize,
    pub n_p: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { x_half: 3.0, p_half: 3.0, n_x: 201, n_p: 201 }
    }
}

impl GridSpec {
    pub fn square(half: f64, n: usize) -> Self {
        GridSpec { x_half: half, p_half: half, n_x: n, n_p: n }
    }

    pub fn x_axis(&self) -> Vec<f64> {
        axis(self.x_half, self.n_x)
    }

    pub fn p_axis(&self) -> Vec<f64> {
        axis(self.p_half, self.n_p)
    }
}

fn axis(half: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    let step = 2.0 * half / (n - 1) as f64;
    (0..n).map(|i| -half + i as f64 * step).collect()
}

/// Sampled Wigner function; `values[[i, j]] = W(x[i], p[j])`.
#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub values: Array2<f64>,
}

impl WignerGrid {
    /// Most negative sample and its location.
    pub fn min(&self) -> (f64, f64, f64) {
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for (i, &x) in self.x.iter().enumerate() {
            for (j, &p) in self.p.iter().enumerate() {
                let w = self.values[[i, j]];
                if w < best.0 {
                    best = (w, x, p);
                }
            }
        }
        best
    }

    fn cell_area(&self) -> f64 {
        let dx = if self.x.len() > 1 { self.x[1] - self.x[0] } else { 1.0 };
        let dp = if self.p.len() > 1 { self.p[1] - self.p[0] } else { 1.0 };
        dx * dp
    }

    /// Riemann integral of the sampled function with the `dx dp` measure.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.cell_area()
    }

    /// Total integrated weight of the negative regions (reported positive).
    pub fn negative_volume(&self) -> f64 {
        let s: f64 = self.values.iter().filter(|v| **v < 0.0).sum();
        -s * self.cell_area()
    }

    /// Marginal over p, sampled on the x axis.
    pub fn marginal_x(&self) -> Vec<f64> {
        let dp = if self.p.len() > 1 { self.p[1] - self.p[0] } else { 1.0 };
        self.values.rows().into_iter().map(|row| row.sum() * dp).collect()
    }
}

/// Columns of the displacement operator `D(beta)` in the Fock basis.
///
/// `col_0` holds the bare coherent amplitudes of `beta`; the rest follow from
/// `D b' = (b' - conj(beta)) D`, which only couples a column to lower Fock
/// indices and therefore stays exact under truncation.
fn displacement_columns(beta: C64, n_max: FockDim) -> Array2<C64> {
    let n = n_max.get();
    let mut d = Array2::zeros((n, n));
    let col0 = hilbert::coherent_amplitudes_raw(beta, n_max);
    for m in 0..n {
        d[[m, 0]] = col0[m];
    }
    let bc = beta.conj();
    for k in 0..n - 1 {
        let inv = 1.0 / ((k + 1) as f64).sqrt();
        for m in 0..n {
            let mut v = -bc * d[[m, k]];
            if m > 0 {
                v += (m as f64).sqrt() * d[[m - 1, k]];
            }
            d[[m, k + 1]] = v * inv;
        }
    }
    d
}

/// Single Wigner sample at phase-space point `(x, p)`.
pub fn wigner_point(rho: &DensityMatrix, x: f64, p: f64) -> Result<f64> {
    let n_max = FockDim::new(rho.dim())?;
    Ok(wigner_point_inner(rho, &displacement_columns(C64::new(2.0 * x, 2.0 * p), n_max)))
}

fn wigner_point_inner(rho: &DensityMatrix, d: &Array2<C64>) -> f64 {
    let n = rho.dim();
    let m = rho.mat();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        for j in 0..n {
            acc += sign * m[[i, j]] * d[[j, i]];
        }
    }
    2.0 / std::f64::consts::PI * acc.re
}

/// Samples the Wigner function of a mechanical state over `spec`.
pub fn wigner_with(rho: &DensityMatrix, spec: &GridSpec, strategy: Strategy) -> Result<WignerGrid> {
    let n_max = FockDim::new(rho.dim())?;
    let xs = spec.x_axis();
    let ps = spec.p_axis();
    let rows = exec::map_indexed(xs.len(), strategy, |i| {
        let x = xs[i];
        ps.iter()
            .map(|&p| {
                let d = displacement_columns(C64::new(2.0 * x, 2.0 * p), n_max);
                wigner_point_inner(rho, &d)
            })
            .collect::<Vec<f64>>()
    });
    let mut values = Array2::zeros((xs.len(), ps.len()));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    Ok(WignerGrid { x: xs, p: ps, values })
}

pub fn wigner(rho: &DensityMatrix, spec: &GridSpec) -> Result<WignerGrid> {
    wigner_with(rho, spec, Strategy::default())
}

/// `l1` norm of coherence in the Fock basis: sum of all off-diagonal moduli.
pub fn coherence_l1(rho: &DensityMatrix) -> f64 {
    let n = rho.dim();
    let m = rho.mat();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += m[[i, j]].norm();
            }
        }
    }
    acc
}

/// Renormalized `{|0>, |1>}` block of a mechanical state. Fails with
/// [`Error::SubspaceLeakage`] if more than `leak_tol` of the population sits
/// outside the qubit subspace.
pub fn qubit_block(rho: &DensityMatrix, leak_tol: f64) -> Result<DensityMatrix> {
    let n = rho.dim();
    if n < 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: n });
    }
    let m = rho.mat();
    let inside = (m[[0, 0]] + m[[1, 1]]).re;
    let outside = (rho.trace().re - inside).max(0.0);
    if outside > leak_tol {
        return Err(Error::SubspaceLeakage(outside));
    }
    let mut block: Array2<C64> = Array2::zeros((2, 2));
    for i in 0..2 {
        for j in 0..2 {
            block[[i, j]] = m[[i, j]] / inside;
        }
    }
    DensityMatrix::new(block)
}

/// Quadrature means `(<x>, <p>)` of a mechanical state.
pub fn quadrature_means(rho: &DensityMatrix) -> Result<(f64, f64)> {
    let n_max = FockDim::new(rho.dim())?;
    let x = hilbert::expectation(rho, &hilbert::position(n_max))?.re;
    let p = hilbert::expectation(rho, &hilbert::momentum(n_max))?.re;
    Ok((x, p))
}

/// Qubit coherence recovered from the quadratures alone,
/// `C = 2 sqrt(<x>^2 + <p>^2)`; valid only inside the `{|0>, |1>}` subspace,
/// where `<b> = rho_10` so the two routes agree identically.
pub fn coherence_from_quadratures(rho: &DensityMatrix, leak_tol: f64) -> Result<f64> {
    let n = rho.dim();
    let inside = (rho.mat()[[0, 0]] + rho.mat()[[1, 1]]).re;
    let outside = (rho.trace().re - inside).max(0.0);
    if n > 2 && outside > leak_tol {
        return Err(Error::SubspaceLeakage(outside));
    }
    let (x, p) = quadrature_means(rho)?;
    Ok(2.0 * (x * x + p * p).sqrt())
}

/// Diagonal of the mechanical state: phonon number populations.
pub fn phonon_distribution(rho: &DensityMatrix) -> Vec<f64> {
    (0..rho.dim()).map(|i| rho.mat()[[i, i]].re).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureReport {
    pub x_mean: f64,
    pub p_mean: f64,
    /// Position amplification relative to the bare displacement scale.
    pub q_factor: f64,
    /// Momentum amplification relative to the bare displacement scale.
    pub p_factor: f64,
}

/// Post-selected quadrature amplification, `Q = <x>/lambda` and
/// `P = 2 <p>/lambda`; the unselected displaced state has `<x> <= 2 lambda`,
/// so factors well above 2 signal genuine amplification.
pub fn amplification_factors(rho: &DensityMatrix, lambda: f64) -> Result<QuadratureReport> {
    if lambda == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let (x, p) = quadrature_means(rho)?;
    Ok(QuadratureReport { x_mean: x, p_mean: p, q_factor: x / lambda, p_factor: 2.0 * p / lambda })
}

/// Convenience: coherent-state mechanical density matrix for tests and
/// presets.
pub fn coherent_density(alpha: C64, n_max: FockDim, leak_tol: f64) -> Result<DensityMatrix> {
    let (ket, _) = hilbert::coherent_ket(alpha, n_max, leak_tol)?;
    Ok(ket.to_density())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Strategy;
    use crate::hilbert::{fock_ket, Ket};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn fd(n: usize) -> FockDim {
        FockDim::new(n).unwrap()
    }

    #[test]
    fn vacuum_wigner_is_gaussian() {
        let rho = fock_ket(0, fd(12)).to_density();
        let w0 = wigner_point(&rho, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(w0, 2.0 / PI, epsilon = 1e-12);
        let w1 = wigner_point(&rho, 0.5, -0.3).unwrap();
        assert_abs_diff_eq!(w1, 2.0 / PI * (-2.0f64 * (0.25 + 0.09)).exp(), epsilon = 1e-12);
    }

    #[test]
    fn fock_one_is_negative_at_origin() {
        let rho = fock_ket(1, fd(12)).to_density();
        let w0 = wigner_point(&rho, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(w0, -2.0 / PI, epsilon = 1e-12);
    }

    #[test]
    fn coherent_wigner_is_shifted_gaussian() {
        let alpha = C64::new(0.8, -0.4);
        let rho = coherent_density(alpha, fd(24), 1e-10).unwrap();
        let w = wigner_point(&rho, 0.8, -0.4).unwrap();
        assert_abs_diff_eq!(w, 2.0 / PI, epsilon = 1e-9);
        let off = wigner_point(&rho, 0.3, 0.1).unwrap();
        let d2 = (0.8f64 - 0.3).powi(2) + (-0.4f64 - 0.1).powi(2);
        assert_abs_diff_eq!(off, 2.0 / PI * (-2.0 * d2).exp(), epsilon = 1e-9);
    }

    #[test]
    fn grid_normalizes_and_marginalizes() {
        let rho = fock_ket(1, fd(12)).to_density();
        let grid = wigner(&rho, &GridSpec::default()).unwrap();
        assert_abs_diff_eq!(grid.integral(), 1.0, epsilon = 1e-3);
        // P_1(x) = (4 x^2) sqrt(2/pi) e^{-2x^2} in these units.
        let marg = grid.marginal_x();
        for (i, &x) in grid.x.iter().enumerate() {
            let expect = 4.0 * x * x * (2.0 / PI).sqrt() * (-2.0 * x * x).exp();
            assert_abs_diff_eq!(marg[i], expect, epsilon = 1e-4);
        }
        assert!(grid.min().0 < -0.5);
        assert!(grid.negative_volume() > 0.0);
    }

    #[test]
    fn strategies_match_bitwise() {
        let rho = fock_ket(2, fd(10)).to_density();
        let spec = GridSpec::square(2.0, 41);
        let a = wigner_with(&rho, &spec, Strategy::Sequential).unwrap();
        let b = wigner_with(&rho, &spec, Strategy::Parallel).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn qubit_block_guards_leakage() {
        let rho = fock_ket(2, fd(8)).to_density();
        assert!(matches!(qubit_block(&rho, 1e-3), Err(Error::SubspaceLeakage(_))));
        assert!(matches!(
            coherence_from_quadratures(&rho, 1e-3),
            Err(Error::SubspaceLeakage(_))
        ));
    }

    #[test]
    fn amplification_rejects_zero_coupling() {
        let rho = fock_ket(0, fd(4)).to_density();
        assert!(matches!(amplification_factors(&rho, 0.0), Err(Error::ZeroCoupling)));
    }

    #[test]
    fn coherent_amplification_is_reference_two() {
        // Unselected conditional displacement at t = pi: alpha = 2 lambda.
        let lambda = 0.1;
        let rho = coherent_density(C64::new(2.0 * lambda, 0.0), fd(16), 1e-10).unwrap();
        let rep = amplification_factors(&rho, lambda).unwrap();
        assert_abs_diff_eq!(rep.q_factor, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.p_factor, 0.0, epsilon = 1e-9);
    }

    proptest! {
        /// Inside the qubit subspace the quadrature route and the direct l1
        /// sum give the same coherence.
        #[test]
        fn coherence_identity(a in 0.0f64..1.0, ph in 0.0f64..(2.0 * PI)) {
            let c0 = a.sqrt();
            let c1 = (1.0 - a).sqrt();
            let amps = ndarray::array![
                C64::new(c0, 0.0),
                C64::from_polar(c1, ph),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0)
            ];
            let rho = Ket::new(amps).to_density();
            let direct = coherence_l1(&rho);
            let via_quads = coherence_from_quadratures(&rho, 1e-12).unwrap();
            prop_assert!((direct - via_quads).abs() < 1e-10);
        }
    }
}
