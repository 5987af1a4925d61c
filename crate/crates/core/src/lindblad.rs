//! Numeric integration of the full thermal master equation on spin (x) Fock.
//!
//! `drho/dt = -i[H, rho] + gamma(1+nm) D[b] + gamma nm D[b'] +
//!  G(1+nq) D[s-] + G nq D[s+] + (gphi/2) D[sz]`, with
//! `H = b'b - lambda sz (b' + b)` and `D[O] = (1/2)(2 O rho O' - {O'O, rho})`.
//!
//! The right-hand side exploits the sparsity of the ladder and spin
//! operators: each term is an O(dim^2) stencil instead of a dense matrix
//! product, which is what makes Monte-Carlo batches of full evolutions
//! cheap. A dense-operator reference implementation lives in the tests as
//! the correctness oracle.
//!
//! All operators are the truncated ones, so the generator is exactly trace
//! preserving on the truncated space; the tail check guards against the
//! truncation becoming visible.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::closed_form::PostSelection;
use crate::hilbert::{self, C64, DensityMatrix, FockDim, Ket};
use crate::{Error, Result};

/// Scaled decoherence rates and thermal occupancies. The occupancies are the
/// precomputed Planck values; spin and oscillator baths are treated as
/// independent inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceRates {
    /// Mechanical damping rate.
    pub gamma: f64,
    /// Spin relaxation rate.
    pub big_gamma: f64,
    /// Spin pure dephasing rate.
    pub gamma_phi: f64,
    /// Thermal occupancy of the mechanical bath.
    pub nbar_m: f64,
    /// Thermal occupancy of the spin bath.
    pub nbar_q: f64,
}

impl DecoherenceRates {
    pub fn new(gamma: f64, big_gamma: f64, gamma_phi: f64, nbar_m: f64, nbar_q: f64) -> Result<Self> {
        for (name, v) in [
            ("gamma", gamma),
            ("Gamma", big_gamma),
            ("gamma_phi", gamma_phi),
            ("nbar_m", nbar_m),
            ("nbar_q", nbar_q),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("rate {name} = {v} must be >= 0")));
            }
        }
        Ok(DecoherenceRates { gamma, big_gamma, gamma_phi, nbar_m, nbar_q })
    }

    pub fn none() -> Self {
        DecoherenceRates { gamma: 0.0, big_gamma: 0.0, gamma_phi: 0.0, nbar_m: 0.0, nbar_q: 0.0 }
    }

    /// Mechanical damping only, zero-temperature bath.
    pub fn mechanical(gamma: f64) -> Self {
        DecoherenceRates { gamma, ..DecoherenceRates::none() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Classic fixed-step fourth-order Runge-Kutta.
    FixedRk4 { dt: f64 },
    /// Embedded Runge-Kutta-Fehlberg 4(5) pair with absolute error control;
    /// useful when dephasing dominates and stiffness shortens the stable
    /// step.
    AdaptiveRkf45 { tol: f64, dt_initial: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub n_max: FockDim,
    pub method: Method,
    /// Maximum allowed population in the top two Fock levels.
    pub tail_tolerance: f64,
}

impl SolverConfig {
    /// Default fixed-step configuration: dt = pi/2000, tail tolerance 1e-8,
    /// n_max 16 for occupancies up to 10 and 32 beyond (tail-checked, so a
    /// bad guess aborts instead of silently truncating).
    pub fn default_for(nbar_m: f64) -> Self {
        let n = if nbar_m > 10.0 { 32 } else { 16 };
        SolverConfig {
            n_max: FockDim::new(n).expect("static dims"),
            method: Method::FixedRk4 { dt: PI / 2000.0 },
            tail_tolerance: 1e-8,
        }
    }

    pub fn with_n_max(mut self, n_max: FockDim) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.method = Method::FixedRk4 { dt };
        self
    }
}

/// Precomputed stencil coefficients for the master-equation generator.
pub struct Liouvillian {
    n: usize,
    lambda: f64,
    rates: DecoherenceRates,
    /// sq[k] = sqrt(k), k = 0..=n.
    sq: Vec<f64>,
    /// Diagonal of the truncated b b' operator.
    w_heat: Vec<f64>,
}

impl Liouvillian {
    pub fn new(n_max: FockDim, lambda: f64, rates: DecoherenceRates) -> Self {
        let n = n_max.get();
        let sq: Vec<f64> = (0..=n).map(|k| (k as f64).sqrt()).collect();
        let w_heat: Vec<f64> =
            (0..n).map(|k| if k < n - 1 { (k + 1) as f64 } else { 0.0 }).collect();
        Liouvillian { n, lambda, rates, sq, w_heat }
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Writes `drho/dt` into `out`. Both matrices are `2n x 2n` on
    /// spin (x) Fock.
    pub fn rhs(&self, rho: &Array2<C64>, out: &mut Array2<C64>) {
        let n = self.n;
        let d = 2 * n;
        debug_assert_eq!(rho.dim(), (d, d));
        let r = rho.as_slice().expect("contiguous rho");
        let o = out.as_slice_mut().expect("contiguous out");

        let g_down = self.rates.gamma * (1.0 + self.rates.nbar_m);
        let g_up = self.rates.gamma * self.rates.nbar_m;
        let q_down = self.rates.big_gamma * (1.0 + self.rates.nbar_q);
        let q_up = self.rates.big_gamma * self.rates.nbar_q;
        let gphi = self.rates.gamma_phi;
        let lambda = self.lambda;
        let i_unit = C64::new(0.0, 1.0);

        for sr in 0..2usize {
            let sgn_r = if sr == 0 { 1.0 } else { -1.0 };
            for sc in 0..2usize {
                let sgn_c = if sc == 0 { 1.0 } else { -1.0 };
                // Anticommutator coefficients of the spin dissipators plus
                // dephasing, constant on each block.
                let mut spin_decay = 0.0;
                if sr == 0 {
                    spin_decay += 0.5 * q_down;
                } else {
                    spin_decay += 0.5 * q_up;
                }
                if sc == 0 {
                    spin_decay += 0.5 * q_down;
                } else {
                    spin_decay += 0.5 * q_up;
                }
                if sr != sc {
                    spin_decay += gphi;
                }

                let row0 = sr * n;
                let col0 = sc * n;
                for nn in 0..n {
                    let i = row0 + nn;
                    for mm in 0..n {
                        let j = col0 + mm;
                        let here = r[i * d + j];

                        // -i [H, rho]
                        let mut comm = C64::new(nn as f64 - mm as f64, 0.0) * here;
                        if nn > 0 {
                            comm -= lambda * sgn_r * self.sq[nn] * r[(i - 1) * d + j];
                        }
                        if nn + 1 < n {
                            comm -= lambda * sgn_r * self.sq[nn + 1] * r[(i + 1) * d + j];
                        }
                        if mm > 0 {
                            comm += lambda * sgn_c * self.sq[mm] * r[i * d + (j - 1)];
                        }
                        if mm + 1 < n {
                            comm += lambda * sgn_c * self.sq[mm + 1] * r[i * d + (j + 1)];
                        }
                        let mut acc = -i_unit * comm;

                        // gamma (1 + nbar) D[b]
                        if g_down != 0.0 {
                            let mut t = -0.5 * (nn + mm) as f64 * here;
                            if nn + 1 < n && mm + 1 < n {
                                t += self.sq[nn + 1] * self.sq[mm + 1] * r[(i + 1) * d + (j + 1)];
                            }
                            acc += g_down * t;
                        }
                        // gamma nbar D[b']
                        if g_up != 0.0 {
                            let mut t = -0.5 * (self.w_heat[nn] + self.w_heat[mm]) * here;
                            if nn > 0 && mm > 0 {
                                t += self.sq[nn] * self.sq[mm] * r[(i - 1) * d + (j - 1)];
                            }
                            acc += g_up * t;
                        }

                        acc -= spin_decay * here;
                        o[i * d + j] = acc;
                    }
                }
            }
        }

        // Spin jump sandwich terms couple the diagonal spin blocks.
        if q_down != 0.0 || q_up != 0.0 {
            for nn in 0..n {
                for mm in 0..n {
                    let up = nn * d + mm;
                    let down = (n + nn) * d + (n + mm);
                    if q_down != 0.0 {
                        o[down] += q_down * r[up];
                    }
                    if q_up != 0.0 {
                        o[up] += q_up * r[down];
                    }
                }
            }
        }
    }
}

/// One evaluation of the master-equation generator.
pub fn liouvillian_rhs(
    rho: &DensityMatrix,
    lambda: f64,
    rates: &DecoherenceRates,
) -> Result<DensityMatrix> {
    let d = rho.dim();
    if !d.is_multiple_of(2) || d < 4 {
        return Err(Error::DimensionMismatch { expected: d.max(4), got: d });
    }
    let liouv = Liouvillian::new(FockDim::new(d / 2)?, lambda, *rates);
    let mut out = Array2::zeros((d, d));
    liouv.rhs(rho.mat(), &mut out);
    DensityMatrix::new(out)
}

/// `|psi_q><psi_q| (x) |0><0|` with the spin pre-selected at the given
/// angles; the protocol's default pre-selection is `theta = pi/2, phi = 0`.
pub fn initial_state(pre: &PostSelection, n_max: FockDim) -> DensityMatrix {
    let joint = hilbert::tensor_ket(&pre.spin_ket(), &hilbert::fock_ket(0, n_max));
    joint.to_density()
}

pub fn default_preselection() -> PostSelection {
    PostSelection::new(PI / 2.0, 0.0)
}

/// Integrates the master equation from `rho0` to `t_final`.
pub fn evolve(
    rho0: &DensityMatrix,
    t_final: f64,
    lambda: f64,
    rates: &DecoherenceRates,
    cfg: &SolverConfig,
) -> Result<DensityMatrix> {
    let n = cfg.n_max.get();
    let d = 2 * n;
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: rho0.dim() });
    }
    let liouv = Liouvillian::new(cfg.n_max, lambda, *rates);
    let trace0 = rho0.trace().re;
    let mut rho = rho0.mat().clone();

    match cfg.method {
        Method::FixedRk4 { dt } => {
            if dt <= 0.0 {
                return Err(Error::InvalidConfig(format!("dt = {dt} must be positive")));
            }
            let n_steps = (t_final / dt).ceil().max(1.0) as usize;
            let h = t_final / n_steps as f64;
            let mut k1 = Array2::zeros((d, d));
            let mut k2 = Array2::zeros((d, d));
            let mut k3 = Array2::zeros((d, d));
            let mut k4 = Array2::zeros((d, d));
            let mut tmp = Array2::zeros((d, d));
            for step in 0..n_steps {
                liouv.rhs(&rho, &mut k1);
                stage(&rho, &k1, 0.5 * h, &mut tmp);
                liouv.rhs(&tmp, &mut k2);
                stage(&rho, &k2, 0.5 * h, &mut tmp);
                liouv.rhs(&tmp, &mut k3);
                stage(&rho, &k3, h, &mut tmp);
                liouv.rhs(&tmp, &mut k4);
                let w = h / 6.0;
                ndarray::Zip::from(&mut rho)
                    .and(&k1)
                    .and(&k2)
                    .and(&k3)
                    .and(&k4)
                    .for_each(|r, &a, &b, &c, &e| {
                        *r += w * (a + 2.0 * b + 2.0 * c + e);
                    });
                if step % 200 == 199 {
                    check_tail(&rho, n, cfg.tail_tolerance)?;
                }
            }
        }
        Method::AdaptiveRkf45 { tol, dt_initial } => {
            rkf45(&liouv, &mut rho, t_final, tol, dt_initial)?;
        }
    }

    check_tail(&rho, n, cfg.tail_tolerance)?;
    let out = DensityMatrix::new(rho)?;
    let drift = (out.trace().re - trace0).abs();
    if drift > 1e-8 {
        return Err(Error::TraceDrift(drift));
    }
    Ok(out)
}

fn stage(rho: &Array2<C64>, k: &Array2<C64>, h: f64, out: &mut Array2<C64>) {
    ndarray::Zip::from(out).and(rho).and(k).for_each(|o, &r, &kk| {
        *o = r + h * kk;
    });
}

fn check_tail(rho: &Array2<C64>, n: usize, tol: f64) -> Result<()> {
    let mut tail = 0.0;
    for s in 0..2 {
        for k in [n - 2, n - 1] {
            let i = s * n + k;
            tail += rho[[i, i]].re;
        }
    }
    if tail > tol {
        return Err(Error::TailOverflow { population: tail, tolerance: tol });
    }
    Ok(())
}

/// Runge-Kutta-Fehlberg 4(5) with absolute error control on the max norm.
fn rkf45(liouv: &Liouvillian, rho: &mut Array2<C64>, t_final: f64, tol: f64, dt0: f64) -> Result<()> {
    const A: [[f64; 5]; 5] = [
        [0.25, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
        [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
        [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
        [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
    ];
    const B5: [f64; 6] =
        [16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0];
    const B4: [f64; 6] =
        [25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -1.0 / 5.0, 0.0];

    let d = rho.nrows();
    let mut k: Vec<Array2<C64>> = (0..6).map(|_| Array2::zeros((d, d))).collect();
    let mut tmp = Array2::zeros((d, d));
    let mut t = 0.0f64;
    let mut h = dt0.min(t_final);
    while t < t_final {
        if t + h > t_final {
            h = t_final - t;
        }
        liouv.rhs(rho, &mut k[0]);
        for (s, a_row) in A.iter().enumerate() {
            tmp.assign(rho);
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                let c = h * a_row[j];
                if c != 0.0 {
                    ndarray::Zip::from(&mut tmp).and(kj).for_each(|o, &v| *o += c * v);
                }
            }
            let (head, rest) = k.split_at_mut(s + 1);
            let _ = head;
            liouv.rhs(&tmp, &mut rest[0]);
        }
        // Error estimate: difference of the 4th and 5th order solutions.
        let mut err = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut e = C64::new(0.0, 0.0);
                for (s, ks) in k.iter().enumerate() {
                    e += (B5[s] - B4[s]) * ks[[i, j]];
                }
                err = err.max((h * e).norm());
            }
        }
        if err <= tol || h <= 1e-12 {
            if h <= 1e-12 && err > tol {
                return Err(Error::StepUnderflow(t));
            }
            for (s, ks) in k.iter().enumerate() {
                let c = h * B5[s];
                if c != 0.0 {
                    ndarray::Zip::from(&mut *rho).and(ks).for_each(|o, &v| *o += c * v);
                }
            }
            t += h;
        }
        let scale = if err > 0.0 { 0.9 * (tol / err).powf(0.2) } else { 2.0 };
        h *= scale.clamp(0.2, 2.0);
    }
    Ok(())
}

/// Projects the spin onto the post-selection target,
/// `rho_m = <psi_f|rho|psi_f> / P`, returning the reduced state and the
/// outcome probability `P`.
pub fn postselect_spin(rho: &DensityMatrix, s: &PostSelection) -> Result<(DensityMatrix, f64)> {
    let d = rho.dim();
    if !d.is_multiple_of(2) {
        return Err(Error::DimensionMismatch { expected: d + 1, got: d });
    }
    let n = d / 2;
    let spin: Ket = s.spin_ket();
    let f = [spin.amps()[0], spin.amps()[1]];
    let mut mat: Array2<C64> = Array2::zeros((n, n));
    for nn in 0..n {
        for mm in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for (sr, fr) in f.iter().enumerate() {
                for (sc, fc) in f.iter().enumerate() {
                    acc += fr.conj() * rho.mat()[[sr * n + nn, sc * n + mm]] * fc;
                }
            }
            mat[[nn, mm]] = acc;
        }
    }
    let prob: f64 = (0..n).map(|i| mat[[i, i]].re).sum();
    if prob < 1e-15 {
        return Err(Error::DegeneratePostselection(prob));
    }
    Ok((DensityMatrix::new(mat.mapv(|z| z / prob))?, prob))
}

/// `sqrt(<psi_m| rho_m |psi_m>)` against the target `(|0> + |1>)/sqrt(2)`.
pub fn fidelity_to_plus_qubit(rho_m: &DensityMatrix) -> f64 {
    let m = rho_m.mat();
    let v = 0.5 * (m[[0, 0]] + m[[0, 1]] + m[[1, 0]] + m[[1, 1]]).re;
    v.clamp(0.0, 1.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{joint_state_unitary, CouplingParams};
    use crate::damped::{self, DampedParams};
    use crate::hilbert::{
        annihilation, creation, identity_op, sigma_minus, sigma_plus, sigma_z, tensor_op,
        trace_distance, Operator,
    };
    use approx::assert_abs_diff_eq;

    fn fd(n: usize) -> FockDim {
        FockDim::new(n).unwrap()
    }

    /// Dense reference generator built from explicit operator products.
    fn dense_rhs(rho: &Array2<C64>, lambda: f64, rates: &DecoherenceRates) -> Array2<C64> {
        let n = rho.nrows() / 2;
        let nf = fd(n);
        let b = tensor_op(&identity_op(2), &annihilation(nf));
        let bd = tensor_op(&identity_op(2), &creation(nf));
        let sz = tensor_op(&sigma_z(), &identity_op(n));
        let sm = tensor_op(&sigma_minus(), &identity_op(n));
        let sp = tensor_op(&sigma_plus(), &identity_op(n));
        let h = bd.dot(&b).sub(&sz.dot(&bd.add(&b)).scale(C64::new(lambda, 0.0)));

        let rho_op = Operator::new(rho.clone()).unwrap();
        let commutator = h.dot(&rho_op).sub(&rho_op.dot(&h));
        let mut out = commutator.mat() * C64::new(0.0, -1.0);

        let mut dissip = |op: &Operator, rate: f64| {
            if rate == 0.0 {
                return;
            }
            let od = op.dagger();
            let odo = od.dot(op);
            let term = op.dot(&rho_op).dot(&od).mat()
                - (odo.dot(&rho_op).mat() + rho_op.dot(&odo).mat()).mapv(|z| z * 0.5);
            out = &out + &term.mapv(|z| z * rate);
        };
        dissip(&b, rates.gamma * (1.0 + rates.nbar_m));
        dissip(&bd, rates.gamma * rates.nbar_m);
        dissip(&sm, rates.big_gamma * (1.0 + rates.nbar_q));
        dissip(&sp, rates.big_gamma * rates.nbar_q);
        dissip(&sz, rates.gamma_phi / 2.0);
        out
    }

    fn random_hermitian(d: usize, seed: u64) -> Array2<C64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m: Array2<C64> = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                m[[i, j]] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let herm = (&m + &m.t().mapv(|z| z.conj())).mapv(|z| 0.5 * z);
        herm
    }

    #[test]
    fn stencil_matches_dense_reference() {
        let rates =
            DecoherenceRates::new(1e-2, 3e-3, 2e-3, 4.0, 1.5).unwrap();
        let rho = random_hermitian(12, 7);
        let liouv = Liouvillian::new(fd(6), 0.17, rates);
        let mut fast = Array2::zeros((12, 12));
        liouv.rhs(&rho, &mut fast);
        let slow = dense_rhs(&rho, 0.17, &rates);
        let mut worst = 0.0f64;
        for i in 0..12 {
            for j in 0..12 {
                worst = worst.max((fast[[i, j]] - slow[[i, j]]).norm());
            }
        }
        assert!(worst < 1e-12, "stencil deviates from dense generator by {worst:.3e}");
    }

    #[test]
    fn rhs_trace_free() {
        let rates = DecoherenceRates::new(0.02, 0.01, 0.005, 10.0, 10.0).unwrap();
        let rho = random_hermitian(16, 3);
        let liouv = Liouvillian::new(fd(8), 0.1, rates);
        let mut out = Array2::zeros((16, 16));
        liouv.rhs(&rho, &mut out);
        let tr: C64 = (0..16).map(|i| out[[i, i]]).sum();
        assert!(tr.norm() < 1e-12, "trace of rhs {tr}");
    }

    #[test]
    fn rhs_stationary_without_coupling() {
        // lambda = 0, no rates: product eigenprojectors of H are stationary.
        let rho = initial_state(&PostSelection::new(0.0, 0.0), fd(4));
        let out = liouvillian_rhs(&rho, 0.0, &DecoherenceRates::none()).unwrap();
        let mx = out.mat().iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(mx < 1e-14);
    }

    #[test]
    fn unitary_evolution_matches_closed_form() {
        let lambda = 0.1;
        let cfg = SolverConfig::default_for(0.0);
        let rho0 = initial_state(&default_preselection(), cfg.n_max);
        let rho = evolve(&rho0, PI, lambda, &DecoherenceRates::none(), &cfg).unwrap();
        let p = CouplingParams::new(lambda, PI).unwrap();
        let target = joint_state_unitary(&p, cfg.n_max, 1e-10).unwrap().to_density();
        let d = trace_distance(&rho, &target).unwrap();
        assert!(d < 1e-6, "trace distance {d:.3e}");
    }

    #[test]
    fn spin_relaxation_matches_bloch_solution() {
        let rates = DecoherenceRates::new(0.0, 0.05, 0.0, 0.0, 0.0).unwrap();
        let cfg = SolverConfig {
            n_max: fd(4),
            method: Method::FixedRk4 { dt: PI / 2000.0 },
            tail_tolerance: 1e-8,
        };
        let rho0 = initial_state(&default_preselection(), cfg.n_max);
        let t = 3.0;
        let rho = evolve(&rho0, t, 0.0, &rates, &cfg).unwrap();
        let sz = tensor_op(&sigma_z(), &identity_op(4));
        let val = hilbert::expectation(&rho, &sz).unwrap().re;
        // <sz>(t) = -1 + e^{-Gamma t} (<sz>(0) + 1), <sz>(0) = 0.
        let expect = -1.0 + (-rates.big_gamma * t).exp();
        assert_abs_diff_eq!(val, expect, epsilon = 1e-8);
    }

    #[test]
    fn damped_evolution_matches_analytic_kernel() {
        let (lambda, gamma) = (0.1, 1e-2);
        let cfg = SolverConfig::default_for(0.0);
        let rho0 = initial_state(&default_preselection(), cfg.n_max);
        let rho = evolve(&rho0, PI, lambda, &DecoherenceRates::mechanical(gamma), &cfg).unwrap();
        let p = DampedParams::new(lambda, gamma, PI).unwrap();
        let target = damped::joint_state_damped(&p, cfg.n_max, 1e-10).unwrap();
        let d = trace_distance(&rho, &target).unwrap();
        assert!(d < 1e-6, "trace distance {d:.3e}");
    }

    #[test]
    fn adaptive_matches_fixed_step() {
        let rates = DecoherenceRates::new(1e-3, 1e-4, 1e-3, 10.0, 10.0).unwrap();
        let n = fd(16);
        let rho0 = initial_state(&default_preselection(), n);
        let fixed = evolve(
            &rho0,
            PI,
            0.05,
            &rates,
            &SolverConfig { n_max: n, method: Method::FixedRk4 { dt: PI / 2000.0 }, tail_tolerance: 1e-8 },
        )
        .unwrap();
        let adaptive = evolve(
            &rho0,
            PI,
            0.05,
            &rates,
            &SolverConfig {
                n_max: n,
                method: Method::AdaptiveRkf45 { tol: 1e-10, dt_initial: PI / 100.0 },
                tail_tolerance: 1e-8,
            },
        )
        .unwrap();
        let d = trace_distance(&fixed, &adaptive).unwrap();
        assert!(d < 1e-7, "trace distance {d:.3e}");
    }

    #[test]
    fn tail_overflow_detected() {
        // A cutoff far too small for lambda = 1 displacement.
        let cfg = SolverConfig {
            n_max: fd(4),
            method: Method::FixedRk4 { dt: PI / 2000.0 },
            tail_tolerance: 1e-8,
        };
        let rho0 = initial_state(&default_preselection(), cfg.n_max);
        let res = evolve(&rho0, PI, 1.0, &DecoherenceRates::none(), &cfg);
        assert!(matches!(res, Err(Error::TailOverflow { .. })));
    }

    #[test]
    fn postselect_product_state() {
        let n = fd(6);
        let (mech, _) = hilbert::coherent_ket(C64::new(0.2, 0.1), n, 1e-10).unwrap();
        let joint = hilbert::tensor_ket(&hilbert::spin_up(), &mech).to_density();
        let (rho_m, prob) = postselect_spin(&joint, &PostSelection::new(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(prob, 1.0, epsilon = 1e-12);
        let d = trace_distance(&rho_m, &mech.to_density()).unwrap();
        assert!(d < 1e-12);

        let res = postselect_spin(&joint, &PostSelection::new(PI, 0.0));
        assert!(matches!(res, Err(Error::DegeneratePostselection(_))));
    }

    #[test]
    fn postselect_matches_closed_form_populations() {
        let p = CouplingParams::new(0.1, PI).unwrap();
        let n = fd(16);
        let joint = joint_state_unitary(&p, n, 1e-10).unwrap().to_density();
        for sol in crate::closed_form::solve_postselection_angle(&p, 0.0) {
            let (rho_m, _) =
                postselect_spin(&joint, &PostSelection::new(sol.theta, 0.0)).unwrap();
            let p0 = rho_m.mat()[[0, 0]].re;
            let p1 = rho_m.mat()[[1, 1]].re;
            assert!((p0 - p1).abs() < 1e-3, "Pr(0)={p0}, Pr(1)={p1}");
        }
    }

    #[test]
    fn fidelity_extremes() {
        let mut m: Array2<C64> = Array2::zeros((4, 4));
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            m[[i, j]] = C64::new(0.5, 0.0);
        }
        let plus = DensityMatrix::new(m.clone()).unwrap();
        assert_abs_diff_eq!(fidelity_to_plus_qubit(&plus), 1.0, epsilon = 1e-12);

        m[[0, 1]] = C64::new(-0.5, 0.0);
        m[[1, 0]] = C64::new(-0.5, 0.0);
        let minus = DensityMatrix::new(m).unwrap();
        assert_abs_diff_eq!(fidelity_to_plus_qubit(&minus), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn evolution_preserves_physicality() {
        let rates = DecoherenceRates::new(1e-3, 1e-4, 1e-3, 10.0, 10.0).unwrap();
        let cfg = SolverConfig::default_for(10.0);
        let rho0 = initial_state(&default_preselection(), cfg.n_max);
        let rho = evolve(&rho0, PI, 0.05, &rates, &cfg).unwrap();
        rho.validate().unwrap();
    }

    #[test]
    fn rk4_convergence_order_near_four() {
        let rates = DecoherenceRates::new(1e-2, 1e-3, 1e-3, 2.0, 2.0).unwrap();
        let n = fd(8);
        let rho0 = initial_state(&default_preselection(), n);
        let reference = evolve(
            &rho0,
            1.0,
            0.1,
            &rates,
            &SolverConfig { n_max: n, method: Method::FixedRk4 { dt: 1.0 / 4096.0 }, tail_tolerance: 1e-6 },
        )
        .unwrap();
        let mut errs = Vec::new();
        let steps = [16.0, 32.0, 64.0, 128.0];
        for s in steps {
            let sol = evolve(
                &rho0,
                1.0,
                0.1,
                &rates,
                &SolverConfig { n_max: n, method: Method::FixedRk4 { dt: 1.0 / s }, tail_tolerance: 1e-6 },
            )
            .unwrap();
            errs.push(trace_distance(&sol, &reference).unwrap());
        }
        // Log-log least-squares slope.
        let xs: Vec<f64> = steps.iter().map(|s| (1.0 / s).ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let xm = xs.iter().sum::<f64>() / xs.len() as f64;
        let ym = ys.iter().sum::<f64>() / ys.len() as f64;
        let slope: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - xm) * (y - ym))
            .sum::<f64>()
            / xs.iter().map(|x| (x - xm).powi(2)).sum::<f64>();
        assert!((3.7..=4.3).contains(&slope), "measured order {slope}");
    }
}
