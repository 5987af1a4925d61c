//! Closed-form zero-temperature damped dynamics.
//!
//! With mechanical damping gamma the joint state keeps its conditional
//! coherent-state structure: the branch amplitudes become
//! `beta_pm(gamma, t) = +-2i lambda (gamma - 2i)/(gamma^2 + 4) (1 - e^{-(gamma + 2i)t/2})`
//! and the spin off-diagonal blocks acquire a decoherence factor
//! `e^{-G(t)}` with `G(t) = (gamma/2) int_0^t |beta_+ - beta_-|^2 dt'`.
//! The exponent is stored non-negative and applied as a decaying factor so
//! that coherences are suppressed, never amplified.
//!
//! At `t = pi` the post-selected phonon distribution has the closed form
//! `Pr(n) = e^{-x} x^n / n! [1 + sin(theta) cos(phi) e^{c2 lambda^2} (-1)^n] / (2 P)`
//! with `x = 4 c1 lambda^2`.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::closed_form::PostSelection;
use crate::hilbert::{self, C64, DensityMatrix, FockDim};
use crate::quad::adaptive_simpson;
use crate::{Error, Result};

/// Scaled coupling, mechanical damping rate, and time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedParams {
    pub lambda: f64,
    pub gamma: f64,
    pub t: f64,
}

impl DampedParams {
    pub fn new(lambda: f64, gamma: f64, t: f64) -> Result<Self> {
        if lambda < 0.0 || gamma < 0.0 || t < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "damped parameters must be non-negative: lambda={lambda}, gamma={gamma}, t={t}"
            )));
        }
        Ok(DampedParams { lambda, gamma, t })
    }
}

/// Branch coherent amplitude `beta_pm(gamma, t)`; `sign` selects the branch.
pub fn beta(p: &DampedParams, sign: f64) -> C64 {
    beta_at(p.lambda, p.gamma, p.t, sign)
}

fn beta_at(lambda: f64, gamma: f64, t: f64, sign: f64) -> C64 {
    let i = C64::new(0.0, 1.0);
    let pre = 2.0 * i * lambda * (C64::new(gamma, -2.0)) / (gamma * gamma + 4.0);
    let decay = C64::new(1.0, 0.0) - (-C64::new(gamma, 2.0) * 0.5 * t).exp();
    pre * decay * sign
}

/// Non-negative decoherence exponent
/// `G(t) = (gamma/2) int_0^t |beta_+ - beta_-|^2 dt'`, so the spin
/// off-diagonal blocks carry the factor `e^{-G}` of magnitude <= 1.
/// Evaluated by adaptive quadrature to absolute tolerance 1e-12.
pub fn decoherence_exponent(p: &DampedParams) -> f64 {
    if p.gamma == 0.0 || p.lambda == 0.0 {
        return 0.0;
    }
    let (lambda, gamma) = (p.lambda, p.gamma);
    let f = |tp: f64| {
        let diff = beta_at(lambda, gamma, tp, 1.0) - beta_at(lambda, gamma, tp, -1.0);
        diff.norm_sqr()
    };
    0.5 * gamma * adaptive_simpson(f, 0.0, p.t, 1e-12)
}

/// Overlap `<beta_-|beta_+>`; real because `beta_- = -beta_+`.
fn branch_overlap(p: &DampedParams) -> f64 {
    (-2.0 * beta(p, 1.0).norm_sqr()).exp()
}

/// Probability of the spin post-selection under damping,
/// `P = [1 + sin(theta) Re(e^{-G} e^{i phi} <beta_-|beta_+>)] / 2`.
pub fn postselection_probability(p: &DampedParams, s: &PostSelection) -> f64 {
    let g = decoherence_exponent(p);
    0.5 * (1.0 + s.theta.sin() * s.phi.cos() * (-g).exp() * branch_overlap(p))
}

/// The joint spin (x) Fock density matrix of the damped evolution.
pub fn joint_state_damped(p: &DampedParams, n_max: FockDim, leak_tol: f64) -> Result<DensityMatrix> {
    let n = n_max.get();
    let (kp, _) = hilbert::coherent_ket(beta(p, 1.0), n_max, leak_tol)?;
    let (km, _) = hilbert::coherent_ket(beta(p, -1.0), n_max, leak_tol)?;
    let decay = C64::new((-decoherence_exponent(p)).exp(), 0.0);
    let mut mat = Array2::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            let pp = kp.amps()[i] * kp.amps()[j].conj();
            let mm = km.amps()[i] * km.amps()[j].conj();
            let pm = kp.amps()[i] * km.amps()[j].conj() * decay;
            let mp = km.amps()[i] * kp.amps()[j].conj() * decay;
            mat[[i, j]] = 0.5 * pp;
            mat[[i, n + j]] = 0.5 * pm;
            mat[[n + i, j]] = 0.5 * mp;
            mat[[n + i, n + j]] = 0.5 * mm;
        }
    }
    DensityMatrix::new(mat)
}

/// Post-selected mechanical density matrix under damping, with the outcome
/// probability, for the standard `|+x>` pre-selection.
pub fn postselected_state_damped(
    p: &DampedParams,
    s: &PostSelection,
    n_max: FockDim,
    leak_tol: f64,
) -> Result<(DensityMatrix, f64)> {
    postselected_state_damped_with_pre(p, &PostSelection::new(PI / 2.0, 0.0), s, n_max, leak_tol)
}

/// As [`postselected_state_damped`] but with an arbitrary spin pre-selection
/// (used by the jittered-preparation studies). The up branch of the
/// pre-selection rides on `|beta_+>`, the down branch on `|beta_->`, and
/// the inter-branch coherence carries the decoherence factor.
pub fn postselected_state_damped_with_pre(
    p: &DampedParams,
    pre: &PostSelection,
    post: &PostSelection,
    n_max: FockDim,
    leak_tol: f64,
) -> Result<(DensityMatrix, f64)> {
    let n = n_max.get();
    let (kp, _) = hilbert::coherent_ket(beta(p, 1.0), n_max, leak_tol)?;
    let (km, _) = hilbert::coherent_ket(beta(p, -1.0), n_max, leak_tol)?;
    let c = pre.spin_ket();
    let f = post.spin_ket();
    // Amplitude of each branch after projection: conj(f_s) c_s.
    let g_up = f.amps()[0].conj() * c.amps()[0];
    let g_dn = f.amps()[1].conj() * c.amps()[1];
    let decay = (-decoherence_exponent(p)).exp();
    let w_pp = g_up.norm_sqr();
    let w_mm = g_dn.norm_sqr();
    let w_pm = g_up * g_dn.conj() * decay;
    let mut mat: Array2<C64> = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let pp = kp.amps()[i] * kp.amps()[j].conj();
            let mm = km.amps()[i] * km.amps()[j].conj();
            let pm = kp.amps()[i] * km.amps()[j].conj();
            let mp = km.amps()[i] * kp.amps()[j].conj();
            mat[[i, j]] =
                C64::new(w_pp, 0.0) * pp + C64::new(w_mm, 0.0) * mm + w_pm * pm + w_pm.conj() * mp;
        }
    }
    let probability: f64 = (0..n).map(|i| mat[[i, i]].re).sum();
    if probability < 1e-15 {
        return Err(Error::DegeneratePostselection(probability));
    }
    let rho = DensityMatrix::new(mat.mapv(|z| z / probability))?;
    Ok((rho, probability))
}

/// `c1 = (e^{-pi gamma/2} + 1)^2 / (gamma^2 + 4)`.
pub fn c1(gamma: f64) -> f64 {
    ((-PI * gamma / 2.0).exp() + 1.0).powi(2) / (gamma * gamma + 4.0)
}

/// `c2` coefficient of the `t = pi` phonon distribution; non-positive, and
/// `e^{c2 lambda^2}` reproduces the decoherence factor `e^{-G(pi)}`.
pub fn c2(gamma: f64) -> f64 {
    let g2 = gamma * gamma;
    8.0 * (-PI * gamma).exp() / (g2 + 4.0).powi(2)
        * (4.0 * (PI * gamma / 2.0).exp() * g2 + g2
            - (PI * gamma).exp() * (-3.0 * g2 + PI * (g2 + 4.0) * gamma + 4.0)
            + 4.0)
}

/// Analytic phonon distribution `Pr(n)` at `t = pi`. Rejects other times;
/// the closed form is derived there.
pub fn phonon_distribution_analytic(p: &DampedParams, s: &PostSelection, n: usize) -> Result<f64> {
    if (p.t - PI).abs() > 1e-12 {
        return Err(Error::NotAtPi(p.t));
    }
    let l2 = p.lambda * p.lambda;
    let x = 4.0 * c1(p.gamma) * l2;
    let sc = s.theta.sin() * s.phi.cos();
    let decay = (c2(p.gamma) * l2).exp();
    // 2P in the same closed form, so the distribution sums to exactly 1.
    let two_p = 1.0 + sc * decay * (-2.0 * x).exp();
    if two_p / 2.0 < 1e-15 {
        return Err(Error::DegeneratePostselection(two_p / 2.0));
    }
    let mut poisson = (-x).exp();
    for k in 1..=n {
        poisson *= x / k as f64;
    }
    let parity = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(poisson * (1.0 + sc * decay * parity) / two_p)
}
