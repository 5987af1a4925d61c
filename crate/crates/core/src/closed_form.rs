//! Lossless analytic dynamics and the equal-superposition condition.
//!
//! In absence of decoherence the joint state is an entangled pair of
//! conditionally displaced coherent states,
//! `(|up>|le> + |down>|-le>)/sqrt(2)` with `le = lambda * (1 - e^{-it})`.
//! Post-selecting the spin on `cos(theta/2)|up> + sin(theta/2)e^{i phi}|down>`
//! and truncating at one phonon leaves the mechanical qubit
//! `c0|0> + c1|1>` with `c0 ~ alpha_plus`, `c1 ~ le * alpha_minus`,
//! `alpha_pm = cos(theta/2) +- e^{-i phi} sin(theta/2)`. The equal-weight
//! condition is `|le|^2 (1 - sin(theta) cos(phi)) = 1 + sin(theta) cos(phi)`.

use std::f64::consts::TAU;

use ndarray::Array1;

use crate::hilbert::{self, C64, FockDim, Ket};
use crate::{Error, Result};

/// Scaled coupling `lambda = lambda_0 / omega_m` and dimensionless time
/// (units of `1/omega_m`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    pub lambda: f64,
    pub t: f64,
}

impl CouplingParams {
    pub fn new(lambda: f64, t: f64) -> Result<Self> {
        if lambda < 0.0 || t < 0.0 || !lambda.is_finite() || !t.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "coupling parameters must be finite and non-negative: lambda={lambda}, t={t}"
            )));
        }
        Ok(CouplingParams { lambda, t })
    }

    /// Coherent displacement amplitude `lambda * eta(t)`.
    pub fn lambda_eta(&self) -> C64 {
        eta(self.t) * self.lambda
    }
}

/// Pre/post-selection angle pair on the Bloch sphere; angles are stored
/// reduced into `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostSelection {
    pub theta: f64,
    pub phi: f64,
}

impl PostSelection {
    pub fn new(theta: f64, phi: f64) -> Self {
        PostSelection { theta: theta.rem_euclid(TAU), phi: phi.rem_euclid(TAU) }
    }

    /// The spin state `cos(theta/2)|up> + sin(theta/2) e^{i phi}|down>`.
    pub fn spin_ket(&self) -> Ket {
        let mut amps = Array1::zeros(2);
        amps[0] = C64::new((self.theta / 2.0).cos(), 0.0);
        amps[1] = C64::from_polar((self.theta / 2.0).sin(), self.phi);
        Ket::new(amps)
    }
}

/// Which of the two roots of the equal-superposition condition a theta value
/// belongs to, tagged by the sign of the relative amplitude `c1/c0` it
/// induces at `phi = 0`. The plus branch prepares `(|0> + |1>)/sqrt(2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSolution {
    pub theta: f64,
    pub branch: Branch,
}

/// Mechanical qubit after post-selection, truncated at one phonon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechQubit {
    pub c0: C64,
    pub c1: C64,
    /// The real prefactor `1 / (N sqrt(2 (1 + |le|^2)))` of the unnormalized
    /// amplitudes.
    pub norm_prefactor: f64,
    /// Probability `N^2` of the post-selection outcome.
    pub probability: f64,
}

impl MechQubit {
    pub fn branch(&self) -> Branch {
        if (self.c1 / self.c0).re >= 0.0 { Branch::Plus } else { Branch::Minus }
    }
}

/// `eta(t) = 1 - e^{-it}`.
pub fn eta(t: f64) -> C64 {
    C64::new(1.0, 0.0) - C64::from_polar(1.0, -t)
}

/// The entangled spin-mechanical state `(|up>|le> + |down>|-le>)/sqrt(2)`
/// on spin (x) Fock, with coherent states truncated at `n_max`.
pub fn joint_state_unitary(p: &CouplingParams, n_max: FockDim, leak_tol: f64) -> Result<Ket> {
    let le = p.lambda_eta();
    let (plus, _) = hilbert::coherent_ket(le, n_max, leak_tol)?;
    let (minus, _) = hilbert::coherent_ket(-le, n_max, leak_tol)?;
    let up = hilbert::tensor_ket(&hilbert::spin_up(), &plus);
    let down = hilbert::tensor_ket(&hilbert::spin_down(), &minus);
    let inv_sqrt2 = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let amps = (up.amps() + down.amps()).mapv(|z| z * inv_sqrt2);
    Ok(Ket::new(amps))
}

/// Projects the spin of a pure joint state onto the post-selection target,
/// returning the unnormalized-then-renormalized mechanical ket and the
/// outcome probability.
pub fn postselect_ket(joint: &Ket, s: &PostSelection) -> Result<(Ket, f64)> {
    let d = joint.dim();
    if !d.is_multiple_of(2) {
        return Err(Error::DimensionMismatch { expected: d + 1, got: d });
    }
    let n = d / 2;
    let c_up = C64::new((s.theta / 2.0).cos(), 0.0);
    let c_down = C64::from_polar((s.theta / 2.0).sin(), -s.phi);
    let mut amps = Array1::zeros(n);
    for k in 0..n {
        amps[k] = c_up * joint.amps()[k] + c_down * joint.amps()[n + k];
    }
    let mech = Ket::new(amps);
    let prob = mech.norm().powi(2);
    if prob < 1e-15 {
        return Err(Error::DegeneratePostselection(prob));
    }
    Ok((mech.normalized(), prob))
}

/// `alpha_pm = cos(theta/2) +- e^{-i phi} sin(theta/2)`.
pub fn alpha_pm(s: &PostSelection, sign: f64) -> C64 {
    let half = s.theta / 2.0;
    C64::new(half.cos(), 0.0) + C64::from_polar(half.sin(), -s.phi) * sign
}

/// Post-selected mechanical qubit in the one-phonon truncation.
///
/// The truncation guard rejects `|lambda eta| > 0.5` and logs a warning
/// above 0.25, where the two-phonon population reaches the percent level.
pub fn truncated_mech_qubit(p: &CouplingParams, s: &PostSelection) -> Result<MechQubit> {
    let le = p.lambda_eta();
    let le_abs = le.norm();
    if le_abs > 0.5 {
        return Err(Error::WeakCouplingExceeded(le_abs));
    }
    if le_abs > 0.25 {
        log::warn!(
            "|lambda eta| = {le_abs:.3} above 0.25; two-phonon population is no longer negligible"
        );
    }
    let a_plus = alpha_pm(s, 1.0);
    let a_minus = alpha_pm(s, -1.0);
    let u0 = a_plus;
    let u1 = le * a_minus;
    let norm_sq = u0.norm_sqr() + u1.norm_sqr();
    let probability = norm_sq / (2.0 * (1.0 + le_abs * le_abs));
    if probability < 1e-15 {
        return Err(Error::DegeneratePostselection(probability));
    }
    let norm = norm_sq.sqrt();
    Ok(MechQubit {
        c0: u0 / norm,
        c1: u1 / norm,
        norm_prefactor: 1.0 / (probability.sqrt() * (2.0 * (1.0 + le_abs * le_abs)).sqrt()),
        probability,
    })
}

/// All theta in `[0, 2pi)` satisfying the equal-superposition condition at
/// the given phi, tagged by branch. Returns an empty list when the condition
/// has no solution.
pub fn solve_postselection_angle(p: &CouplingParams, phi: f64) -> Vec<AngleSolution> {
    let le_sq = p.lambda_eta().norm_sqr();
    let target = (le_sq - 1.0) / (le_sq + 1.0);
    let cos_phi = phi.cos();
    if p.lambda == 0.0 && cos_phi.abs() > 1e-12 {
        // Degenerate limit: the condition forces sin(theta) cos(phi) = -1,
        // but the post-selection probability vanishes with lambda.
        log::warn!("lambda = 0: equal superposition requires zero outcome probability");
        let theta = if cos_phi > 0.0 { 1.5 * TAU / 2.0 } else { TAU / 4.0 };
        return vec![AngleSolution { theta, branch: branch_at(p, theta, phi) }];
    }
    if cos_phi.abs() < 1e-12 {
        return vec![];
    }
    let sin_theta = target / cos_phi;
    if sin_theta.abs() > 1.0 {
        return vec![];
    }
    let a = sin_theta.asin();
    let mut thetas = vec![a.rem_euclid(TAU), (std::f64::consts::PI - a).rem_euclid(TAU)];
    thetas.sort_by(|x, y| x.partial_cmp(y).unwrap());
    thetas.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    thetas
        .into_iter()
        .map(|theta| AngleSolution { theta, branch: branch_at(p, theta, phi) })
        .collect()
}

fn branch_at(p: &CouplingParams, theta: f64, phi: f64) -> Branch {
    let s = PostSelection::new(theta, phi);
    let ratio = p.lambda_eta() * alpha_pm(&s, -1.0) / alpha_pm(&s, 1.0);
    if p.lambda == 0.0 || ratio.re >= 0.0 { Branch::Plus } else { Branch::Minus }
}

/// Residual `|le|^2 (1 - sin(theta) cos(phi)) - (1 + sin(theta) cos(phi))`
/// of the equal-superposition condition.
pub fn superposition_residual(p: &CouplingParams, s: &PostSelection) -> f64 {
    let le_sq = p.lambda_eta().norm_sqr();
    let sc = s.theta.sin() * s.phi.cos();
    le_sq * (1.0 - sc) - (1.0 + sc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{expectation, partial_trace_spin, position};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn eta_values() {
        assert_abs_diff_eq!(eta(0.0).norm(), 0.0, epsilon = 1e-15);
        let e = eta(PI);
        assert_abs_diff_eq!(e.re, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn eta_magnitude_identity() {
        let t = 1.3;
        assert_abs_diff_eq!(
            eta(t).norm(),
            (2.0 * (1.0 - t.cos())).sqrt(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn joint_state_zero_coupling() {
        let p = CouplingParams::new(0.0, 1.0).unwrap();
        let n = FockDim::new(4).unwrap();
        let ket = joint_state_unitary(&p, n, 1e-12).unwrap();
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(ket.amps()[0].re, inv, epsilon = 1e-14);
        assert_abs_diff_eq!(ket.amps()[4].re, inv, epsilon = 1e-14);
        assert_abs_diff_eq!(ket.norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn joint_state_periodic_revival() {
        let p = CouplingParams::new(0.3, 2.0 * PI).unwrap();
        let n = FockDim::new(8).unwrap();
        let ket = joint_state_unitary(&p, n, 1e-12).unwrap();
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(ket.amps()[0].re, inv, epsilon = 1e-10);
        assert_abs_diff_eq!(ket.amps()[8].re, inv, epsilon = 1e-10);
    }

    #[test]
    fn joint_state_entangled_at_pi() {
        let p = CouplingParams::new(0.1, PI).unwrap();
        let n = FockDim::new(12).unwrap();
        let ket = joint_state_unitary(&p, n, 1e-10).unwrap();
        assert_abs_diff_eq!(ket.norm(), 1.0, epsilon = 1e-12);
        let reduced = partial_trace_spin(&ket.to_density()).unwrap();
        let x = expectation(&reduced, &position(n)).unwrap();
        assert_abs_diff_eq!(x.re, 0.0, epsilon = 1e-12);
        // Entanglement: the reduced state is mixed.
        let purity: f64 = {
            let m = reduced.mat().dot(reduced.mat());
            (0..12).map(|i| m[[i, i]].re).sum()
        };
        assert!(purity < 1.0 - 1e-4, "purity {purity}");
    }

    #[test]
    fn qubit_at_preselection_angle_zero_coupling() {
        let p = CouplingParams::new(0.0, PI).unwrap();
        let s = PostSelection::new(PI / 2.0, 0.0);
        let q = truncated_mech_qubit(&p, &s).unwrap();
        assert_abs_diff_eq!(q.c0.norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(q.c1.norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(q.probability, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn qubit_equal_superposition_at_solution() {
        let p = CouplingParams::new(0.1, PI).unwrap();
        for sol in solve_postselection_angle(&p, 0.0) {
            let q = truncated_mech_qubit(&p, &PostSelection::new(sol.theta, 0.0)).unwrap();
            assert_abs_diff_eq!(q.c0.norm_sqr(), 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(q.c1.norm_sqr(), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn qubit_pure_fock_one_at_three_half_pi() {
        let p = CouplingParams::new(0.1, PI).unwrap();
        let s = PostSelection::new(1.5 * PI, 0.0);
        let q = truncated_mech_qubit(&p, &s).unwrap();
        assert_abs_diff_eq!(q.c0.norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.c1.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn qubit_guard_rejects_strong_coupling() {
        let p = CouplingParams::new(0.5, PI).unwrap();
        let s = PostSelection::new(PI / 2.0, 0.0);
        assert!(matches!(
            truncated_mech_qubit(&p, &s),
            Err(Error::WeakCouplingExceeded(_))
        ));
    }

    #[test]
    fn solver_zero_coupling_degenerate() {
        let p = CouplingParams::new(0.0, PI).unwrap();
        let sols = solve_postselection_angle(&p, 0.0);
        assert_eq!(sols.len(), 1);
        assert_abs_diff_eq!(sols[0].theta, 1.5 * PI, epsilon = 1e-14);
    }

    #[test]
    fn solver_two_roots_and_residual() {
        let p = CouplingParams::new(0.1, PI).unwrap();
        let sols = solve_postselection_angle(&p, 0.0);
        assert_eq!(sols.len(), 2);
        // |lambda eta|^2 = 0.04, so sin(theta) = -0.96/1.04 = -12/13.
        let a = (12.0f64 / 13.0).asin();
        let expect = [PI + a, 2.0 * PI - a];
        for (sol, e) in sols.iter().zip(expect) {
            assert_abs_diff_eq!(sol.theta, e, epsilon = 1e-12);
            let r = superposition_residual(&p, &PostSelection::new(sol.theta, 0.0));
            assert!(r.abs() < 1e-12, "residual {r:.3e}");
        }
        // Branches differ and the larger theta is the plus branch.
        assert_eq!(sols[0].branch, Branch::Minus);
        assert_eq!(sols[1].branch, Branch::Plus);
    }

    #[test]
    fn solver_no_solution_at_phi_half_pi() {
        let p = CouplingParams::new(0.1, PI).unwrap();
        assert!(solve_postselection_angle(&p, PI / 2.0).is_empty());
    }

    #[test]
    fn residual_values() {
        let p = CouplingParams::new(0.1, PI).unwrap();
        let r = superposition_residual(&p, &PostSelection::new(PI / 2.0, 0.0));
        assert_abs_diff_eq!(r, -2.0, epsilon = 1e-12);
    }

    #[test]
    fn residual_sign_flips_across_root() {
        let p = CouplingParams::new(0.1, PI).unwrap();
        let sols = solve_postselection_angle(&p, 0.0);
        for sol in sols {
            let below = superposition_residual(&p, &PostSelection::new(sol.theta - 1e-3, 0.0));
            let above = superposition_residual(&p, &PostSelection::new(sol.theta + 1e-3, 0.0));
            assert!(below * above < 0.0, "no sign flip at theta = {}", sol.theta);
        }
    }

    #[test]
    fn branch_continuity_near_fock_angle() {
        // c1/c0 varies continuously in epsilon around theta = 3pi/2.
        let p = CouplingParams::new(0.1, PI).unwrap();
        let mut prev: Option<C64> = None;
        for k in -10..=10 {
            let eps = k as f64 * 1e-4;
            let q =
                truncated_mech_qubit(&p, &PostSelection::new(1.5 * PI + eps, 0.0)).unwrap();
            let ratio = q.c0 / q.c1; // c1 dominates near the Fock angle
            if let Some(pr) = prev {
                assert!((ratio - pr).norm() < 1e-2);
            }
            prev = Some(ratio);
        }
    }

    #[test]
    fn truncated_probability_matches_untruncated() {
        // Probability from the truncated qubit equals the full coherent-state
        // post-selection within O(lambda^4).
        let n = FockDim::new(24).unwrap();
        for lambda in [0.05, 0.1] {
            let p = CouplingParams::new(lambda, PI).unwrap();
            let joint = joint_state_unitary(&p, n, 1e-12).unwrap();
            for sol in solve_postselection_angle(&p, 0.0) {
                let s = PostSelection::new(sol.theta, 0.0);
                let q = truncated_mech_qubit(&p, &s).unwrap();
                let (_, prob_full) = postselect_ket(&joint, &s).unwrap();
                assert!(
                    (q.probability - prob_full).abs() < 20.0 * lambda.powi(4),
                    "lambda={lambda}: truncated {} vs full {}",
                    q.probability,
                    prob_full
                );
            }
        }
    }

    #[test]
    fn equal_superposition_invariant_over_phi() {
        let p = CouplingParams::new(0.2, 1.9).unwrap();
        for phi in [0.0, 0.05, 0.1] {
            for sol in solve_postselection_angle(&p, phi) {
                let q = truncated_mech_qubit(&p, &PostSelection::new(sol.theta, phi)).unwrap();
                assert_abs_diff_eq!(q.c0.norm_sqr(), 0.5, epsilon = 1e-10);
            }
        }
    }
}
