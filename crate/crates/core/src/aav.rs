//! Weak-value position readout and its exact counterpart.
//!
//! The conditional displacement, followed by near-orthogonal spin
//! post-selection, realizes an Aharonov-Albert-Vaidman style amplification:
//! the mean oscillator position is governed by the spin weak value
//! `<sz>_w = alpha_- / alpha_+`, which can be made arbitrarily large. The
//! linear-response expression is compared row-by-row against the exact
//! coherent-superposition average, which saturates where the weak-value
//! expansion diverges.

use num_complex::Complex64;

use crate::closed_form::{alpha_pm, eta, PostSelection};
use crate::hilbert::C64;
use crate::{Error, Result};

/// Spin weak value between the fixed `|+x>` pre-selection and the
/// post-selection direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakValue {
    pub re: f64,
    pub im: f64,
    /// False when the pre- and post-selection are orthogonal to working
    /// precision and the quotient is meaningless.
    pub finite: bool,
}

impl WeakValue {
    pub fn as_complex(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

/// `<sz>_w = <psi_f|sz|psi_i> / <psi_f|psi_i> = alpha_- / alpha_+`.
pub fn weak_value_sigmaz(s: &PostSelection) -> WeakValue {
    let ap = alpha_pm(s, 1.0);
    let am = alpha_pm(s, -1.0);
    if ap.norm() < 1e-12 {
        return WeakValue { re: f64::INFINITY, im: f64::INFINITY, finite: false };
    }
    let w = am / ap;
    WeakValue { re: w.re, im: w.im, finite: w.re.is_finite() && w.im.is_finite() }
}

/// Overlap probability `|<psi_f|psi_i>|^2` used for the singular mask.
pub fn postselection_overlap(s: &PostSelection) -> f64 {
    0.5 * alpha_pm(s, 1.0).norm_sqr()
}

/// Oscillator context for the weak-value readout: initial coherent
/// amplitude, coupling, and interaction time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AavContext {
    pub alpha_m: C64,
    pub lambda: f64,
    pub t: f64,
}

impl AavContext {
    pub fn new(alpha_m: C64, lambda: f64, t: f64) -> Result<Self> {
        if !(lambda.is_finite() && t.is_finite()) || t < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "lambda = {lambda}, t = {t} must be finite with t >= 0"
            )));
        }
        Ok(AavContext { alpha_m, lambda, t })
    }

    pub fn vacuum(lambda: f64, t: f64) -> Result<Self> {
        AavContext::new(C64::new(0.0, 0.0), lambda, t)
    }
}

/// Linear-response position average for an arbitrary initial coherent
/// amplitude.
pub fn x_mean_aav(ctx: &AavContext, s: &PostSelection) -> Result<f64> {
    let w = weak_value_sigmaz(s);
    if !w.finite {
        return Err(Error::NonFiniteWeakValue);
    }
    let (a, b) = (w.re, w.im);
    let t = ctx.t;
    let lam = ctx.lambda;
    let am = ctx.alpha_m;
    let e_it = Complex64::from_polar(1.0, t);
    let e_mit = e_it.conj();
    let et = eta(t);

    let free = (am * e_mit).re;
    let drift = lam * a * (1.0 - t.cos());
    let squeeze = lam
        * b
        * ((1.0 + 2.0 * am.norm_sqr()) * et.im + 2.0 * (et * am.conj() * am.conj() * e_it * e_it).im);
    let cross = 4.0 * lam * b * (am * e_mit).re * (et * am.conj() * e_it).im;
    Ok(free + drift - squeeze + cross)
}

/// Vacuum-initial-state reduction of [`x_mean_aav`]:
/// `x = lambda (A (1 - cos t) - B sin t)`.
pub fn x_mean_aav_vacuum(lambda: f64, t: f64, s: &PostSelection) -> Result<f64> {
    let w = weak_value_sigmaz(s);
    if !w.finite {
        return Err(Error::NonFiniteWeakValue);
    }
    Ok(lambda * (w.re * (1.0 - t.cos()) - w.im * t.sin()))
}

/// Exact post-selected quadrature averages `(<x>, <p>)` from the
/// coherent-superposition algebra, valid for a vacuum initial oscillator
/// state.
pub fn quadrature_means_exact(ctx: &AavContext, s: &PostSelection) -> Result<(f64, f64)> {
    if ctx.alpha_m.norm() > 1e-14 {
        return Err(Error::InvalidConfig(
            "exact comparison is defined for a vacuum initial oscillator state".into(),
        ));
    }
    let beta = ctx.lambda * eta(ctx.t);
    // Post-selected branches: cos(theta/2) rides on |beta>,
    // e^{-i phi} sin(theta/2) on |-beta>.
    let a = C64::new((0.5 * s.theta).cos() / std::f64::consts::SQRT_2, 0.0);
    let b = C64::from_polar((0.5 * s.theta).sin() / std::f64::consts::SQRT_2, -s.phi);
    let ov = (-2.0 * beta.norm_sqr()).exp();
    let ab = a.conj() * b;
    let den = a.norm_sqr() + b.norm_sqr() + 2.0 * ab.re * ov;
    if den < 1e-300 {
        return Err(Error::DegeneratePostselection(den));
    }
    let pop = a.norm_sqr() - b.norm_sqr();
    let x = (pop * beta.re + 2.0 * beta.im * ab.im * ov) / den;
    let p = (pop * beta.im - 2.0 * beta.re * ab.im * ov) / den;
    Ok((x, p))
}

/// Exact post-selected position average; see [`quadrature_means_exact`].
pub fn x_mean_exact(ctx: &AavContext, s: &PostSelection) -> Result<f64> {
    Ok(quadrature_means_exact(ctx, s)?.0)
}

/// One row of the weak-value/exact comparison sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AavRow {
    pub theta: f64,
    pub weak_value_re: f64,
    pub weak_value_im: f64,
    pub overlap: f64,
    pub x_aav: f64,
    pub x_exact: f64,
    /// True where the post-selection overlap falls under the mask tolerance
    /// and the linear-response column is unreliable.
    pub masked: bool,
}

/// Sweeps the post-selection polar angle at fixed coupling and time,
/// comparing the linear-response and exact position averages. Rows inside
/// the singular region carry `masked = true` instead of being dropped.
pub fn compare_aav_exact(
    ctx: &AavContext,
    phi: f64,
    thetas: &[f64],
    mask_tol: f64,
) -> Result<Vec<AavRow>> {
    thetas
        .iter()
        .map(|&theta| {
            let s = PostSelection::new(theta, phi);
            let ov = postselection_overlap(&s);
            let masked = ov < mask_tol;
            let w = weak_value_sigmaz(&s);
            let x_aav = if w.finite { x_mean_aav(ctx, &s)? } else { f64::NAN };
            let x_exact = x_mean_exact(ctx, &s)?;
            Ok(AavRow {
                theta,
                weak_value_re: w.re,
                weak_value_im: w.im,
                overlap: ov,
                x_aav,
                x_exact,
                masked,
            })
        })
        .collect()
}
