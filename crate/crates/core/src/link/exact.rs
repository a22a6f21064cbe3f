//! Exact SINRs of the superposition-coded downlink with explicit array
//! responses, beamformers and RIS phase profile.
//!
//! The effective channel row seen by the UE is
//!
//! ```text
//! c = beta_d eta_d a_B(phi_bu)^H + g^H Phi H
//! g^H = beta_r eta_r a_R(phi_ru)^H
//! H   = a_R(phi_rb) a_B(phi_br)^H / sqrt(N_R)
//! Phi = e^{j psi} diag(e^{j pi k (sin phi_ru - sin phi_rb)})
//! ```
//!
//! The matched profile makes the reflected contributions add coherently, and
//! the `1/sqrt(N_R)` normalisation of `H` gives the reflection a power gain of
//! `N_R`, the same scaling the approximate SINRs use. The common RIS phase
//! `psi` is [`RIS_PHASE_OFFSET`] (quadrature): then LOS and RIS contributions
//! add in power whenever the two BS beams are orthogonal, and the exact SINRs
//! coincide with [`approx_sinrs`](super::approx_sinrs).

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::{array_response, Angles, BlockageState, PowerAllocation, Scenario};
use crate::error::Result;

/// Common phase applied across the RIS on top of the matched profile.
pub const RIS_PHASE_OFFSET: f64 = FRAC_PI_2;

fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Exact `(gamma_h, gamma_l)` for the scenario's angles and the default RIS
/// phase offset.
pub fn exact_sinrs(s: &Scenario, p: &PowerAllocation, b: BlockageState) -> Result<(f64, f64)> {
    let angles = s.params.resolved_angles()?;
    exact_sinrs_with(s, p, b, &angles, RIS_PHASE_OFFSET)
}

pub fn exact_sinrs_with(
    s: &Scenario,
    p: &PowerAllocation,
    b: BlockageState,
    angles: &Angles,
    ris_phase_offset: f64,
) -> Result<(f64, f64)> {
    let (n_b, n_r) = (s.params.n_b, s.params.n_r);
    let a_bu = array_response(n_b, angles.bu)?;
    let a_br = array_response(n_b, angles.br)?;
    let a_rb = array_response(n_r, angles.rb)?;
    let a_ru = array_response(n_r, angles.ru)?;

    let gradient = angles.ru.sin() - angles.rb.sin();
    let phi: Vec<Complex64> = (0..n_r)
        .map(|k| Complex64::from_polar(1.0, ris_phase_offset + PI * k as f64 * gradient))
        .collect();

    // g^H Phi a_R(phi_rb): the RIS-side factor of the rank-one cascade.
    let reflect: Complex64 = a_ru
        .iter()
        .zip(&phi)
        .zip(&a_rb)
        .map(|((g, ph), h)| g.conj() * ph * h)
        .sum::<Complex64>()
        * (b.beta_r() * s.gains.eta_r / (n_r as f64).sqrt());

    let direct = b.beta_d() * s.gains.eta_d;
    let channel: Vec<Complex64> = a_bu
        .iter()
        .zip(&a_br)
        .map(|(u, r)| u.conj() * direct + r.conj() * reflect)
        .collect();

    let norm = 1.0 / (n_b as f64).sqrt();
    let beam = |p_d: f64, p_r: f64| -> Vec<Complex64> {
        a_bu.iter()
            .zip(&a_br)
            .map(|(u, r)| (u * p_d.sqrt() + r * p_r.sqrt()) * norm)
            .collect()
    };
    let f_h = beam(p.h_d, p.h_r);
    let f_l = beam(p.l_d, p.l_r);

    // channel already holds conjugated responses
    let rx = |f: &[Complex64]| -> f64 {
        channel
            .iter()
            .zip(f)
            .map(|(c, x)| c * x)
            .sum::<Complex64>()
            .norm_sqr()
    };
    let (sh, sl) = (rx(&f_h), rx(&f_l));
    let sigma2 = s.gains.noise_power;
    Ok((sh / (sl + sigma2), sl / sigma2))
}

/// `|a_B(phi_1)^H a_B(phi_2)|`: leakage between two BS beams.
pub fn beam_overlap(n: usize, phi_1: f64, phi_2: f64) -> Result<f64> {
    Ok(dot_conj(&array_response(n, phi_1)?, &array_response(n, phi_2)?).norm())
}
