//! Quadratic transform of the SINR ratios.
//!
//! For a ratio `S / (I + sigma^2)` the function
//! `gamma - 2 mu sqrt(S) + mu^2 (I + sigma^2)` is convex in the powers for a
//! fixed `mu`, upper-bounds `gamma - S / (I + sigma^2)` for every `mu`, and is
//! tight at `mu* = sqrt(S) / (I + sigma^2)`. Requiring it to be `<= 0` is
//! therefore an inner approximation of `gamma <= SINR` that touches it at the
//! point where `mu` was computed.

use crate::link::{LinkGains, PowerAllocation};

/// Which coefficient multiplies the direct-beam powers in the HC transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransformForm {
    /// `N_B eta_d^2`, matching the approximate SINR expressions.
    #[default]
    Consistent,
    /// `N_B N_R eta_r^2` on the direct-beam terms as well. Kept for
    /// sensitivity runs; it disagrees with the SINR model it approximates.
    RisScaled,
}

/// One auxiliary variable per fractional term: HC with the direct path
/// blocked, HC with it available, and LC.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AuxiliaryMu {
    pub h0: f64,
    pub h1: f64,
    pub l: f64,
}

impl AuxiliaryMu {
    pub fn h(&self, direct: bool) -> f64 {
        if direct {
            self.h1
        } else {
            self.h0
        }
    }
}

/// Signal and interference-plus-noise coefficients of the three fractional
/// terms (in W^-1 for the power coefficients).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RatioCoefficients {
    /// Coefficient of direct-beam powers inside the HC ratios.
    pub hc_direct: f64,
    /// Coefficient of direct-beam powers inside the LC ratio.
    pub lc_direct: f64,
    pub ris: f64,
    pub noise: f64,
}

impl RatioCoefficients {
    pub fn new(gains: &LinkGains, n_b: usize, n_r: usize, form: TransformForm) -> Self {
        let direct = n_b as f64 * gains.eta_d * gains.eta_d;
        let ris = n_b as f64 * n_r as f64 * gains.eta_r * gains.eta_r;
        Self {
            hc_direct: match form {
                TransformForm::Consistent => direct,
                TransformForm::RisScaled => ris,
            },
            lc_direct: direct,
            ris,
            noise: gains.noise_power,
        }
    }

    /// HC `(signal, interference + noise)` with the RIS path available.
    pub fn hc(&self, p: &PowerAllocation, direct: bool) -> (f64, f64) {
        let bd = if direct { 1.0 } else { 0.0 };
        (
            bd * self.hc_direct * p.h_d + self.ris * p.h_r,
            bd * self.hc_direct * p.l_d + self.ris * p.l_r + self.noise,
        )
    }

    /// LC `(signal, noise)` with both paths available.
    pub fn lc(&self, p: &PowerAllocation) -> (f64, f64) {
        (self.lc_direct * p.l_d + self.ris * p.l_r, self.noise)
    }
}

fn transform(gamma: f64, mu: f64, signal: f64, denominator: f64) -> f64 {
    gamma - 2.0 * mu * signal.max(0.0).sqrt() + mu * mu * denominator
}

pub fn g_h(
    p: &PowerAllocation,
    gamma_h: f64,
    mu: f64,
    direct: bool,
    gains: &LinkGains,
    n_b: usize,
    n_r: usize,
) -> f64 {
    g_h_with(
        p,
        gamma_h,
        mu,
        direct,
        gains,
        n_b,
        n_r,
        TransformForm::Consistent,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn g_h_with(
    p: &PowerAllocation,
    gamma_h: f64,
    mu: f64,
    direct: bool,
    gains: &LinkGains,
    n_b: usize,
    n_r: usize,
    form: TransformForm,
) -> f64 {
    let (s, d) = RatioCoefficients::new(gains, n_b, n_r, form).hc(p, direct);
    transform(gamma_h, mu, s, d)
}

pub fn g_l(
    p: &PowerAllocation,
    gamma_l: f64,
    mu: f64,
    gains: &LinkGains,
    n_b: usize,
    n_r: usize,
) -> f64 {
    let (s, d) = RatioCoefficients::new(gains, n_b, n_r, TransformForm::Consistent).lc(p);
    transform(gamma_l, mu, s, d)
}

pub fn optimal_mu(p: &PowerAllocation, gains: &LinkGains, n_b: usize, n_r: usize) -> AuxiliaryMu {
    optimal_mu_with(p, gains, n_b, n_r, TransformForm::Consistent)
}

pub fn optimal_mu_with(
    p: &PowerAllocation,
    gains: &LinkGains,
    n_b: usize,
    n_r: usize,
    form: TransformForm,
) -> AuxiliaryMu {
    let c = RatioCoefficients::new(gains, n_b, n_r, form);
    let ratio = |(s, d): (f64, f64)| s.max(0.0).sqrt() / d;
    AuxiliaryMu {
        h0: ratio(c.hc(p, false)),
        h1: ratio(c.hc(p, true)),
        l: ratio(c.lc(p)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{approx_sinrs, BlockageState, Scenario};

    fn setup() -> (LinkGains, usize, usize) {
        let s = Scenario::reference();
        (s.gains, s.params.n_b, s.params.n_r)
    }

    #[test]
    fn zero_mu_zero_gamma() {
        let (g, nb, nr) = setup();
        let p = PowerAllocation::new(0.001, 0.002, 0.003, 0.004);
        assert_eq!(g_h(&p, 0.0, 0.0, true, &g, nb, nr), 0.0);
        assert_eq!(g_h(&p, 0.0, 0.0, false, &g, nb, nr), 0.0);
        assert_eq!(g_l(&p, 0.0, 0.0, &g, nb, nr), 0.0);
    }

    #[test]
    fn zero_power_gives_zero_mu() {
        let (g, nb, nr) = setup();
        assert_eq!(
            optimal_mu(&PowerAllocation::ZERO, &g, nb, nr),
            AuxiliaryMu::default()
        );
    }

    #[test]
    fn no_interference_mu() {
        let (g, nb, nr) = setup();
        let p = PowerAllocation::new(0.004, 0.003, 0.0, 0.0);
        let mu = optimal_mu(&p, &g, nb, nr);
        let sigma2 = g.noise_power;
        let a1 = nb as f64 * g.eta_d.powi(2) * 0.004 + (nb * nr) as f64 * g.eta_r.powi(2) * 0.003;
        let a0 = (nb * nr) as f64 * g.eta_r.powi(2) * 0.003;
        assert!((mu.h1 - a1.sqrt() / sigma2).abs() / mu.h1 < 1e-14);
        assert!((mu.h0 - a0.sqrt() / sigma2).abs() / mu.h0 < 1e-14);
    }

    #[test]
    fn table_values() {
        let (g, nb, nr) = setup();
        let p = PowerAllocation::new(0.0, 0.005, 0.0, 0.005);
        let mu = optimal_mu(&p, &g, nb, nr);
        assert!((mu.h0 - 7.92e4).abs() / 7.92e4 < 2e-3, "{}", mu.h0);

        // g_h at the tight mu equals gamma - SINR; the HC SINR here is
        // 1.0345 / (1.0345 + 1)
        let (sinr, _) = approx_sinrs(&g, nb, nr, &p, BlockageState::DIRECT_BLOCKED);
        let snr = (nb * nr) as f64 * g.eta_r.powi(2) * 0.005 / g.noise_power;
        assert!((sinr - snr / (snr + 1.0)).abs() < 1e-12);
        assert!((snr - 1.0345).abs() < 1e-3);
        let v = g_h(&p, 1.0, mu.h0, false, &g, nb, nr);
        assert!((v - (1.0 - sinr)).abs() < 1e-9);
        assert!((v - 0.4915).abs() < 1e-3, "{v}");

        let p = PowerAllocation::new(0.0, 0.0, 0.01, 0.0);
        let mu = optimal_mu(&p, &g, nb, nr);
        let v = g_l(&p, 1e4, mu.l, &g, nb, nr);
        let (_, gl) = approx_sinrs(&g, nb, nr, &p, BlockageState::CLEAR);
        assert!((v - (1e4 - gl)).abs() < 1e-9 * 1e4);
        assert!((v + 44.9).abs() < 1.0, "{v}");
    }

    #[test]
    fn ris_scaled_form_differs_only_on_direct_terms() {
        let (g, nb, nr) = setup();
        let p = PowerAllocation::new(0.0, 0.004, 0.0, 0.001);
        let a = optimal_mu_with(&p, &g, nb, nr, TransformForm::Consistent);
        let b = optimal_mu_with(&p, &g, nb, nr, TransformForm::RisScaled);
        assert_eq!(a, b);
        let p = PowerAllocation::new(0.004, 0.0, 0.001, 0.0);
        let a = optimal_mu_with(&p, &g, nb, nr, TransformForm::Consistent);
        let b = optimal_mu_with(&p, &g, nb, nr, TransformForm::RisScaled);
        assert_ne!(a.h1, b.h1);
        assert_eq!(a.l, b.l);
    }
}
