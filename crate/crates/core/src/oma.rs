//! Orthogonal time-sharing baseline.
//!
//! A fraction `tau` of every slot carries HC data over the RIS path at full
//! power and the rest carries LC data over the direct path, also at full
//! power. `tau` is chosen with the same max-min stability objective as the
//! superposition scheme.

use crate::error::{domain, Result};
use crate::link::Scenario;
use crate::power::weighted_min;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OmaOptions {
    /// Let the LC phase also use the RIS path, adding its full-power SNR.
    pub lc_ris_assist: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmaResult {
    /// Fraction of the slot given to HC.
    pub tau: f64,
    /// Slot-averaged rates (bit/s).
    pub r_h: f64,
    pub r_l: f64,
    pub delta_h: f64,
    pub delta_l: f64,
    pub objective: f64,
}

/// Full-slot rates of the two phases (bit/s).
fn phase_rates(scenario: &Scenario, options: OmaOptions) -> (f64, f64) {
    let sp = &scenario.params;
    let ris = scenario.ris_snr_per_watt() * sp.p_max;
    let mut direct = scenario.direct_snr_per_watt() * sp.p_max;
    if options.lc_ris_assist {
        direct += ris;
    }
    (
        sp.bandwidth * ris.ln_1p() / std::f64::consts::LN_2,
        sp.bandwidth * direct.ln_1p() / std::f64::consts::LN_2,
    )
}

pub fn oma_rates(tau: f64, scenario: &Scenario) -> Result<(f64, f64)> {
    oma_rates_with(tau, scenario, OmaOptions::default())
}

pub fn oma_rates_with(tau: f64, scenario: &Scenario, options: OmaOptions) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&tau) {
        return domain(format!("time fraction must lie in [0, 1], got {tau}"));
    }
    let (h, l) = phase_rates(scenario, options);
    Ok((tau * h, (1.0 - tau) * l))
}

/// Delivered packets per slot of each class when it owns the whole slot.
fn full_slot_capacity(scenario: &Scenario, options: OmaOptions) -> (f64, f64) {
    let sp = &scenario.params;
    let k = sp.packets_per_bit_rate();
    let (h, l) = phase_rates(scenario, options);
    ((1.0 - sp.q_r) * k * h, (1.0 - sp.q_d) * k * l)
}

fn evaluate(
    scenario: &Scenario,
    options: OmaOptions,
    alpha: f64,
    arrival: f64,
    tau: f64,
) -> OmaResult {
    let sp = &scenario.params;
    let k = sp.packets_per_bit_rate();
    let (h, l) = phase_rates(scenario, options);
    let (r_h, r_l) = (tau * h, (1.0 - tau) * l);
    let delta_h = (1.0 - sp.q_r) * k * r_h - alpha * arrival;
    let delta_l = (1.0 - sp.q_d) * k * r_l - (1.0 - alpha) * arrival;
    OmaResult {
        tau,
        r_h,
        r_l,
        delta_h,
        delta_l,
        objective: weighted_min(alpha, delta_h, delta_l),
    }
}

pub fn oma_optimize(scenario: &Scenario, alpha: f64, arrival: f64) -> Result<OmaResult> {
    oma_optimize_with(scenario, alpha, arrival, OmaOptions::default())
}

/// Both weighted gaps are affine in `tau`, one rising and one falling, so
/// the optimum is where they cross, clipped to `[0, 1]`.
pub fn oma_optimize_with(
    scenario: &Scenario,
    alpha: f64,
    arrival: f64,
    options: OmaOptions,
) -> Result<OmaResult> {
    if !(0.0..=1.0).contains(&alpha) {
        return domain(format!("alpha must lie in [0, 1], got {alpha}"));
    }
    if !(arrival.is_finite() && arrival >= 0.0) {
        return domain(format!("arrival rate must be non-negative, got {arrival}"));
    }
    scenario.params.validate()?;
    let tau = if alpha == 0.0 {
        0.0
    } else if alpha == 1.0 {
        1.0
    } else {
        let (c_h, c_l) = full_slot_capacity(scenario, options);
        let b = 1.0 - alpha;
        let den = alpha * c_h + b * c_l;
        if den > 0.0 {
            ((b * c_l - b * b * arrival + alpha * alpha * arrival) / den).clamp(0.0, 1.0)
        } else {
            0.0
        }
    };
    Ok(evaluate(scenario, options, alpha, arrival, tau))
}

/// Largest arrival rate with both gaps non-negative for some `tau`.
pub fn oma_max_arrival(scenario: &Scenario, alpha: f64, options: OmaOptions) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return domain(format!("alpha must lie in [0, 1], got {alpha}"));
    }
    let (c_h, c_l) = full_slot_capacity(scenario, options);
    // tau c_h >= alpha A and (1 - tau) c_l >= (1 - alpha) A
    let need = |w: f64, c: f64| if w == 0.0 { 0.0 } else { w / c };
    let load = need(alpha, c_h) + need(1.0 - alpha, c_l);
    Ok(if load.is_finite() { 1.0 / load } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_rates() {
        let s = Scenario::reference();
        let (h, l) = oma_rates(0.0, &s).unwrap();
        assert_eq!(h, 0.0);
        assert!((l - 1.329e11).abs() / 1.329e11 < 1e-3, "{l}");
        let (h, l) = oma_rates(1.0, &s).unwrap();
        assert!((h - 1.618e10).abs() / 1.618e10 < 2e-3, "{h}");
        assert_eq!(l, 0.0);
        let (hh, lh) = oma_rates(0.5, &s).unwrap();
        let (h1, _) = oma_rates(1.0, &s).unwrap();
        let (_, l0) = oma_rates(0.0, &s).unwrap();
        assert_eq!((hh, lh), (0.5 * h1, 0.5 * l0));
        assert!(oma_rates(1.5, &s).is_err());
    }

    #[test]
    fn zero_weight_ends() {
        let s = Scenario::reference();
        assert_eq!(oma_optimize(&s, 0.0, 700.0).unwrap().tau, 0.0);
        assert_eq!(oma_optimize(&s, 1.0, 700.0).unwrap().tau, 1.0);
    }

    #[test]
    fn matches_dense_grid() {
        let s = Scenario::reference();
        for &alpha in &[0.01, 0.05, 0.1, 0.3, 0.7, 0.95] {
            let best = oma_optimize(&s, alpha, 700.0).unwrap();
            let grid = (0..=1000)
                .map(|i| evaluate(&s, OmaOptions::default(), alpha, 700.0, i as f64 / 1000.0))
                .max_by(|a, b| a.objective.total_cmp(&b.objective))
                .unwrap();
            assert!((grid.tau - best.tau).abs() <= 1e-3, "alpha {alpha}");
            assert!(best.objective >= grid.objective - 1e-9);
        }
    }

    #[test]
    fn max_arrival_is_zero_gap_point() {
        let s = Scenario::reference();
        for &alpha in &[0.0, 0.1, 0.5, 1.0] {
            let a = oma_max_arrival(&s, alpha, OmaOptions::default()).unwrap();
            let r = oma_optimize(&s, alpha, a).unwrap();
            assert!(
                r.objective.abs() < 1e-9 * a,
                "alpha {alpha}: {}",
                r.objective
            );
        }
        // 1 / (0.1 / 145.6 + 0.9 / 930.3)
        let a = oma_max_arrival(&s, 0.1, OmaOptions::default()).unwrap();
        assert!((a - 604.5).abs() < 1.0, "{a}");
    }

    #[test]
    fn assist_helps_lc_only() {
        let s = Scenario::reference();
        let on = OmaOptions {
            lc_ris_assist: true,
        };
        let (h0, l0) = oma_rates(0.5, &s).unwrap();
        let (h1, l1) = oma_rates_with(0.5, &s, on).unwrap();
        assert_eq!(h0, h1);
        assert!(l1 > l0);
    }
}
