//! Power allocation for queue stability.
//!
//! For a fixed HC fraction `alpha` and arrival rate `A`, the BS splits its
//! budget over four beams (HC/LC on the direct and RIS-directed beams) to
//! maximize `min{alpha delta_h, (1 - alpha) delta_l}`, where the gaps
//!
//! ```text
//! delta_h = (1 - q_r) (T / M) R_h - alpha A
//! delta_l = (1 - q_d) (T / M) R_l - (1 - alpha) A
//! ```
//!
//! measure how far the delivered packet rate exceeds the arrivals. The HC
//! rate must be decodable whether or not the direct path is up; the LC rate
//! only with both paths up. A class with zero weight (`alpha` = 0 or 1) is
//! left out of the objective.

mod arrival;
mod oracle;
mod sca;
mod transform;

pub use arrival::{max_feasible_arrival, ArrivalResult};
pub use oracle::brute_force_oracle;
pub use sca::{sca_power_allocation, ScaOptions};
pub use transform::{g_h, g_h_with, g_l, optimal_mu, optimal_mu_with, AuxiliaryMu, TransformForm};

use crate::link::{approx_sinrs, rates, BlockageState, PowerAllocation, Scenario};

/// Closed-form rates, gaps and objective for a fixed power allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// HC rate decodable with the direct path blocked or not (bit/s).
    pub r_h: f64,
    /// LC rate with both paths up (bit/s).
    pub r_l: f64,
    pub delta_h: f64,
    pub delta_l: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub power: PowerAllocation,
    pub r_h: f64,
    pub r_l: f64,
    /// Packets/slot.
    pub delta_h: f64,
    pub delta_l: f64,
    /// SINR targets of the last convex subproblem.
    pub gamma_h: f64,
    pub gamma_l: f64,
    pub objective: f64,
    /// Objective at the initial point followed by one entry per SCA step.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Newton steps spent in the convex kernel over all SCA steps.
    pub newton_iterations: usize,
}

/// `min{alpha delta_h, (1 - alpha) delta_l}`, dropping a zero-weight term.
pub fn weighted_min(alpha: f64, delta_h: f64, delta_l: f64) -> f64 {
    if alpha <= 0.0 {
        delta_l
    } else if alpha >= 1.0 {
        delta_h
    } else {
        (alpha * delta_h).min((1.0 - alpha) * delta_l)
    }
}

pub fn objective_for_powers(
    p: &PowerAllocation,
    scenario: &Scenario,
    alpha: f64,
    arrival: f64,
) -> Evaluation {
    let sp = &scenario.params;
    let (n_b, n_r) = (sp.n_b, sp.n_r);
    let (h0, _) = approx_sinrs(&scenario.gains, n_b, n_r, p, BlockageState::DIRECT_BLOCKED);
    let (h1, l) = approx_sinrs(&scenario.gains, n_b, n_r, p, BlockageState::CLEAR);
    let (r_h, r_l) = rates(h0.min(h1), l, sp.bandwidth);
    let k = sp.packets_per_bit_rate();
    let delta_h = (1.0 - sp.q_r) * k * r_h - alpha * arrival;
    let delta_l = (1.0 - sp.q_d) * k * r_l - (1.0 - alpha) * arrival;
    Evaluation {
        r_h,
        r_l,
        delta_h,
        delta_l,
        objective: weighted_min(alpha, delta_h, delta_l),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_power() {
        let s = Scenario::reference();
        let e = objective_for_powers(&PowerAllocation::ZERO, &s, 0.2, 700.0);
        assert_eq!((e.r_h, e.r_l), (0.0, 0.0));
        assert!((e.delta_h + 140.0).abs() < 1e-12);
        assert!((e.delta_l + 560.0).abs() < 1e-12);
    }

    #[test]
    fn lc_only_on_direct_beam() {
        let s = Scenario::reference();
        let p = PowerAllocation::new(0.0, 0.0, s.params.p_max, 0.0);
        let e = objective_for_powers(&p, &s, 0.0, 700.0);
        // 0.7 * (0.1 / 1e7) * 1.329e11 - 700
        assert!((e.delta_l - 230.6).abs() < 0.1, "{}", e.delta_l);
        assert_eq!(e.objective, e.delta_l);
    }

    #[test]
    fn hc_only_on_ris_beam() {
        let s = Scenario::reference();
        let p = PowerAllocation::new(0.0, s.params.p_max, 0.0, 0.0);
        let e = objective_for_powers(&p, &s, 1.0, 700.0);
        assert!((e.delta_h + 700.0 - 145.6).abs() < 0.2, "{}", e.delta_h);
        assert!(e.delta_h < 0.0);
        assert_eq!(e.objective, e.delta_h);
    }

    #[test]
    fn weighted_min_drops_zero_weight() {
        assert_eq!(weighted_min(0.0, -5.0, 3.0), 3.0);
        assert_eq!(weighted_min(1.0, -5.0, 3.0), -5.0);
        assert_eq!(weighted_min(0.5, -5.0, 3.0), -2.5);
    }
}
