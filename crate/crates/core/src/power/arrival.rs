//! Largest arrival rate the MC-SC allocation can keep stable.

use super::sca::{sca_power_allocation, ScaOptions};
use super::SolveResult;
use crate::error::{domain, Result};
use crate::link::Scenario;

/// Relative bracket width at which bisection stops.
const REL_WIDTH: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalResult {
    /// Packets/slot.
    pub arrival: f64,
    /// Allocation at `arrival`.
    pub solution: SolveResult,
    /// Number of power-allocation solves performed.
    pub solves: usize,
}

/// Bisects on the arrival rate, calling an operating point feasible when the
/// optimized weighted gap is non-negative.
pub fn max_feasible_arrival(
    scenario: &Scenario,
    alpha: f64,
    options: &ScaOptions,
) -> Result<ArrivalResult> {
    if !(0.0..=1.0).contains(&alpha) {
        return domain(format!("alpha must lie in [0, 1], got {alpha}"));
    }
    let sp = &scenario.params;
    let snr = scenario
        .direct_snr_per_watt()
        .max(scenario.ris_snr_per_watt())
        * sp.p_max;
    let upper = 2.0 * sp.packets_per_bit_rate() * sp.bandwidth * (1.0 + snr).log2();

    let mut solves = 0;
    let mut solve = |arrival: f64| {
        solves += 1;
        sca_power_allocation(scenario, alpha, arrival, options)
    };

    let (mut lo, mut hi) = (0.0, upper);
    let mut best = solve(lo)?;
    let top = solve(hi)?;
    if top.objective >= 0.0 {
        return Ok(ArrivalResult {
            arrival: hi,
            solution: top,
            solves,
        });
    }
    while hi - lo > REL_WIDTH * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        let r = solve(mid)?;
        if r.objective >= 0.0 {
            lo = mid;
            best = r;
        } else {
            hi = mid;
        }
    }
    Ok(ArrivalResult {
        arrival: lo,
        solution: best,
        solves,
    })
}
