//! Exhaustive search over a simplex grid of power allocations.

use super::{objective_for_powers, Evaluation};
use crate::error::{domain, Result};
use crate::link::{PowerAllocation, Scenario};

/// Evaluates every allocation with coordinates on multiples of
/// `P_max / (grid_n - 1)` and total at most `P_max`, returning the best one.
/// Ties keep the first point in lexicographic order.
pub fn brute_force_oracle(
    scenario: &Scenario,
    alpha: f64,
    arrival: f64,
    grid_n: usize,
) -> Result<(PowerAllocation, Evaluation)> {
    if grid_n < 2 {
        return domain(format!("grid resolution must be at least 2, got {grid_n}"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return domain(format!("alpha must lie in [0, 1], got {alpha}"));
    }
    let n = grid_n - 1;
    let step = scenario.params.p_max / n as f64;
    let mut best: Option<(PowerAllocation, Evaluation)> = None;
    for i in 0..=n {
        for j in 0..=n - i {
            for k in 0..=n - i - j {
                for l in 0..=n - i - j - k {
                    let p = PowerAllocation::new(
                        i as f64 * step,
                        j as f64 * step,
                        k as f64 * step,
                        l as f64 * step,
                    );
                    let e = objective_for_powers(&p, scenario, alpha, arrival);
                    if best.is_none_or(|(_, b)| e.objective > b.objective) {
                        best = Some((p, e));
                    }
                }
            }
        }
    }
    Ok(best.expect("grid has at least one point"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners_only() {
        let s = Scenario::reference();
        let p_max = s.params.p_max;
        let (p, e) = brute_force_oracle(&s, 0.3, 700.0, 2).unwrap();
        let corners = [
            PowerAllocation::ZERO,
            PowerAllocation::new(p_max, 0.0, 0.0, 0.0),
            PowerAllocation::new(0.0, p_max, 0.0, 0.0),
            PowerAllocation::new(0.0, 0.0, p_max, 0.0),
            PowerAllocation::new(0.0, 0.0, 0.0, p_max),
        ];
        let best = corners
            .iter()
            .map(|c| objective_for_powers(c, &s, 0.3, 700.0).objective)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(e.objective, best);
        assert!(corners.contains(&p));
    }

    #[test]
    fn single_class_extremes() {
        let s = Scenario::reference();
        let (p, _) = brute_force_oracle(&s, 0.0, 700.0, 21).unwrap();
        assert_eq!(p.l_d, s.params.p_max);
        let (p, _) = brute_force_oracle(&s, 1.0, 700.0, 21).unwrap();
        assert_eq!(p.h_r, s.params.p_max);
    }

    #[test]
    fn rejects_tiny_grid() {
        assert!(brute_force_oracle(&Scenario::reference(), 0.1, 700.0, 1).is_err());
    }
}
