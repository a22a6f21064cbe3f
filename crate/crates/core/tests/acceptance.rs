//! Acceptance criteria, one line each. Runs as a plain binary so every
//! criterion reports even when an earlier one fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mcsc::experiment::{spectral_efficiency, write_trace_csv, Scheme};
use mcsc::link::{approx_sinrs, beam_overlap, exact_sinrs, exact_sinrs_with, Angles};
use mcsc::link::{RIS_PHASE_OFFSET, SPEED_OF_LIGHT};
use mcsc::oma::oma_optimize;
use mcsc::power::{brute_force_oracle, g_h, g_l, optimal_mu, sca_power_allocation, ScaOptions};
use mcsc::queue::{mean_delay, run_simulation, QueueTrace};
use mcsc::{BlockageState, PowerAllocation, Scenario};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(
    results: &mut Vec<bool>,
    id: &str,
    name: &str,
    budget: Duration,
    f: impl FnOnce() -> Outcome,
) {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let pass = out.pass && in_time;
    println!(
        "{id} {:<4} {name}: {}; {:.2}s of {}s{}",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs(),
        if in_time { "" } else { " (over budget)" },
    );
    results.push(pass);
}

fn reference_traffic() -> Scenario {
    Scenario::reference()
}

/// First alpha on a 0.01 grid with a negative objective, refined by
/// bisection to 1e-4.
fn onset(objective: impl Fn(f64) -> f64) -> Option<f64> {
    let mut prev = 0.0;
    for i in 0..=100 {
        let a = i as f64 / 100.0;
        if objective(a) < 0.0 {
            if i == 0 {
                return Some(0.0);
            }
            let (mut lo, mut hi) = (prev, a);
            while hi - lo > 1e-4 {
                let mid = 0.5 * (lo + hi);
                if objective(mid) < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        prev = a;
    }
    None
}

fn c1() -> Outcome {
    let s = reference_traffic();
    let opts = ScaOptions::default();
    let mcsc = onset(|a| sca_power_allocation(&s, a, 700.0, &opts).unwrap().objective);
    let oma = onset(|a| oma_optimize(&s, a, 700.0).unwrap().objective);
    let ok = |v: Option<f64>, lo: f64, hi: f64| v.is_some_and(|v| (lo..=hi).contains(&v));
    Outcome {
        pass: ok(mcsc, 0.16, 0.22) && ok(oma, 0.03, 0.08),
        detail: format!(
            "MC-SC onset {:.4} in [0.16, 0.22], OMA onset {:.4} in [0.03, 0.08]",
            mcsc.unwrap_or(f64::NAN),
            oma.unwrap_or(f64::NAN)
        ),
    }
}

fn delay_at(alpha: f64, seed: u64) -> (f64, Option<f64>, Option<f64>) {
    let s = reference_traffic().modified(|p| p.alpha = alpha).unwrap();
    let r = sca_power_allocation(&s, alpha, 700.0, &ScaOptions::default()).unwrap();
    let trace = run_simulation(&s, (r.r_h, r.r_l), 100_000, seed).unwrap();
    let d = mean_delay(&trace, alpha, 700.0).unwrap();
    (d.tau_total_slots.unwrap(), d.tau_h_slots, d.tau_l_slots)
}

fn c2() -> Outcome {
    let (lo, lo_h, lo_l) = delay_at(0.01, 2024);
    let (hi, hi_h, hi_l) = delay_at(0.10, 2024);
    Outcome {
        pass: hi <= 1.5 * lo,
        detail: format!(
            "mean delay {hi:.3} slots at 0.10 vs {lo:.3} at 0.01 (ratio {:.3} <= 1.5; HC {:.3} vs {:.3}, LC {:.3} vs {:.3})",
            hi / lo,
            hi_h.unwrap(),
            lo_h.unwrap(),
            hi_l.unwrap(),
            lo_l.unwrap()
        ),
    }
}

fn c3() -> Outcome {
    // Reference parameter set written out by hand.
    let eta_d =
        100.0 * SPEED_OF_LIGHT / (4.0 * PI * 300e9 * 10.0) * (-0.5 * 0.0012 * 10.0f64).exp();
    let sigma2 = 10f64.powf(-17.4) * 1e-3 * 10e9;
    let expected = 0.7 * (1.0 + 64.0 * eta_d * eta_d * 0.01 / sigma2).log2();
    let (_, _, se) = spectral_efficiency(&Scenario::reference(), 0.0, Scheme::Mcsc).unwrap();
    let rel = (se - expected).abs() / expected;
    Outcome {
        pass: rel <= 5e-3,
        detail: format!("se_sum {se:.5} vs closed form {expected:.5} (rel {rel:.2e} <= 5e-3)"),
    }
}

fn random_scenario(rng: &mut ChaCha8Rng) -> (Scenario, f64, f64) {
    let base = Scenario::reference();
    let mut gains = base.gains;
    gains.eta_d *= rng.random_range(0.5..2.0);
    gains.eta_r *= rng.random_range(0.5..2.0);
    let q_r = rng.random_range(0.0..0.3);
    let q_d = rng.random_range(q_r..0.7);
    let s = base
        .modified(|p| {
            p.q_r = q_r;
            p.q_d = q_d;
        })
        .unwrap()
        .with_gains(gains)
        .unwrap();
    (
        s,
        rng.random_range(0.02..0.98),
        rng.random_range(100.0..1200.0),
    )
}

fn c4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    for _ in 0..20 {
        let (s, alpha, arrival) = random_scenario(&mut rng);
        let sca = sca_power_allocation(&s, alpha, arrival, &ScaOptions::default()).unwrap();
        let (_, oracle) = brute_force_oracle(&s, alpha, arrival, 101).unwrap();
        // Positive when SCA is ahead of the grid.
        let margin = (sca.objective - oracle.objective) / oracle.objective.abs().max(1e-12);
        worst = worst.min(margin);
        if sca.objective < oracle.objective - 0.01 * oracle.objective.abs() {
            failures += 1;
        }
    }
    Outcome {
        pass: failures == 0,
        detail: format!(
            "{failures}/20 scenarios more than 1% below the grid; worst relative margin {worst:+.2e}"
        ),
    }
}

fn c5() -> Outcome {
    let s = Scenario::reference();
    let (nb, nr) = (s.params.n_b, s.params.n_r);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mut x: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
        let total: f64 = x.iter().sum::<f64>() / rng.random_range(0.01..1.0);
        x.iter_mut().for_each(|v| *v *= s.params.p_max / total);
        let p = PowerAllocation::from_array(x);
        let direct = rng.random::<bool>();
        let b = if direct {
            BlockageState::CLEAR
        } else {
            BlockageState::DIRECT_BLOCKED
        };
        let gamma = rng.random_range(-10.0..2e4);
        let mu = optimal_mu(&p, &s.gains, nb, nr);
        let (gh, gl) = approx_sinrs(&s.gains, nb, nr, &p, b);
        let eh = g_h(&p, gamma, mu.h(direct), direct, &s.gains, nb, nr) - (gamma - gh);
        let tol = 1e-9 * gamma.abs().max(1.0);
        worst = worst.max(eh.abs() / tol);
        if direct {
            let el = g_l(&p, gamma, mu.l, &s.gains, nb, nr) - (gamma - gl);
            worst = worst.max(el.abs() / tol);
        }
    }
    Outcome {
        pass: worst <= 1.0,
        detail: format!("largest error {worst:.2e} of the allowed bound"),
    }
}

fn relative_decay(q_d: f64) -> f64 {
    let s = Scenario::reference().modified(|p| p.q_d = q_d).unwrap();
    let (_, _, at0) = spectral_efficiency(&s, 0.0, Scheme::Mcsc).unwrap();
    let (_, _, at15) = spectral_efficiency(&s, 0.15, Scheme::Mcsc).unwrap();
    (at0 - at15) / at0
}

fn c6() -> Outcome {
    let (d2, d4) = (relative_decay(0.2), relative_decay(0.4));
    Outcome {
        pass: d4 < d2,
        detail: format!("sum-SE decay to alpha 0.15: {d4:.4} at q_d 0.4 < {d2:.4} at q_d 0.2"),
    }
}

fn c7() -> Outcome {
    let s = Scenario::reference().modified(|p| p.n_r = 40_000).unwrap();
    let (_, _, at0) = spectral_efficiency(&s, 0.0, Scheme::Mcsc).unwrap();
    let (_, _, at15) = spectral_efficiency(&s, 0.15, Scheme::Mcsc).unwrap();
    Outcome {
        pass: at15 >= 0.98 * at0,
        detail: format!(
            "se_sum {at15:.4} at alpha 0.15 vs {at0:.4} at 0 (ratio {:.4} >= 0.98)",
            at15 / at0
        ),
    }
}

fn conservation(trace: &QueueTrace) -> (bool, f64) {
    let (mut qh, mut ql) = (trace.initial.q_h, trace.initial.q_l);
    let mut per_slot = true;
    let (mut ah, mut al) = (0.0, 0.0);
    for r in &trace.records {
        let (dh, dl) = (qh.min(r.s_h), ql.min(r.s_l));
        per_slot &= r.q_h == (qh - dh) + r.a_h as f64 && r.q_l == (ql - dl) + r.a_l as f64;
        ah += r.a_h as f64;
        al += r.a_l as f64;
        qh = r.q_h;
        ql = r.q_l;
    }
    let (dh, dl) = trace.departures();
    let end = trace.final_state();
    let gap = ((end.q_h - (trace.initial.q_h + ah - dh)).abs()
        + (end.q_l - (trace.initial.q_l + al - dl)).abs())
        / (ah + al).max(1.0);
    (per_slot, gap)
}

fn c8() -> Outcome {
    let mut pass = true;
    let mut worst_gap: f64 = 0.0;
    for (alpha, seed) in [(0.1, 81), (0.3, 82), (0.0, 83)] {
        let s = reference_traffic().modified(|p| p.alpha = alpha).unwrap();
        let r = sca_power_allocation(&s, alpha, 700.0, &ScaOptions::default()).unwrap();
        let trace = run_simulation(&s, (r.r_h, r.r_l), 20_000, seed).unwrap();
        let (per_slot, gap) = conservation(&trace);
        worst_gap = worst_gap.max(gap);
        pass &= per_slot && gap <= 1e-12;

        let d = mean_delay(&trace, alpha, 700.0).unwrap();
        let kept = &trace.records[trace.records.len() / 10..];
        let n = kept.len() as f64;
        let mq_h = kept.iter().map(|r| r.q_h).sum::<f64>() / n;
        let mq_l = kept.iter().map(|r| r.q_l).sum::<f64>() / n;
        pass &= d.tau_l_slots == Some(mq_l / ((1.0 - alpha) * 700.0));
        pass &= if alpha > 0.0 {
            d.tau_h_slots == Some(mq_h / (alpha * 700.0))
        } else {
            d.tau_h_slots.is_none()
        };

        let again = run_simulation(&s, (r.r_h, r.r_l), 20_000, seed).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_trace_csv(&trace, &mut a).unwrap();
        write_trace_csv(&again, &mut b).unwrap();
        pass &= again == trace && a == b;
    }
    Outcome {
        pass,
        detail: format!(
            "per-slot balance exact, aggregate balance within {worst_gap:.1e}, Little ratios and reruns identical"
        ),
    }
}

fn c9() -> Outcome {
    let s = Scenario::reference();
    let p = PowerAllocation::equal_split(s.params.p_max);
    let mut worst: f64 = 0.0;
    for b in [BlockageState::CLEAR, BlockageState::DIRECT_BLOCKED] {
        let (eh, el) = exact_sinrs(&s, &p, b).unwrap();
        let (ah, al) = approx_sinrs(&s.gains, s.params.n_b, s.params.n_r, &p, b);
        worst = worst
            .max(((eh - ah) / ah).abs())
            .max(((el - al) / al).abs());
    }

    let base = s.params.resolved_angles().unwrap();
    let mut ortho: f64 = 0.0;
    for m in [1, 2, -3, 5, 9] {
        // sin(bu) - sin(br) = 2m / N_B puts the BS beams in each other's nulls
        let br = (base.bu.sin() - 2.0 * m as f64 / 64.0).asin();
        let angles = Angles { br, ..base };
        assert!(beam_overlap(64, angles.bu, angles.br).unwrap() < 1e-12);
        for b in [BlockageState::CLEAR, BlockageState::DIRECT_BLOCKED] {
            let (eh, el) = exact_sinrs_with(&s, &p, b, &angles, RIS_PHASE_OFFSET).unwrap();
            let (ah, al) = approx_sinrs(&s.gains, 64, s.params.n_r, &p, b);
            ortho = ortho
                .max(((eh - ah) / ah).abs())
                .max(((el - al) / al).abs());
        }
    }
    Outcome {
        pass: worst <= 0.05 && ortho <= 1e-12,
        detail: format!(
            "default geometry deviation {:.2}% (<= 5%), orthogonal pairs {ortho:.1e} (<= 1e-12)",
            100.0 * worst
        ),
    }
}

fn main() -> ExitCode {
    let mut r = Vec::new();
    let s = Duration::from_secs;
    check(&mut r, "C1", "stability thresholds", s(30), c1);
    check(&mut r, "C2", "delay flatness", s(60), c2);
    check(&mut r, "C3", "SE anchor at alpha 0", s(5), c3);
    check(&mut r, "C4", "oracle equivalence", s(300), c4);
    check(&mut r, "C5", "quadratic-transform identity", s(1), c5);
    check(&mut r, "C6", "blockage sensitivity", s(30), c6);
    check(&mut r, "C7", "RIS size", s(30), c7);
    check(&mut r, "C8", "queue laws", s(10), c8);
    check(&mut r, "C9", "approximation validity", s(1), c9);
    let passed = r.iter().filter(|&&p| p).count();
    println!("{passed}/{} criteria passed", r.len());
    if passed == r.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
