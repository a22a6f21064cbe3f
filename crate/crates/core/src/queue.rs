//! Discrete-time HC/LC queues.
//!
//! Each slot the BS receives `A(t) ~ Poisson(A)` packets, classifies each one
//! as HC with probability `alpha`, and serves `(T / M) R` packets per class
//! when the class is decodable: HC needs the RIS path, LC the direct path.
//! Queue lengths are real-valued and evolve as `Q <- [Q - service]^+ + a`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use sha2::{Digest, Sha256};

use crate::error::{domain, Result};
use crate::link::{BlockageModel, BlockageState, Scenario};

/// Fraction of leading slots left out of delay statistics.
pub const WARM_UP_FRACTION: f64 = 0.1;

/// A trend counts as divergence when the fitted rise over the analysed
/// window exceeds this many residual standard deviations.
pub const DIVERGENCE_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QueueState {
    pub q_h: f64,
    pub q_l: f64,
    /// Slot index of the next update.
    pub t: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotRecord {
    pub a_h: u64,
    pub a_l: u64,
    /// Offered service (packets), zero when the class is in outage.
    pub s_h: f64,
    pub s_l: f64,
    pub beta_d: bool,
    pub beta_r: bool,
    /// Queue lengths after the update.
    pub q_h: f64,
    pub q_l: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueTrace {
    pub records: Vec<SlotRecord>,
    pub seed: u64,
    /// sha256 of the scenario parameters, hex encoded.
    pub scenario_digest: String,
    pub initial: QueueState,
    pub slot_duration: f64,
}

impl QueueTrace {
    /// Packets that actually left each queue, `sum min(Q_prev, service)`.
    pub fn departures(&self) -> (f64, f64) {
        let (mut qh, mut ql) = (self.initial.q_h, self.initial.q_l);
        let (mut dh, mut dl) = (0.0, 0.0);
        for r in &self.records {
            dh += qh.min(r.s_h);
            dl += ql.min(r.s_l);
            qh = r.q_h;
            ql = r.q_l;
        }
        (dh, dl)
    }

    pub fn final_state(&self) -> QueueState {
        match self.records.last() {
            Some(r) => QueueState {
                q_h: r.q_h,
                q_l: r.q_l,
                t: self.initial.t + self.records.len() as u64,
            },
            None => self.initial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayStats {
    /// `None` when the class receives no traffic.
    pub tau_h_slots: Option<f64>,
    pub tau_h_seconds: Option<f64>,
    pub tau_l_slots: Option<f64>,
    pub tau_l_seconds: Option<f64>,
    /// Little's law over both queues together.
    pub tau_total_slots: Option<f64>,
    pub mean_q_h: f64,
    pub mean_q_l: f64,
    pub h_diverging: bool,
    pub l_diverging: bool,
}

impl DelayStats {
    pub fn stable(&self) -> bool {
        !(self.h_diverging || self.l_diverging)
    }
}

/// Splits `total` packets into `(HC, LC)` by independent per-packet draws.
///
/// # Panics
///
/// If `alpha` lies outside `[0, 1]`.
pub fn classify_arrivals<R: Rng + ?Sized>(total: u64, alpha: f64, rng: &mut R) -> (u64, u64) {
    assert!(
        (0.0..=1.0).contains(&alpha),
        "alpha must lie in [0, 1], got {alpha}"
    );
    let a_h = if total == 0 || alpha == 0.0 {
        0
    } else if alpha == 1.0 {
        total
    } else {
        Binomial::new(total, alpha)
            .expect("valid binomial")
            .sample(rng)
    };
    (a_h, total - a_h)
}

/// Offered service per class in packets for one slot.
pub fn slot_service(b: BlockageState, rates: (f64, f64), t: f64, m: f64) -> (f64, f64) {
    let k = t / m;
    (
        if b.ris { k * rates.0 } else { 0.0 },
        if b.direct { k * rates.1 } else { 0.0 },
    )
}

/// One slot of the queue recursion. `rates` are in bit/s, `t` in seconds and
/// `m` in bits.
pub fn step_queues(
    state: QueueState,
    arrivals: (u64, u64),
    b: BlockageState,
    rates: (f64, f64),
    t: f64,
    m: f64,
) -> QueueState {
    let (s_h, s_l) = slot_service(b, rates, t, m);
    QueueState {
        q_h: (state.q_h - s_h).max(0.0) + arrivals.0 as f64,
        q_l: (state.q_l - s_l).max(0.0) + arrivals.1 as f64,
        t: state.t + 1,
    }
}

pub fn scenario_digest(scenario: &Scenario) -> String {
    hex::encode(Sha256::digest(format!("{:?}", scenario.params).as_bytes()))
}

/// Simulates `slots` slots from empty queues with the arrival rate and HC
/// fraction of `scenario.params`. Rates are in bit/s.
pub fn run_simulation(
    scenario: &Scenario,
    rates: (f64, f64),
    slots: u64,
    seed: u64,
) -> Result<QueueTrace> {
    let sp = &scenario.params;
    if slots < 1 {
        return domain("at least one slot is required");
    }
    if !(rates.0 >= 0.0 && rates.1 >= 0.0 && rates.0.is_finite() && rates.1.is_finite()) {
        return domain(format!(
            "rates must be non-negative and finite, got {rates:?}"
        ));
    }
    sp.validate()?;
    let blockage = BlockageModel::new(sp.q_d, sp.q_r)?;
    let poisson = if sp.arrival_rate > 0.0 {
        Some(Poisson::new(sp.arrival_rate).map_err(|e| crate::Error::Domain(e.to_string()))?)
    } else {
        None
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = QueueState::default();
    let mut records = Vec::with_capacity(slots as usize);
    for _ in 0..slots {
        let total = poisson.map_or(0, |d| d.sample(&mut rng) as u64);
        let arrivals = classify_arrivals(total, sp.alpha, &mut rng);
        let b = blockage.sample(&mut rng);
        let (s_h, s_l) = slot_service(b, rates, sp.slot_duration, sp.packet_size);
        state = step_queues(state, arrivals, b, rates, sp.slot_duration, sp.packet_size);
        records.push(SlotRecord {
            a_h: arrivals.0,
            a_l: arrivals.1,
            s_h,
            s_l,
            beta_d: b.direct,
            beta_r: b.ris,
            q_h: state.q_h,
            q_l: state.q_l,
        });
    }
    Ok(QueueTrace {
        records,
        seed,
        scenario_digest: scenario_digest(scenario),
        initial: QueueState::default(),
        slot_duration: sp.slot_duration,
    })
}

/// Least-squares trend test over the second half of `q`.
pub fn is_diverging(q: &[f64]) -> bool {
    let tail = &q[q.len() / 2..];
    let n = tail.len();
    if n < 3 {
        return false;
    }
    let nf = n as f64;
    let mean_x = (nf - 1.0) / 2.0;
    let mean_y = tail.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in tail.iter().enumerate() {
        let dx = i as f64 - mean_x;
        sxy += dx * (y - mean_y);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    let ss: f64 = tail
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let r = y - mean_y - slope * (i as f64 - mean_x);
            r * r
        })
        .sum();
    let resid = (ss / (nf - 2.0)).sqrt();
    slope > 0.0 && slope * nf > DIVERGENCE_SIGMAS * resid
}

/// Little's-law delays after dropping the warm-up slots.
pub fn mean_delay(trace: &QueueTrace, alpha: f64, arrival: f64) -> Result<DelayStats> {
    if trace.records.is_empty() {
        return domain("empty trace");
    }
    let skip = (trace.records.len() as f64 * WARM_UP_FRACTION).floor() as usize;
    let kept = &trace.records[skip..];
    let n = kept.len() as f64;
    let mean_q_h = kept.iter().map(|r| r.q_h).sum::<f64>() / n;
    let mean_q_l = kept.iter().map(|r| r.q_l).sum::<f64>() / n;
    let ratio = |q: f64, rate: f64| (rate > 0.0).then(|| q / rate);
    let tau_h_slots = ratio(mean_q_h, alpha * arrival);
    let tau_l_slots = ratio(mean_q_l, (1.0 - alpha) * arrival);
    let qh: Vec<f64> = kept.iter().map(|r| r.q_h).collect();
    let ql: Vec<f64> = kept.iter().map(|r| r.q_l).collect();
    Ok(DelayStats {
        tau_h_slots,
        tau_h_seconds: tau_h_slots.map(|v| v * trace.slot_duration),
        tau_l_slots,
        tau_l_seconds: tau_l_slots.map(|v| v * trace.slot_duration),
        tau_total_slots: ratio(mean_q_h + mean_q_l, arrival),
        mean_q_h,
        mean_q_l,
        h_diverging: is_diverging(&qh),
        l_diverging: is_diverging(&ql),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(classify_arrivals(100, 0.0, &mut rng), (0, 100));
        assert_eq!(classify_arrivals(100, 1.0, &mut rng), (100, 0));
        assert_eq!(classify_arrivals(0, 0.4, &mut rng), (0, 0));
    }

    #[test]
    fn classify_fraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mut h, mut total) = (0u64, 0u64);
        for _ in 0..1000 {
            let (a, b) = classify_arrivals(1000, 0.15, &mut rng);
            h += a;
            total += a + b;
        }
        let sd = (total as f64 * 0.15 * 0.85).sqrt();
        assert!((h as f64 - 0.15 * total as f64).abs() < 3.0 * sd);
    }

    #[test]
    fn step_arithmetic() {
        let s = QueueState {
            q_h: 5.0,
            q_l: 1.0,
            t: 0,
        };
        // T / M = 1 packet per bit/s
        let next = step_queues(s, (3, 0), BlockageState::CLEAR, (2.0, 5.0), 1.0, 1.0);
        assert_eq!((next.q_h, next.q_l, next.t), (6.0, 0.0, 1));
        let next = step_queues(s, (0, 0), BlockageState::BLOCKED, (1e9, 1e9), 1.0, 1.0);
        assert_eq!((next.q_h, next.q_l), (5.0, 1.0));
        let next = step_queues(
            s,
            (0, 0),
            BlockageState::DIRECT_BLOCKED,
            (1e9, 1e9),
            1.0,
            1.0,
        );
        assert_eq!((next.q_h, next.q_l), (0.0, 1.0));
    }

    #[test]
    fn no_arrivals_stay_empty() {
        let s = Scenario::reference()
            .modified(|p| p.arrival_rate = 0.0)
            .unwrap();
        let tr = run_simulation(&s, (1e9, 1e9), 500, 3).unwrap();
        assert!(tr.records.iter().all(|r| r.q_h == 0.0 && r.q_l == 0.0));
        let d = mean_delay(&tr, 0.1, 0.0).unwrap();
        assert_eq!((d.tau_h_slots, d.tau_l_slots), (None, None));
    }

    #[test]
    fn zero_rates_diverge() {
        let s = Scenario::reference();
        let tr = run_simulation(&s, (0.0, 0.0), 2000, 4).unwrap();
        let d = mean_delay(&tr, 0.1, 700.0).unwrap();
        assert!(d.h_diverging && d.l_diverging);
    }

    #[test]
    fn constant_queue_delay() {
        let rec = SlotRecord {
            a_h: 5,
            a_l: 0,
            s_h: 5.0,
            s_l: 0.0,
            beta_d: true,
            beta_r: true,
            q_h: 10.0,
            q_l: 0.0,
        };
        let tr = QueueTrace {
            records: vec![rec; 100],
            seed: 0,
            scenario_digest: String::new(),
            initial: QueueState {
                q_h: 10.0,
                q_l: 0.0,
                t: 0,
            },
            slot_duration: 0.1,
        };
        let d = mean_delay(&tr, 1.0, 5.0).unwrap();
        assert_eq!(d.tau_h_slots, Some(2.0));
        assert!((d.tau_h_seconds.unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(d.tau_l_slots, None);
        assert!(!d.h_diverging);
    }

    #[test]
    fn trend_detector() {
        let flat: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 13) as f64).collect();
        assert!(!is_diverging(&flat));
        let rising: Vec<f64> = (0..1000)
            .map(|i| i as f64 * 0.5 + ((i * 7919) % 13) as f64)
            .collect();
        assert!(is_diverging(&rising));
    }
}
