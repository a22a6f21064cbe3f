use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, Scheme, SeDefinition};
use crate::error::Result;
use crate::link::Scenario;
use crate::oma::{oma_max_arrival, oma_optimize_with, OmaOptions};
use crate::power::{max_feasible_arrival, sca_power_allocation, ScaOptions};
use crate::queue::{mean_delay, run_simulation, QueueTrace};

/// One CSV line: a scheme evaluated at one sweep value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub scheme: String,
    /// bit/s/Hz
    pub se_h: Option<f64>,
    pub se_l: Option<f64>,
    pub se_sum: Option<f64>,
    /// Largest stable arrival rate (packets/slot).
    pub a_star: Option<f64>,
    pub tau_h_slots: Option<f64>,
    pub tau_l_slots: Option<f64>,
    pub stable: Option<bool>,
    pub iterations: Option<usize>,
    pub status: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeResult {
    pub se_h: f64,
    pub se_l: f64,
    pub se_sum: f64,
    pub a_star: f64,
    /// SCA iterations at the maximal arrival rate; 0 for the closed-form
    /// baseline.
    pub iterations: usize,
    /// Rates (bit/s) at the maximal arrival rate.
    pub r_h: f64,
    pub r_l: f64,
}

/// `(se_h, se_l, se_sum)` at the scheme's largest stable arrival rate.
pub fn spectral_efficiency(
    scenario: &Scenario,
    alpha: f64,
    scheme: Scheme,
) -> Result<(f64, f64, f64)> {
    let r = spectral_efficiency_with(
        scenario,
        alpha,
        scheme,
        SeDefinition::Weighted,
        &ScaOptions::default(),
        OmaOptions::default(),
    )?;
    Ok((r.se_h, r.se_l, r.se_sum))
}

pub fn spectral_efficiency_with(
    scenario: &Scenario,
    alpha: f64,
    scheme: Scheme,
    definition: SeDefinition,
    sca: &ScaOptions,
    oma: OmaOptions,
) -> Result<SeResult> {
    let (a_star, r_h, r_l, iterations) = match scheme {
        Scheme::Mcsc => {
            let r = max_feasible_arrival(scenario, alpha, sca)?;
            (
                r.arrival,
                r.solution.r_h,
                r.solution.r_l,
                r.solution.iterations,
            )
        }
        Scheme::Oma => {
            let a = oma_max_arrival(scenario, alpha, oma)?;
            let r = oma_optimize_with(scenario, alpha, a, oma)?;
            (a, r.r_h, r.r_l, 0)
        }
    };
    let sp = &scenario.params;
    let (w_h, w_l) = match definition {
        SeDefinition::Weighted => (1.0 - sp.q_r, 1.0 - sp.q_d),
        SeDefinition::Shannon => (1.0, 1.0),
    };
    // A class without traffic carries nothing, whatever rate it could get.
    let se_h = if alpha > 0.0 {
        w_h * r_h / sp.bandwidth
    } else {
        0.0
    };
    let se_l = if alpha < 1.0 {
        w_l * r_l / sp.bandwidth
    } else {
        0.0
    };
    Ok(SeResult {
        se_h,
        se_l,
        se_sum: se_h + se_l,
        a_star,
        iterations,
        r_h,
        r_l,
    })
}

fn sca_options(config: &ExperimentConfig) -> ScaOptions {
    ScaOptions {
        form: config.transform,
        ..ScaOptions::default()
    }
}

fn evaluate(config: &ExperimentConfig, value: f64, scheme: Scheme, seed: u64) -> Result<SweepRow> {
    let scenario = Scenario::new(config.axis.apply(&config.params, value))?;
    let sp = &scenario.params;
    let (alpha, arrival) = (sp.alpha, sp.arrival_rate);
    let sca = sca_options(config);
    let oma = OmaOptions {
        lc_ris_assist: config.lc_ris_assist,
    };
    let se = spectral_efficiency_with(&scenario, alpha, scheme, config.se_definition, &sca, oma)?;

    let mut row = SweepRow {
        sweep_value: value,
        scheme: scheme.to_string(),
        se_h: Some(se.se_h),
        se_l: Some(se.se_l),
        se_sum: Some(se.se_sum),
        a_star: Some(se.a_star),
        tau_h_slots: None,
        tau_l_slots: None,
        stable: None,
        iterations: Some(se.iterations),
        status: "ok".into(),
    };
    if config.slots > 0 {
        let rates = match scheme {
            Scheme::Mcsc => {
                let r = sca_power_allocation(&scenario, alpha, arrival, &sca)?;
                (r.r_h, r.r_l)
            }
            Scheme::Oma => {
                let r = oma_optimize_with(&scenario, alpha, arrival, oma)?;
                (r.r_h, r.r_l)
            }
        };
        let trace = run_simulation(&scenario, rates, config.slots, seed)?;
        let d = mean_delay(&trace, alpha, arrival)?;
        row.tau_h_slots = d.tau_h_slots;
        row.tau_l_slots = d.tau_l_slots;
        row.stable = Some(d.stable());
    }
    Ok(row)
}

/// All selected schemes at the `index`-th sweep value. A failing scheme
/// yields a row carrying the error in its status column.
pub fn run_point(config: &ExperimentConfig, index: usize) -> Vec<SweepRow> {
    let value = config.grid[index];
    // Schemes at one point share a seed so their traffic is identical.
    let seed = config.seed.wrapping_add(index as u64);
    config
        .scheme
        .schemes()
        .iter()
        .map(|&scheme| {
            evaluate(config, value, scheme, seed).unwrap_or_else(|e| SweepRow {
                sweep_value: value,
                scheme: scheme.to_string(),
                se_h: None,
                se_l: None,
                se_sum: None,
                a_star: None,
                tau_h_slots: None,
                tau_l_slots: None,
                stable: None,
                iterations: None,
                status: format!("error: {e}"),
            })
        })
        .collect()
}

/// Evaluates every sweep value on `workers` threads (0 picks the number of
/// cores). Rows come back in grid order.
pub fn run_sweep(config: &ExperimentConfig, workers: usize) -> Result<Vec<SweepRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::Error::Domain(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<Vec<SweepRow>> = pool.install(|| {
        (0..config.grid.len())
            .into_par_iter()
            .map(|i| run_point(config, i))
            .collect()
    });
    Ok(rows.into_iter().flatten().collect())
}

/// Sweep value maximizing the MC-SC minus OMA sum-SE gap.
pub fn tipping_point(rows: &[SweepRow]) -> Option<f64> {
    let se = |scheme: &str, v: f64| {
        rows.iter()
            .find(|r| r.scheme == scheme && r.sweep_value == v)
            .and_then(|r| r.se_sum)
    };
    rows.iter()
        .filter(|r| r.scheme == "mcsc")
        .filter_map(|r| Some((r.sweep_value, r.se_sum? - se("oma", r.sweep_value)?)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(v, _)| v)
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn config_digest(config: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(format!("{config:?}").as_bytes()))
}

/// Writes `<csv>.meta` next to the CSV and returns its path.
pub fn write_meta(csv_path: &Path, config: &ExperimentConfig) -> Result<PathBuf> {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".meta");
    let path = PathBuf::from(name);
    let mut f = File::create(&path)?;
    writeln!(f, "seed={}", config.seed)?;
    writeln!(f, "config_sha256={}", config_digest(config))?;
    Ok(path)
}

#[derive(Serialize)]
struct TraceLine {
    slot: usize,
    a_h: u64,
    a_l: u64,
    s_h: f64,
    s_l: f64,
    beta_d: u8,
    beta_r: u8,
    q_h: f64,
    q_l: f64,
}

pub fn write_trace_csv<W: Write>(trace: &QueueTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (slot, r) in trace.records.iter().enumerate() {
        w.serialize(TraceLine {
            slot,
            a_h: r.a_h,
            a_l: r.a_l,
            s_h: r.s_h,
            s_l: r.s_l,
            beta_d: r.beta_d as u8,
            beta_r: r.beta_r as u8,
            q_h: r.q_h,
            q_l: r.q_l,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn se_at_alpha_zero() {
        let s = Scenario::reference();
        let (h, l, sum) = spectral_efficiency(&s, 0.0, Scheme::Mcsc).unwrap();
        assert_eq!(h, 0.0);
        assert!((sum - l).abs() < 1e-12);
        assert!((sum - 9.30).abs() < 0.01, "{sum}");
    }

    #[test]
    fn se_at_alpha_one() {
        let s = Scenario::reference();
        let (h, l, _) = spectral_efficiency(&s, 1.0, Scheme::Mcsc).unwrap();
        assert_eq!(l, 0.0);
        assert!((h - 0.9 * 1.618).abs() < 0.01, "{h}");
    }

    #[test]
    fn no_lc_when_direct_always_blocked() {
        let s = Scenario::reference().modified(|p| p.q_d = 1.0).unwrap();
        for scheme in [Scheme::Mcsc, Scheme::Oma] {
            let (_, l, _) = spectral_efficiency(&s, 0.3, scheme).unwrap();
            assert_eq!(l, 0.0);
        }
    }

    #[test]
    fn tipping_point_picks_largest_gap() {
        let row = |v: f64, scheme: &str, se: f64| SweepRow {
            sweep_value: v,
            scheme: scheme.into(),
            se_h: None,
            se_l: None,
            se_sum: Some(se),
            a_star: None,
            tau_h_slots: None,
            tau_l_slots: None,
            stable: None,
            iterations: None,
            status: "ok".into(),
        };
        let rows = vec![
            row(0.0, "mcsc", 9.0),
            row(0.0, "oma", 9.0),
            row(0.1, "mcsc", 8.5),
            row(0.1, "oma", 7.0),
            row(0.2, "mcsc", 7.0),
            row(0.2, "oma", 6.0),
        ];
        assert_eq!(tipping_point(&rows), Some(0.1));
    }
}
