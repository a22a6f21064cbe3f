use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mcsc::experiment::{
    load_config, run_sweep, tipping_point, write_csv, write_meta, write_trace_csv,
    ExperimentConfig, Scheme, SchemeSelection, SweepAxis,
};
use mcsc::oma::{oma_max_arrival, oma_optimize_with, OmaOptions};
use mcsc::power::{brute_force_oracle, max_feasible_arrival, sca_power_allocation, ScaOptions};
use mcsc::queue::{mean_delay, run_simulation};
use mcsc::Scenario;

#[derive(Parser)]
#[command(version, about = "Mixed-criticality superposition coding experiments")]
struct Cli {
    /// key = value experiment file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// mcsc, oma or both.
    #[arg(long, global = true)]
    scheme: Option<SchemeSelection>,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one operating point.
    Solve,
    /// Run the configured sweep and write CSV.
    Sweep,
    /// Compare the SCA allocation with an exhaustive simplex grid.
    Oracle {
        /// Grid points per axis.
        #[arg(long, default_value_t = 101)]
        grid: usize,
    },
    /// Simulate the queues and write the per-slot trace as CSV.
    Simulate {
        #[arg(long)]
        slots: Option<u64>,
    },
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn run(cli: Cli) -> mcsc::Result<()> {
    let mut config = match &cli.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(s) = cli.scheme {
        config.scheme = s;
    }
    if cli.out.is_some() {
        config.output = cli.out.clone();
    }
    let scenario = Scenario::new(config.params.clone())?;
    let (alpha, arrival) = (scenario.params.alpha, scenario.params.arrival_rate);
    let sca = ScaOptions {
        form: config.transform,
        ..ScaOptions::default()
    };
    let oma = OmaOptions {
        lc_ris_assist: config.lc_ris_assist,
    };

    match cli.command {
        Command::Solve => {
            let mut out = output(&config.output)?;
            for &scheme in config.scheme.schemes() {
                match scheme {
                    Scheme::Mcsc => {
                        let r = sca_power_allocation(&scenario, alpha, arrival, &sca)?;
                        let a = max_feasible_arrival(&scenario, alpha, &sca)?;
                        let p = r.power;
                        writeln!(out, "mcsc alpha={alpha} arrival={arrival}")?;
                        writeln!(
                            out,
                            "  power W: h_d={:e} h_r={:e} l_d={:e} l_r={:e}",
                            p.h_d, p.h_r, p.l_d, p.l_r
                        )?;
                        writeln!(out, "  rates bit/s: r_h={:e} r_l={:e}", r.r_h, r.r_l)?;
                        writeln!(out, "  gaps: delta_h={} delta_l={}", r.delta_h, r.delta_l)?;
                        writeln!(
                            out,
                            "  objective={} iterations={} converged={}",
                            r.objective, r.iterations, r.converged
                        )?;
                        writeln!(out, "  a_star={}", a.arrival)?;
                    }
                    Scheme::Oma => {
                        let r = oma_optimize_with(&scenario, alpha, arrival, oma)?;
                        writeln!(out, "oma alpha={alpha} arrival={arrival}")?;
                        writeln!(out, "  tau={}", r.tau)?;
                        writeln!(out, "  rates bit/s: r_h={:e} r_l={:e}", r.r_h, r.r_l)?;
                        writeln!(out, "  gaps: delta_h={} delta_l={}", r.delta_h, r.delta_l)?;
                        writeln!(out, "  objective={}", r.objective)?;
                        writeln!(out, "  a_star={}", oma_max_arrival(&scenario, alpha, oma)?)?;
                    }
                }
            }
            out.flush()?;
        }
        Command::Sweep => {
            let rows = run_sweep(&config, cli.workers)?;
            write_csv(&rows, output(&config.output)?)?;
            if let Some(p) = &config.output {
                let meta = write_meta(p, &config)?;
                eprintln!("wrote {} and {}", p.display(), meta.display());
            }
            if config.axis == SweepAxis::Alpha && config.scheme == SchemeSelection::Both {
                if let Some(v) = tipping_point(&rows) {
                    eprintln!("largest MC-SC advantage over OMA at alpha = {v}");
                }
            }
        }
        Command::Oracle { grid } => {
            let r = sca_power_allocation(&scenario, alpha, arrival, &sca)?;
            let (p, e) = brute_force_oracle(&scenario, alpha, arrival, grid)?;
            let mut out = output(&config.output)?;
            writeln!(
                out,
                "sca    objective={} iterations={}",
                r.objective, r.iterations
            )?;
            writeln!(
                out,
                "oracle objective={} at h_d={:e} h_r={:e} l_d={:e} l_r={:e}",
                e.objective, p.h_d, p.h_r, p.l_d, p.l_r
            )?;
            writeln!(out, "difference={}", r.objective - e.objective)?;
            out.flush()?;
        }
        Command::Simulate { slots } => {
            let slots = slots.unwrap_or(config.slots.max(1));
            let scheme = config.scheme.schemes()[0];
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
            let trace = run_simulation(&scenario, rates, slots, config.seed)?;
            write_trace_csv(&trace, output(&config.output)?)?;
            let d = mean_delay(&trace, alpha, arrival)?;
            let show = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
            eprintln!(
                "{scheme}: tau_h={} slots, tau_l={} slots, mean Q_h={:.2}, mean Q_l={:.2}, stable={}",
                show(d.tau_h_slots),
                show(d.tau_l_slots),
                d.mean_q_h,
                d.mean_q_l,
                d.stable()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
