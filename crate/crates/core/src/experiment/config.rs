//! Flat `key = value` experiment files.
//!
//! Keys mirror the scenario parameter names. Powers are given in dBm, the
//! noise density in dBm/Hz, antenna gains in dB and `f`/`bandwidth` in GHz;
//! everything else is SI. `#` starts a comment. Unknown or repeated keys are
//! rejected.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::link::{db_to_linear, dbm_to_watts, ScenarioParams};
use crate::power::TransformForm;

/// Simulation horizon below which delay estimates are not trusted.
pub const MIN_SLOTS: u64 = 1000;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config file {path} not found")]
    Missing { path: PathBuf },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Alpha,
    QD,
    NRis,
    Arrival,
}

impl SweepAxis {
    /// Copy of `params` with the swept quantity set to `value`.
    pub fn apply(self, params: &ScenarioParams, value: f64) -> ScenarioParams {
        let mut p = params.clone();
        match self {
            Self::Alpha => p.alpha = value,
            Self::QD => p.q_d = value,
            Self::NRis => p.n_r = value as usize,
            Self::Arrival => p.arrival_rate = value,
        }
        p
    }
}

impl FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alpha" => Ok(Self::Alpha),
            "q_d" => Ok(Self::QD),
            "n_ris" | "n_r" => Ok(Self::NRis),
            "arrival" | "arrival_rate" => Ok(Self::Arrival),
            _ => Err(format!(
                "unknown sweep axis {s:?} (alpha, q_d, n_ris, arrival)"
            )),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Alpha => "alpha",
            Self::QD => "q_d",
            Self::NRis => "n_ris",
            Self::Arrival => "arrival",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Mcsc,
    Oma,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mcsc => "mcsc",
            Self::Oma => "oma",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeSelection {
    Mcsc,
    Oma,
    Both,
}

impl SchemeSelection {
    pub fn schemes(self) -> &'static [Scheme] {
        match self {
            Self::Mcsc => &[Scheme::Mcsc],
            Self::Oma => &[Scheme::Oma],
            Self::Both => &[Scheme::Mcsc, Scheme::Oma],
        }
    }
}

impl FromStr for SchemeSelection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mcsc" => Ok(Self::Mcsc),
            "oma" => Ok(Self::Oma),
            "both" => Ok(Self::Both),
            _ => Err(format!("unknown scheme {s:?} (mcsc, oma, both)")),
        }
    }
}

/// How delivered rate is turned into spectral efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeDefinition {
    /// Rate times link availability, per Hz.
    #[default]
    Weighted,
    /// Plain rate per Hz.
    Shannon,
}

impl FromStr for SeDefinition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "weighted" => Ok(Self::Weighted),
            "shannon" => Ok(Self::Shannon),
            _ => Err(format!("unknown SE definition {s:?} (weighted, shannon)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: ScenarioParams,
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub scheme: SchemeSelection,
    /// Queue simulation horizon; 0 skips the simulation.
    pub slots: u64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub se_definition: SeDefinition,
    pub transform: TransformForm,
    pub lc_ris_assist: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: ScenarioParams::reference(),
            axis: SweepAxis::Alpha,
            grid: (0..=5).map(|i| i as f64 * 0.05).collect(),
            scheme: SchemeSelection::Both,
            slots: 100_000,
            seed: 1,
            output: None,
            se_definition: SeDefinition::Weighted,
            transform: TransformForm::Consistent,
            lc_ris_assist: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Validation(m));
        if let Err(e) = self.params.validate() {
            return invalid(e.to_string());
        }
        if self.grid.is_empty() {
            return invalid("sweep grid is empty".into());
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("sweep grid must be strictly increasing".into());
        }
        if self.slots != 0 && self.slots < MIN_SLOTS {
            return invalid(format!(
                "slots must be 0 or at least {MIN_SLOTS}, got {}",
                self.slots
            ));
        }
        for &v in &self.grid {
            let p = self.axis.apply(&self.params, v);
            if self.axis == SweepAxis::NRis && (v.fract() != 0.0 || v < 1.0) {
                return invalid(format!("n_ris values must be positive integers, got {v}"));
            }
            if let Err(e) = p.validate() {
                return invalid(format!("sweep value {v}: {e}"));
            }
        }
        Ok(())
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    v.parse().map_err(|e| ConfigError::Parse {
        line,
        message: format!("{key}: cannot parse {v:?}: {e}"),
    })
}

fn parse_count(line: usize, key: &str, v: &str) -> Result<usize, ConfigError> {
    let x: f64 = parse_value(line, key, v)?;
    if x.fract() != 0.0 || x < 0.0 || x > u32::MAX as f64 {
        return Err(ConfigError::Parse {
            line,
            message: format!("{key}: expected a whole number, got {v:?}"),
        });
    }
    Ok(x as usize)
}

/// Comma-separated values, or `start:step:stop` inclusive.
fn parse_grid(line: usize, v: &str) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let start: f64 = parse_value(line, "sweep_values", parts[0])?;
        let step: f64 = parse_value(line, "sweep_values", parts[1])?;
        let stop: f64 = parse_value(line, "sweep_values", parts[2])?;
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(ConfigError::Parse {
                line,
                message: format!("sweep_values: bad range {v:?}"),
            });
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| start + i as f64 * step).collect());
    }
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(line, "sweep_values", s))
        .collect()
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut c = ExperimentConfig::default();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(ConfigError::Parse {
                line,
                message: format!("expected key = value, got {body:?}"),
            });
        };
        let (key, v) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::Parse {
                line,
                message: format!("duplicate key {key}"),
            });
        }
        let p = &mut c.params;
        let f = |k| parse_value::<f64>(line, k, v);
        match key {
            "f" => p.f = f(key)? * 1e9,
            "bandwidth" => p.bandwidth = f(key)? * 1e9,
            "p_max" => p.p_max = dbm_to_watts(f(key)?),
            "n0" => p.n0 = dbm_to_watts(f(key)?),
            "g_b" => p.g_b = db_to_linear(f(key)?),
            "g_u" => p.g_u = db_to_linear(f(key)?),
            "n_b" => p.n_b = parse_count(line, key, v)?,
            "n_r" => p.n_r = parse_count(line, key, v)?,
            "d_bu" => p.d_bu = f(key)?,
            "d_br" => p.d_br = f(key)?,
            "d_ru" => p.d_ru = f(key)?,
            "k_a" => p.k_a = f(key)?,
            "l_x" => p.l_x = Some(f(key)?),
            "l_y" => p.l_y = Some(f(key)?),
            "q_d" => p.q_d = f(key)?,
            "q_r" => p.q_r = f(key)?,
            "alpha" => p.alpha = f(key)?,
            "packet_size" => p.packet_size = f(key)?,
            "slot_duration" => p.slot_duration = f(key)?,
            "arrival_rate" => p.arrival_rate = f(key)?,
            "sweep_axis" => c.axis = parse_value(line, key, v)?,
            "sweep_values" => c.grid = parse_grid(line, v)?,
            "scheme" => c.scheme = parse_value(line, key, v)?,
            "slots" => c.slots = parse_value(line, key, v)?,
            "seed" => c.seed = parse_value(line, key, v)?,
            "output" => c.output = Some(PathBuf::from(v)),
            "se_definition" => c.se_definition = parse_value(line, key, v)?,
            "transform" => {
                c.transform = match v {
                    "consistent" => TransformForm::Consistent,
                    "ris_scaled" => TransformForm::RisScaled,
                    _ => {
                        return Err(ConfigError::Parse {
                            line,
                            message: format!(
                                "transform: expected consistent or ris_scaled, got {v:?}"
                            ),
                        })
                    }
                }
            }
            "lc_ris_assist" => c.lc_ris_assist = parse_value(line, key, v)?,
            _ => {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("unknown key {key}"),
                })
            }
        }
    }
    c.validate()?;
    Ok(c)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ConfigError::Missing {
            path: path.to_path_buf(),
        },
        _ => ConfigError::Parse {
            line: 0,
            message: format!("cannot read {}: {e}", path.display()),
        },
    })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        let p = &c.params;
        assert!((p.p_max - 0.01).abs() < 1e-15);
        assert!((p.bandwidth - 10e9).abs() < 1e-3);
        assert!((p.f - 300e9).abs() < 1e-3);
        assert!((p.g_b - 100.0).abs() < 1e-12);
        assert_eq!((p.n_b, p.n_r), (64, 10_000));
        assert_eq!((p.d_bu, p.d_br, p.d_ru, p.k_a), (10.0, 8.7, 2.0, 0.0012));
        assert_eq!((p.q_d, p.q_r), (0.3, 0.1));
    }

    #[test]
    fn single_override() {
        let c = parse_config("q_d = 0.4 # more blockage\n").unwrap();
        let mut want = ExperimentConfig::default();
        want.params.q_d = 0.4;
        assert_eq!(c, want);
    }

    #[test]
    fn unit_conversion() {
        let c = parse_config("p_max = 20\nf = 0.3e3\nn0 = -140\ng_u = 10\nn_r = 4e4").unwrap();
        assert!((c.params.p_max - 0.1).abs() < 1e-15);
        assert!((c.params.f - 300e9).abs() < 1e-3);
        assert!((c.params.n0 - 1e-17).abs() < 1e-30);
        assert!((c.params.g_u - 10.0).abs() < 1e-12);
        assert_eq!(c.params.n_r, 40_000);
    }

    #[test]
    fn grids() {
        let c = parse_config("sweep_axis = q_d\nsweep_values = 0.1, 0.2,0.5").unwrap();
        assert_eq!(
            (c.axis, c.grid.clone()),
            (SweepAxis::QD, vec![0.1, 0.2, 0.5])
        );
        let c = parse_config("sweep_values = 0:0.05:0.25").unwrap();
        assert_eq!(c.grid.len(), 6);
        assert!((c.grid[5] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn errors_are_distinct() {
        assert!(matches!(
            parse_config("q_r = 0.5"),
            Err(ConfigError::Validation(_))
        ));
        assert!(matches!(
            parse_config("nope = 1"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("\nq_d = x"),
            Err(ConfigError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_config("q_d = 0.3\nq_d = 0.4"),
            Err(ConfigError::Parse { .. })
        ));
        assert!(matches!(
            parse_config("q_d 0.3"),
            Err(ConfigError::Parse { .. })
        ));
        assert!(matches!(
            parse_config("sweep_values = 0.2, 0.1"),
            Err(ConfigError::Validation(_))
        ));
        assert!(matches!(
            parse_config("slots = 10"),
            Err(ConfigError::Validation(_))
        ));
        assert!(matches!(
            load_config(Path::new("/definitely/not/here.cfg")),
            Err(ConfigError::Missing { .. })
        ));
    }
}
