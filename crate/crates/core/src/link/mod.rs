//! Link budget of the RIS-assisted THz downlink.
//!
//! Two propagation paths reach the single-antenna UE: the direct
//! line-of-sight path (amplitude gain `eta_d`, blocked with probability
//! `q_d`) and the BS-RIS-UE reflection (amplitude gain `eta_r` per RIS
//! element, blocked with probability `q_r <= q_d`). The RIS path is only ever
//! blocked together with the direct path.

mod exact;
mod params;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{domain, Result};

pub use exact::{beam_overlap, exact_sinrs, exact_sinrs_with, RIS_PHASE_OFFSET};
pub use params::{
    db_to_linear, dbm_to_watts, watts_to_dbm, Angles, Layout, ScenarioParams, SPEED_OF_LIGHT,
};

/// Amplitude gains of both paths and the noise power over the band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGains {
    pub eta_d: f64,
    pub eta_r: f64,
    pub noise_power: f64,
}

impl LinkGains {
    pub fn from_params(params: &ScenarioParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            eta_d: direct_gain(params),
            eta_r: ris_gain(params),
            noise_power: noise_power(params.n0, params.bandwidth)?,
        })
    }

    /// Received SNR per watt on the direct beam: `N_B eta_d^2 / sigma^2`.
    pub fn direct_snr_per_watt(&self, n_b: usize) -> f64 {
        n_b as f64 * self.eta_d * self.eta_d / self.noise_power
    }

    /// Received SNR per watt on the RIS beam: `N_B N_R eta_r^2 / sigma^2`.
    pub fn ris_snr_per_watt(&self, n_b: usize, n_r: usize) -> f64 {
        n_b as f64 * n_r as f64 * self.eta_r * self.eta_r / self.noise_power
    }
}

/// A validated parameter set together with its link gains.
///
/// Gains are derived from the parameters by default but may be overridden,
/// e.g. to perturb them in sensitivity studies.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: ScenarioParams,
    pub gains: LinkGains,
}

impl Scenario {
    pub fn new(params: ScenarioParams) -> Result<Self> {
        let gains = LinkGains::from_params(&params)?;
        Ok(Self { params, gains })
    }

    pub fn reference() -> Self {
        Self::new(ScenarioParams::reference()).expect("reference parameters are valid")
    }

    pub fn with_gains(mut self, gains: LinkGains) -> Result<Self> {
        if !(gains.eta_d > 0.0 && gains.eta_r > 0.0 && gains.noise_power > 0.0) {
            return domain("link gains and noise power must be positive");
        }
        self.gains = gains;
        Ok(self)
    }

    /// Returns a copy with `f` applied to the parameters and gains recomputed.
    pub fn modified(&self, f: impl FnOnce(&mut ScenarioParams)) -> Result<Self> {
        let mut params = self.params.clone();
        f(&mut params);
        Self::new(params)
    }

    pub fn direct_snr_per_watt(&self) -> f64 {
        self.gains.direct_snr_per_watt(self.params.n_b)
    }

    pub fn ris_snr_per_watt(&self) -> f64 {
        self.gains
            .ris_snr_per_watt(self.params.n_b, self.params.n_r)
    }
}

/// Availability of the direct (`direct`) and RIS (`ris`) paths; `true` means
/// the path is up (beta = 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockageState {
    pub direct: bool,
    pub ris: bool,
}

impl BlockageState {
    pub const CLEAR: Self = Self {
        direct: true,
        ris: true,
    };
    pub const DIRECT_BLOCKED: Self = Self {
        direct: false,
        ris: true,
    };
    pub const BLOCKED: Self = Self {
        direct: false,
        ris: false,
    };

    pub fn beta_d(&self) -> f64 {
        if self.direct {
            1.0
        } else {
            0.0
        }
    }

    pub fn beta_r(&self) -> f64 {
        if self.ris {
            1.0
        } else {
            0.0
        }
    }
}

/// Transmit powers (W) of the HC and LC streams on the direct (`_d`) and
/// RIS-directed (`_r`) beams.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerAllocation {
    pub h_d: f64,
    pub h_r: f64,
    pub l_d: f64,
    pub l_r: f64,
}

impl PowerAllocation {
    pub const ZERO: Self = Self {
        h_d: 0.0,
        h_r: 0.0,
        l_d: 0.0,
        l_r: 0.0,
    };

    pub fn new(h_d: f64, h_r: f64, l_d: f64, l_r: f64) -> Self {
        Self { h_d, h_r, l_d, l_r }
    }

    pub fn equal_split(p_max: f64) -> Self {
        let q = p_max / 4.0;
        Self::new(q, q, q, q)
    }

    pub fn total(&self) -> f64 {
        self.h_d + self.h_r + self.l_d + self.l_r
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.h_d, self.h_r, self.l_d, self.l_r]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_valid(&self, p_max: f64) -> bool {
        self.to_array().iter().all(|&p| p.is_finite() && p >= 0.0) && self.total() <= p_max
    }
}

/// Noise power over the band, `n0 * bandwidth`.
pub fn noise_power(n0: f64, bandwidth: f64) -> Result<f64> {
    if !(n0 > 0.0 && bandwidth > 0.0) {
        return domain(format!(
            "noise PSD and bandwidth must be positive, got n0={n0}, bandwidth={bandwidth}"
        ));
    }
    Ok(n0 * bandwidth)
}

/// Direct LOS amplitude gain: free-space spreading plus molecular absorption.
pub fn direct_gain(p: &ScenarioParams) -> f64 {
    (p.g_b * p.g_u).sqrt() * SPEED_OF_LIGHT / (4.0 * PI * p.f * p.d_bu)
        * (-0.5 * p.k_a * p.d_bu).exp()
}

/// Per-element amplitude gain of the BS-RIS-UE path.
pub fn ris_gain(p: &ScenarioParams) -> f64 {
    let (l_x, l_y) = p.element_dims();
    (p.g_b * p.g_u).sqrt() * l_x * l_y / (4.0 * PI * p.d_br * p.d_ru)
        * (-0.5 * p.k_a * (p.d_br + p.d_ru)).exp()
}

/// ULA response `[1, e^{j pi sin(phi)}, ..., e^{j pi (n-1) sin(phi)}]`.
pub fn array_response(n: usize, phi: f64) -> Result<Vec<Complex64>> {
    if n < 1 {
        return domain("array must have at least one element");
    }
    let s = phi.sin();
    Ok((0..n)
        .map(|k| Complex64::from_polar(1.0, PI * k as f64 * s))
        .collect())
}

/// SINRs `(gamma_h, gamma_l)` under the pencil-beam approximation: the LOS
/// and RIS beams are orthogonal at the BS, so received powers simply add.
pub fn approx_sinrs(
    gains: &LinkGains,
    n_b: usize,
    n_r: usize,
    p: &PowerAllocation,
    b: BlockageState,
) -> (f64, f64) {
    let direct = b.beta_d() * n_b as f64 * gains.eta_d * gains.eta_d;
    let ris = b.beta_r() * n_b as f64 * n_r as f64 * gains.eta_r * gains.eta_r;
    let hc = direct * p.h_d + ris * p.h_r;
    let lc = direct * p.l_d + ris * p.l_r;
    (hc / (lc + gains.noise_power), lc / gains.noise_power)
}

/// Shannon rates (bit/s) for both streams.
pub fn rates(gamma_h: f64, gamma_l: f64, bandwidth: f64) -> (f64, f64) {
    (
        bandwidth * gamma_h.ln_1p() / std::f64::consts::LN_2,
        bandwidth * gamma_l.ln_1p() / std::f64::consts::LN_2,
    )
}

/// Nested blockage law: one uniform draw `u` per slot, the RIS path is down
/// iff `u < q_r` and the direct path iff `u < q_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockageModel {
    q_d: f64,
    q_r: f64,
}

impl BlockageModel {
    pub fn new(q_d: f64, q_r: f64) -> Result<Self> {
        if !(0.0 <= q_r && q_r <= q_d && q_d <= 1.0) {
            return domain(format!(
                "blockage probabilities must satisfy 0 <= q_r <= q_d <= 1, got q_r={q_r}, q_d={q_d}"
            ));
        }
        Ok(Self { q_d, q_r })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BlockageState {
        let u: f64 = rng.random();
        BlockageState {
            direct: u >= self.q_d,
            ris: u >= self.q_r,
        }
    }
}

pub fn sample_blockage<R: Rng + ?Sized>(q_d: f64, q_r: f64, rng: &mut R) -> Result<BlockageState> {
    Ok(BlockageModel::new(q_d, q_r)?.sample(rng))
}
