use crate::error::{domain, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Angles (rad) used by the exact beamforming model.
///
/// BS angles are measured from the BS array broadside, RIS angles from the
/// RIS broadside; the array response of either ULA is `exp(j*pi*k*sin(phi))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angles {
    /// Departure angle of the direct BS-UE path at the BS.
    pub bu: f64,
    /// Departure angle of the BS-RIS path at the BS.
    pub br: f64,
    /// Arrival angle of the BS-RIS path at the RIS.
    pub rb: f64,
    /// Departure angle of the RIS-UE path at the RIS.
    pub ru: f64,
}

/// Planar node positions in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layout {
    pub bs: [f64; 2],
    pub ue: [f64; 2],
    pub ris: [f64; 2],
}

impl Layout {
    /// BS at the origin, UE on the positive x-axis and the RIS on the
    /// upper-half-plane intersection of the two distance circles.
    pub fn from_distances(d_bu: f64, d_br: f64, d_ru: f64) -> Result<Self> {
        if !(d_bu > 0.0 && d_br > 0.0 && d_ru > 0.0) {
            return domain("distances must be positive");
        }
        let x = (d_bu * d_bu + d_br * d_br - d_ru * d_ru) / (2.0 * d_bu);
        let y2 = d_br * d_br - x * x;
        if y2 < 0.0 {
            return domain(format!(
                "distances d_bu={d_bu}, d_br={d_br}, d_ru={d_ru} violate the triangle inequality"
            ));
        }
        Ok(Self {
            bs: [0.0, 0.0],
            ue: [d_bu, 0.0],
            ris: [x, y2.sqrt()],
        })
    }

    /// The BS array has its broadside along +x (towards the UE); the RIS lies
    /// parallel to the BS-UE line and faces it (broadside along -y).
    pub fn angles(&self) -> Angles {
        let bs_angle = |to: [f64; 2]| (to[1] - self.bs[1]).atan2(to[0] - self.bs[0]);
        // axis +x, broadside -y
        let ris_angle = |to: [f64; 2]| {
            let v = [to[0] - self.ris[0], to[1] - self.ris[1]];
            v[0].atan2(-v[1])
        };
        Angles {
            bu: bs_angle(self.ue),
            br: bs_angle(self.ris),
            rb: ris_angle(self.bs),
            ru: ris_angle(self.ue),
        }
    }
}

/// Physical and traffic configuration of one scenario, in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    /// Carrier frequency (Hz).
    pub f: f64,
    /// Bandwidth (Hz).
    pub bandwidth: f64,
    /// BS power budget (W).
    pub p_max: f64,
    /// Noise power spectral density (W/Hz).
    pub n0: f64,
    /// BS antenna gain (linear).
    pub g_b: f64,
    /// UE antenna gain (linear).
    pub g_u: f64,
    pub n_b: usize,
    pub n_r: usize,
    pub d_bu: f64,
    pub d_br: f64,
    pub d_ru: f64,
    /// Molecular absorption coefficient (1/m).
    pub k_a: f64,
    /// RIS element length (m); half a wavelength when `None`.
    pub l_x: Option<f64>,
    /// RIS element width (m); half a wavelength when `None`.
    pub l_y: Option<f64>,
    /// Blockage probability of the direct link.
    pub q_d: f64,
    /// Blockage probability of the RIS link.
    pub q_r: f64,
    /// Derived from [`Layout::from_distances`] when `None`.
    pub angles: Option<Angles>,
    /// Fraction of packets classified as high-criticality.
    pub alpha: f64,
    /// Packet size (bit).
    pub packet_size: f64,
    /// Slot duration (s).
    pub slot_duration: f64,
    /// Mean packet arrivals per slot.
    pub arrival_rate: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl ScenarioParams {
    /// Reference parameter set: 300 GHz carrier, 10 GHz bandwidth, 10 dBm
    /// budget, -174 dBm/Hz noise, 20 dB antennas, 64 BS antennas, 10^4 RIS
    /// elements, 10/8.7/2 m distances, q_d = 0.3, q_r = 0.1, with 10 Mbit
    /// packets, 100 ms slots and 700 packets/slot.
    pub fn reference() -> Self {
        Self {
            f: 300e9,
            bandwidth: 10e9,
            p_max: dbm_to_watts(10.0),
            n0: dbm_to_watts(-174.0),
            g_b: db_to_linear(20.0),
            g_u: db_to_linear(20.0),
            n_b: 64,
            n_r: 10_000,
            d_bu: 10.0,
            d_br: 8.7,
            d_ru: 2.0,
            k_a: 0.0012,
            l_x: None,
            l_y: None,
            q_d: 0.3,
            q_r: 0.1,
            angles: None,
            alpha: 0.1,
            packet_size: 10e6,
            slot_duration: 0.1,
            arrival_rate: 700.0,
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f
    }

    pub fn element_dims(&self) -> (f64, f64) {
        let half = self.wavelength() / 2.0;
        (self.l_x.unwrap_or(half), self.l_y.unwrap_or(half))
    }

    pub fn resolved_angles(&self) -> Result<Angles> {
        match self.angles {
            Some(a) => Ok(a),
            None => Ok(Layout::from_distances(self.d_bu, self.d_br, self.d_ru)?.angles()),
        }
    }

    /// Packets per slot carried by one bit/s of rate.
    pub fn packets_per_bit_rate(&self) -> f64 {
        self.slot_duration / self.packet_size
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("f", self.f),
            ("bandwidth", self.bandwidth),
            ("p_max", self.p_max),
            ("n0", self.n0),
            ("g_b", self.g_b),
            ("g_u", self.g_u),
            ("d_bu", self.d_bu),
            ("d_br", self.d_br),
            ("d_ru", self.d_ru),
            ("packet_size", self.packet_size),
            ("slot_duration", self.slot_duration),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return domain(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.n_b < 1 || self.n_r < 1 {
            return domain("n_b and n_r must be at least 1");
        }
        if !(self.k_a.is_finite() && self.k_a >= 0.0) {
            return domain(format!("k_a must be non-negative, got {}", self.k_a));
        }
        for (name, v) in [("l_x", self.l_x), ("l_y", self.l_y)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return domain(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if !(0.0 <= self.q_r && self.q_r <= self.q_d && self.q_d <= 1.0) {
            return domain(format!(
                "blockage probabilities must satisfy 0 <= q_r <= q_d <= 1, got q_r={}, q_d={}",
                self.q_r, self.q_d
            ));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return domain(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if !(self.arrival_rate.is_finite() && self.arrival_rate >= 0.0) {
            return domain(format!(
                "arrival_rate must be non-negative, got {}",
                self.arrival_rate
            ));
        }
        Ok(())
    }
}
