//! 3GPP TR 38.901 UMi street-canyon pathloss, large-scale fading and SNR
//! calibration.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{NetworkArea, NetworkLayout};
use crate::rng::{stream, Stream};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathlossModel {
    /// Line-of-sight on every link.
    UmiLos,
    /// Non-line-of-sight on every link.
    UmiNlos,
    /// Per-link LOS state drawn from the UMi LOS probability (default).
    UmiMixed,
    /// The simplified optional NLOS fit, `32.4 + 20 log10 fc + 31.9 log10 d3D`.
    UmiNlosOptional,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathlossConfig {
    /// GHz.
    pub carrier_frequency: f64,
    pub ru_height: f64,
    pub ue_height: f64,
    pub min_2d_distance: f64,
    pub model: PathlossModel,
    /// Log-normal shadow fading with the model's standard deviation.
    pub shadowing: bool,
}

impl Default for PathlossConfig {
    fn default() -> Self {
        PathlossConfig {
            carrier_frequency: 3.5,
            ru_height: 10.0,
            ue_height: 1.5,
            min_2d_distance: 1.0,
            model: PathlossModel::UmiMixed,
            shadowing: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkState {
    Los,
    Nlos,
    NlosOptional,
}

impl PathlossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_frequency > 0.0 && self.ru_height > 0.0 && self.ue_height > 0.0) {
            return Err(Error::Config("carrier frequency and antenna heights must be positive".into()));
        }
        if !(self.min_2d_distance >= 0.0) {
            return Err(Error::Config("min_2d_distance must be non-negative".into()));
        }
        Ok(())
    }

    fn d3d(&self, d2d: f64) -> f64 {
        let d2d = d2d.max(self.min_2d_distance);
        d2d.hypot(self.ru_height - self.ue_height)
    }

    /// Breakpoint distance with effective heights (1 m environment height).
    pub fn breakpoint_distance(&self) -> f64 {
        4.0 * (self.ru_height - 1.0) * (self.ue_height - 1.0) * self.carrier_frequency * 1e9 / SPEED_OF_LIGHT
    }

    fn los_db(&self, d2d: f64) -> f64 {
        let d3d = self.d3d(d2d);
        let fc = self.carrier_frequency.log10();
        let bp = self.breakpoint_distance();
        if d2d.max(self.min_2d_distance) <= bp {
            32.4 + 21.0 * d3d.log10() + 20.0 * fc
        } else {
            let dh = self.ru_height - self.ue_height;
            32.4 + 40.0 * d3d.log10() + 20.0 * fc - 9.5 * (bp * bp + dh * dh).log10()
        }
    }

    fn nlos_db(&self, d2d: f64) -> f64 {
        let d3d = self.d3d(d2d);
        let nlos = 35.3 * d3d.log10() + 22.4 + 21.3 * self.carrier_frequency.log10() - 0.3 * (self.ue_height - 1.5);
        nlos.max(self.los_db(d2d))
    }

    fn nlos_optional_db(&self, d2d: f64) -> f64 {
        32.4 + 20.0 * self.carrier_frequency.log10() + 31.9 * self.d3d(d2d).log10()
    }

    /// Pathloss in dB for a given link state, without shadowing.
    pub fn pathloss_db_state(&self, d2d: f64, state: LinkState) -> f64 {
        match state {
            LinkState::Los => self.los_db(d2d),
            LinkState::Nlos => self.nlos_db(d2d),
            LinkState::NlosOptional => self.nlos_optional_db(d2d),
        }
    }

    /// UMi LOS probability.
    pub fn los_probability(&self, d2d: f64) -> f64 {
        if d2d <= 18.0 {
            1.0
        } else {
            18.0 / d2d + (-d2d / 36.0).exp() * (1.0 - 18.0 / d2d)
        }
    }

    pub fn shadowing_std_db(state: LinkState) -> f64 {
        match state {
            LinkState::Los => 4.0,
            LinkState::Nlos => 7.82,
            LinkState::NlosOptional => 8.2,
        }
    }

    /// Expected pathloss in dB at `d2d`, shadowing excluded. For the mixed
    /// model the two states are weighted by the LOS probability.
    pub fn expected_pathloss_db(&self, d2d: f64) -> f64 {
        match self.model {
            PathlossModel::UmiLos => self.los_db(d2d),
            PathlossModel::UmiNlos => self.nlos_db(d2d),
            PathlossModel::UmiNlosOptional => self.nlos_optional_db(d2d),
            PathlossModel::UmiMixed => {
                let p = self.los_probability(d2d);
                p * self.los_db(d2d) + (1.0 - p) * self.nlos_db(d2d)
            }
        }
    }
}

/// Pathloss of the configured default link state (LOS unless the model is
/// pure NLOS).
pub fn pathloss_db(d2d: f64, cfg: &PathlossConfig) -> f64 {
    match cfg.model {
        PathlossModel::UmiNlos => cfg.nlos_db(d2d),
        PathlossModel::UmiNlosOptional => cfg.nlos_optional_db(d2d),
        _ => cfg.los_db(d2d),
    }
}

/// Large-scale fading coefficients, indexed `[l][k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LsfcMatrix {
    num_rus: usize,
    num_ues: usize,
    beta: Vec<f64>,
}

impl LsfcMatrix {
    pub fn from_fn(num_rus: usize, num_ues: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut beta = Vec::with_capacity(num_rus * num_ues);
        for l in 0..num_rus {
            for k in 0..num_ues {
                beta.push(f(l, k));
            }
        }
        LsfcMatrix { num_rus, num_ues, beta }
    }

    pub fn num_rus(&self) -> usize {
        self.num_rus
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    #[inline]
    pub fn get(&self, l: usize, k: usize) -> f64 {
        self.beta[l * self.num_ues + k]
    }

    pub fn max_over_rus(&self, k: usize) -> f64 {
        (0..self.num_rus).map(|l| self.get(l, k)).fold(0.0, f64::max)
    }
}

/// LSFCs for a layout. Link states and shadowing draws are keyed by
/// `(seed, drop, l, k)`.
pub fn compute_lsfc(layout: &NetworkLayout, cfg: &PathlossConfig, seed: u64, drop: u64) -> LsfcMatrix {
    LsfcMatrix::from_fn(layout.num_rus(), layout.num_ues(), |l, k| {
        let d = layout.area.distance(layout.rus[l], layout.ues[k]);
        let idx = [drop, l as u64, k as u64];
        let state = match cfg.model {
            PathlossModel::UmiLos => LinkState::Los,
            PathlossModel::UmiNlos => LinkState::Nlos,
            PathlossModel::UmiNlosOptional => LinkState::NlosOptional,
            PathlossModel::UmiMixed => {
                let u: f64 = stream(seed, Stream::LinkState, &idx).gen();
                if u < cfg.los_probability(d) {
                    LinkState::Los
                } else {
                    LinkState::Nlos
                }
            }
        };
        let mut db = cfg.pathloss_db_state(d, state);
        if cfg.shadowing {
            let z: f64 = stream(seed, Stream::Shadowing, &idx).sample(StandardNormal);
            db += PathlossConfig::shadowing_std_db(state) * z;
        }
        10f64.powf(-db / 10.0)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SnrCalibration {
    pub snr: f64,
    pub d_l: f64,
    pub beta_bar: f64,
}

impl SnrCalibration {
    /// Cluster admission threshold on the LSFC for a given `eta`.
    pub fn threshold(&self, eta: f64, antennas: usize) -> f64 {
        eta / (antennas as f64 * self.snr)
    }
}

/// Reference distance is `2.5 d_L`, with `d_L` the radius of a disk of area `A/L`.
pub fn calibrate_snr(area: &NetworkArea, num_rus: usize, antennas: usize, cfg: &PathlossConfig) -> SnrCalibration {
    let d_l = (area.area() / (PI * num_rus as f64)).sqrt();
    let beta_bar = 10f64.powf(-cfg.expected_pathloss_db(2.5 * d_l) / 10.0);
    SnrCalibration { snr: 1.0 / (beta_bar * antennas as f64), d_l, beta_bar }
}
