//! Far-field link model around the surface.
//!
//! The received power in direction `θ` is the sum (in linear units) of three
//! contributions:
//!
//! * the surface path, `budget + 20·log10(|AF(θ)|/N)`;
//! * side-lobe leakage of the transmit horn, a Gaussian lobe centred on the
//!   specular direction sitting `leakage_floor_db` below the ideal specular
//!   peak;
//! * the power-meter noise floor.
//!
//! Power readings used by the optimizer may carry Gaussian jitter (in dB).
//! For the physical layer, the leakage is treated as interference and the
//! receiver noise is the meter floor scaled from the measurement bandwidth
//! to the occupied signal bandwidth.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::ris::{ReflectionState, RisGeometry};

#[derive(Debug, Clone, PartialEq)]
pub struct LinkGeometry {
    /// Transmitter to surface, meters.
    pub tx_distance: f64,
    /// Surface to receiver, meters.
    pub rx_distance: f64,
    /// Receiver direction, degrees.
    pub rx_angle: f64,
    /// Transmit chain gain (power amplifier plus horn), dB.
    pub tx_gain_db: f64,
    /// Receive chain gain (low-noise amplifier plus horn), dB.
    pub rx_gain_db: f64,
    /// Aperture gain of the surface, dB.
    pub ris_gain_db: f64,
    /// Horn half-power beamwidth, degrees.
    pub horn_beamwidth: f64,
    pub tx_power_dbm: f64,
}

impl Default for LinkGeometry {
    fn default() -> Self {
        Self {
            tx_distance: 0.2,
            rx_distance: 0.2,
            rx_angle: 0.0,
            tx_gain_db: 38.0,
            rx_gain_db: 47.0,
            ris_gain_db: 32.0,
            horn_beamwidth: 7.0,
            tx_power_dbm: -20.0,
        }
    }
}

impl LinkGeometry {
    pub fn validate(&self) -> Result<()> {
        for (what, d) in [("tx_distance", self.tx_distance), ("rx_distance", self.rx_distance)] {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::OutOfRange {
                    what,
                    value: d,
                    range: "(0, inf) meters",
                });
            }
        }
        check_rx_angle(self.rx_angle)?;
        if !(self.horn_beamwidth > 0.0) {
            return Err(Error::OutOfRange {
                what: "horn_beamwidth",
                value: self.horn_beamwidth,
                range: "(0, inf) degrees",
            });
        }
        Ok(())
    }

    pub fn with_rx_angle(&self, rx_angle: f64) -> Self {
        Self {
            rx_angle,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    /// Floor of the power reading within `measurement_bandwidth_hz`, dBm.
    pub noise_floor_dbm: f64,
    /// Standard deviation of power-reading jitter, dB.
    pub measurement_sigma_db: f64,
    /// Level of the leakage lobe at the specular direction, in dB below the
    /// ideal specular peak of the surface path.
    pub leakage_floor_db: f64,
    /// Full width at half maximum of the leakage lobe, degrees.
    pub leakage_beamwidth_deg: f64,
    /// Resolution bandwidth of the power reading, Hz.
    pub measurement_bandwidth_hz: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            noise_floor_dbm: -71.0,
            measurement_sigma_db: 0.1,
            leakage_floor_db: 4.0,
            leakage_beamwidth_deg: 18.0,
            measurement_bandwidth_hz: 50e6,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.measurement_sigma_db >= 0.0) {
            return Err(Error::OutOfRange {
                what: "measurement_sigma_db",
                value: self.measurement_sigma_db,
                range: "[0, inf) dB",
            });
        }
        if !(self.leakage_beamwidth_deg > 0.0) {
            return Err(Error::OutOfRange {
                what: "leakage_beamwidth_deg",
                value: self.leakage_beamwidth_deg,
                range: "(0, inf) degrees",
            });
        }
        if !(self.measurement_bandwidth_hz > 0.0) {
            return Err(Error::OutOfRange {
                what: "measurement_bandwidth_hz",
                value: self.measurement_bandwidth_hz,
                range: "(0, inf) Hz",
            });
        }
        Ok(())
    }

    /// Receiver noise power integrated over `bandwidth_hz`, dBm.
    pub fn noise_power_dbm(&self, bandwidth_hz: f64) -> f64 {
        self.noise_floor_dbm + 10.0 * (bandwidth_hz / self.measurement_bandwidth_hz).log10()
    }

    /// Same model with reading jitter switched off.
    pub fn without_jitter(&self) -> Self {
        Self {
            measurement_sigma_db: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub angle: f64,
    pub complex_field: Complex64,
    pub power_dbm: f64,
}

fn check_rx_angle(deg: f64) -> Result<()> {
    if deg.is_finite() && (-90.0..=90.0).contains(&deg) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "rx_angle",
            value: deg,
            range: "[-90, 90] degrees",
        })
    }
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Free-space path loss `20·log10(4πd/λ)` in dB.
pub fn fspl_db(distance: f64, frequency: f64) -> f64 {
    let lambda = crate::ris::SPEED_OF_LIGHT / frequency;
    20.0 * (4.0 * std::f64::consts::PI * distance / lambda).log10()
}

/// Per-element phase factors `exp(−j·i·k·p·(sin θ_in + sin θ))` for one
/// observation direction. Computing these once per direction makes an array
/// factor evaluation a plain dot product.
#[derive(Debug, Clone)]
pub struct SteeringVector {
    angle: f64,
    factors: Vec<Complex64>,
}

impl SteeringVector {
    pub fn new(geom: &RisGeometry, angle: f64) -> Self {
        let psi = geom.phase_gradient(angle);
        Self {
            angle,
            factors: (0..geom.element_count)
                .map(|i| Complex64::from_polar(1.0, -(i as f64) * psi))
                .collect(),
        }
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn apply(&self, state: &ReflectionState) -> Complex64 {
        state.coefficients().iter().zip(&self.factors).map(|(c, s)| c * s).sum()
    }
}

/// `Σ_i c_i·exp(−j·i·k·p·(sin θ_in + sin θ))`.
pub fn array_factor(geom: &RisGeometry, state: &ReflectionState, angle: f64) -> Complex64 {
    SteeringVector::new(geom, angle).apply(state)
}

/// Linear contributions to the power received in one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerComponents {
    /// Surface path, mW.
    pub surface_mw: f64,
    /// Phase of the surface path (array-factor phase), radians.
    pub surface_phase: f64,
    pub leakage_mw: f64,
    pub floor_mw: f64,
}

impl PowerComponents {
    pub fn total_mw(&self) -> f64 {
        self.surface_mw + self.leakage_mw + self.floor_mw
    }

    pub fn total_dbm(&self) -> f64 {
        mw_to_dbm(self.total_mw())
    }
}

/// Geometry, link budget and noise bundled together.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkModel {
    pub ris: RisGeometry,
    pub link: LinkGeometry,
    pub noise: NoiseModel,
}

impl LinkModel {
    pub fn new(ris: RisGeometry, link: LinkGeometry, noise: NoiseModel) -> Result<Self> {
        ris.validate()?;
        link.validate()?;
        noise.validate()?;
        Ok(Self { ris, link, noise })
    }

    /// Power reaching the receiver through an ideal, fully coherent surface
    /// (`|AF| = N`), dBm.
    pub fn budget_dbm(&self) -> f64 {
        let f = self.ris.carrier_frequency;
        self.link.tx_power_dbm + self.link.tx_gain_db + self.link.rx_gain_db + self.link.ris_gain_db
            - fspl_db(self.link.tx_distance, f)
            - fspl_db(self.link.rx_distance, f)
    }

    /// Leakage power at `angle`, mW.
    pub fn leakage_mw(&self, angle: f64) -> f64 {
        let offset = (angle - self.ris.specular_angle()) / self.noise.leakage_beamwidth_deg;
        let taper = (-4.0 * LN_2 * offset * offset).exp();
        dbm_to_mw(self.budget_dbm() - self.noise.leakage_floor_db) * taper
    }

    pub fn components_with(&self, steer: &SteeringVector, state: &ReflectionState) -> PowerComponents {
        let af = steer.apply(state);
        let n = self.ris.element_count as f64;
        PowerComponents {
            surface_mw: dbm_to_mw(self.budget_dbm()) * af.norm_sqr() / (n * n),
            surface_phase: af.arg(),
            leakage_mw: self.leakage_mw(steer.angle()),
            floor_mw: dbm_to_mw(self.noise.noise_floor_dbm),
        }
    }

    pub fn components(&self, state: &ReflectionState, angle: f64) -> PowerComponents {
        self.components_with(&SteeringVector::new(&self.ris, angle), state)
    }

    /// Power reading at `angle`. With `rng`, Gaussian jitter of
    /// `measurement_sigma_db` is added.
    pub fn rrp_at<R: Rng + ?Sized>(&self, state: &ReflectionState, angle: f64, rng: Option<&mut R>) -> f64 {
        let clean = self.components(state, angle).total_dbm();
        self.jitter(clean, rng)
    }

    pub(crate) fn jitter<R: Rng + ?Sized>(&self, clean_dbm: f64, rng: Option<&mut R>) -> f64 {
        match rng {
            Some(rng) if self.noise.measurement_sigma_db > 0.0 => {
                let n: f64 = rng.sample(StandardNormal);
                clean_dbm + n * self.noise.measurement_sigma_db
            }
            _ => clean_dbm,
        }
    }

    /// Complex narrowband gain towards a user, in √mW: `|g|²` equals the
    /// jitter-free reading and `arg g` is the array-factor phase.
    pub fn user_channel_gain(&self, state: &ReflectionState, user_angle: f64) -> Complex64 {
        let c = self.components(state, user_angle);
        Complex64::from_polar(c.total_mw().sqrt(), c.surface_phase)
    }

    /// Baseband link towards a user, normalized to the receiver noise over
    /// `occupied_bandwidth_hz`: the coherent gain carries only the surface
    /// path, the leakage adds to the noise variance.
    pub fn phy_link(&self, state: &ReflectionState, user_angle: f64, occupied_bandwidth_hz: f64) -> PhyLink {
        let c = self.components(state, user_angle);
        let noise_mw = dbm_to_mw(self.noise.noise_power_dbm(occupied_bandwidth_hz));
        PhyLink {
            gain: Complex64::from_polar((c.surface_mw / noise_mw).sqrt(), c.surface_phase),
            noise: Awgn {
                variance: 1.0 + c.leakage_mw / noise_mw,
            },
        }
    }

    /// Samples the field on a grid of directions.
    pub fn field_scan(&self, state: &ReflectionState, angles: &[f64]) -> Vec<FieldSample> {
        let scale = dbm_to_mw(self.budget_dbm()).sqrt() / self.ris.element_count as f64;
        angles
            .iter()
            .map(|&angle| {
                let af = array_factor(&self.ris, state, angle);
                FieldSample {
                    angle,
                    complex_field: af * scale,
                    power_dbm: self.components(state, angle).total_dbm(),
                }
            })
            .collect()
    }
}

/// Reading at `link.rx_angle`.
pub fn rrp<R: Rng + ?Sized>(
    geom: &RisGeometry,
    link: &LinkGeometry,
    noise: &NoiseModel,
    state: &ReflectionState,
    rng: Option<&mut R>,
) -> f64 {
    let model = LinkModel {
        ris: geom.clone(),
        link: link.clone(),
        noise: noise.clone(),
    };
    model.rrp_at(state, link.rx_angle, rng)
}

pub fn user_channel_gain(
    geom: &RisGeometry,
    link: &LinkGeometry,
    noise: &NoiseModel,
    state: &ReflectionState,
    user_angle: f64,
) -> Complex64 {
    let model = LinkModel {
        ris: geom.clone(),
        link: link.clone(),
        noise: noise.clone(),
    };
    model.user_channel_gain(state, user_angle)
}

/// Complex additive white Gaussian noise with the given per-sample variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Awgn {
    pub variance: f64,
}

impl Awgn {
    pub const fn off() -> Self {
        Self { variance: 0.0 }
    }

    /// Noise variance that yields `snr_db` for a signal of `signal_power`
    /// per sample.
    pub fn from_snr_db(snr_db: f64, signal_power: f64) -> Self {
        Self {
            variance: signal_power / 10f64.powf(snr_db / 10.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhyLink {
    pub gain: Complex64,
    pub noise: Awgn,
}

impl PhyLink {
    pub fn snr_db(&self) -> f64 {
        10.0 * (self.gain.norm_sqr() / self.noise.variance).log10()
    }
}

/// `gain·x + n` with circular complex Gaussian `n`.
pub fn apply_channel<R: Rng + ?Sized>(
    waveform: &[Complex64],
    gain: Complex64,
    noise: Awgn,
    rng: &mut R,
) -> Vec<Complex64> {
    if noise.variance <= 0.0 {
        return waveform.iter().map(|x| x * gain).collect();
    }
    let normal = Normal::new(0.0, (noise.variance / 2.0).sqrt()).expect("finite variance");
    waveform
        .iter()
        .map(|x| x * gain + Complex64::new(normal.sample(rng), normal.sample(rng)))
        .collect()
}
