//! Behavioral model of the liquid-crystal reflective surface.
//!
//! The surface is a 1-D array of `N` stripes, each biased with a voltage in
//! `[0, 35]` V. A bias voltage maps to a complex reflection coefficient
//! through an [`ElementResponseModel`]; a full [`VoltagePattern`] is turned
//! into a [`ReflectionState`] by [`realize`], optionally smoothed by a
//! nearest-neighbour coupling kernel.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const MAX_VOLTAGE: f64 = 35.0;

/// Header line required at the top of a response-curve override file.
pub const RESPONSE_FILE_HEADER: &str = "# ris-response v1";

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let w = phase.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn check_angle(what: &'static str, deg: f64) -> Result<()> {
    if deg.is_finite() && deg > -90.0 && deg < 90.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what,
            value: deg,
            range: "(-90, 90) degrees",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RisGeometry {
    pub element_count: usize,
    /// Stripe period in meters.
    pub element_period: f64,
    /// Carrier frequency in Hz.
    pub carrier_frequency: f64,
    /// Direction of the incoming beam, degrees.
    pub incidence_angle: f64,
}

impl Default for RisGeometry {
    fn default() -> Self {
        Self {
            element_count: 80,
            element_period: 317e-6,
            carrier_frequency: 220e9,
            incidence_angle: -77.0,
        }
    }
}

impl RisGeometry {
    pub fn new(
        element_count: usize,
        element_period: f64,
        carrier_frequency: f64,
        incidence_angle: f64,
    ) -> Result<Self> {
        let geom = Self {
            element_count,
            element_period,
            carrier_frequency,
            incidence_angle,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        if self.element_count == 0 {
            return Err(Error::invalid("element_count", "must be at least 1"));
        }
        if !(self.element_period > 0.0 && self.element_period.is_finite()) {
            return Err(Error::OutOfRange {
                what: "element_period",
                value: self.element_period,
                range: "(0, inf) meters",
            });
        }
        if !(self.carrier_frequency > 0.0 && self.carrier_frequency.is_finite()) {
            return Err(Error::OutOfRange {
                what: "carrier_frequency",
                value: self.carrier_frequency,
                range: "(0, inf) Hz",
            });
        }
        check_angle("incidence_angle", self.incidence_angle)
    }

    /// `k = 2πf/c` in rad/m.
    pub fn wavenumber(&self) -> f64 {
        TAU * self.carrier_frequency / SPEED_OF_LIGHT
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Mirror direction of the incident beam.
    pub fn specular_angle(&self) -> f64 {
        -self.incidence_angle
    }

    /// Phase step between adjacent elements that steers the reflection
    /// towards `angle_deg`: `k·p·(sin θ_in + sin θ)`.
    pub fn phase_gradient(&self, angle_deg: f64) -> f64 {
        self.wavenumber()
            * self.element_period
            * (self.incidence_angle.to_radians().sin() + angle_deg.to_radians().sin())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoltagePattern(Vec<f64>);

impl VoltagePattern {
    pub fn new(voltages: Vec<f64>) -> Result<Self> {
        for &v in &voltages {
            if !(0.0..=MAX_VOLTAGE).contains(&v) {
                return Err(Error::OutOfRange {
                    what: "bias voltage",
                    value: v,
                    range: "[0, 35] V",
                });
            }
        }
        Ok(Self(voltages))
    }

    /// Builds a pattern by hard-clipping every entry into `[0, 35]` V.
    pub fn clipped(voltages: Vec<f64>) -> Self {
        Self(
            voltages
                .into_iter()
                .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, MAX_VOLTAGE) })
                .collect(),
        )
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn uniform(len: usize, volts: f64) -> Result<Self> {
        Self::new(vec![volts; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Per-element phases, stored wrapped to `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePattern(Vec<f64>);

impl PhasePattern {
    pub fn new(phases: impl IntoIterator<Item = f64>) -> Self {
        Self(phases.into_iter().map(wrap_phase).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Voltage to (amplitude, phase) map of a single element, held as a sampled
/// table with linear interpolation between rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementResponseModel {
    volts: Vec<f64>,
    amplitude: Vec<f64>,
    phase: Vec<f64>,
}

impl Default for ElementResponseModel {
    fn default() -> Self {
        Self::smoothstep(255.0, 0.15)
    }
}

impl ElementResponseModel {
    pub const TABLE_LEN: usize = 256;

    /// Analytic default: `phase(V) = span·S(V/35)` with `S(x) = 3x² − 2x³`,
    /// `amplitude(V) = 1 − ripple·sin²(πV/35)`.
    pub fn smoothstep(phase_span_deg: f64, ripple: f64) -> Self {
        let span = phase_span_deg.to_radians();
        let n = Self::TABLE_LEN;
        let mut volts = Vec::with_capacity(n);
        let mut amplitude = Vec::with_capacity(n);
        let mut phase = Vec::with_capacity(n);
        for i in 0..n {
            let x = i as f64 / (n - 1) as f64;
            volts.push(x * MAX_VOLTAGE);
            amplitude.push(1.0 - ripple * (PI * x).sin().powi(2));
            phase.push(span * x * x * (3.0 - 2.0 * x));
        }
        Self {
            volts,
            amplitude,
            phase,
        }
    }

    /// Builds a model from `(volts, phase_deg, amplitude)` rows.
    ///
    /// Rows must be strictly increasing in voltage, span exactly 0 V to 35 V,
    /// and have non-decreasing phase. The phase at 0 V is taken as the
    /// reference and subtracted from every row.
    pub fn from_rows(rows: &[(f64, f64, f64)]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::invalid("response curve", "needs at least two rows"));
        }
        if rows[0].0 != 0.0 || rows[rows.len() - 1].0 != MAX_VOLTAGE {
            return Err(Error::invalid(
                "response curve",
                "rows must start at 0 V and end at 35 V",
            ));
        }
        for w in rows.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::invalid(
                    "response curve",
                    format!("voltages not strictly increasing at {} V", w[1].0),
                ));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::invalid(
                    "response curve",
                    format!("phase decreases at {} V", w[1].0),
                ));
            }
        }
        let phase0 = rows[0].1;
        if rows[rows.len() - 1].1 - phase0 >= 360.0 {
            return Err(Error::invalid("response curve", "phase span must be below 360 degrees"));
        }
        for r in rows {
            if !(r.2 > 0.0 && r.2 <= 1.0) {
                return Err(Error::OutOfRange {
                    what: "amplitude ratio",
                    value: r.2,
                    range: "(0, 1]",
                });
            }
        }
        Ok(Self {
            volts: rows.iter().map(|r| r.0).collect(),
            phase: rows.iter().map(|r| (r.1 - phase0).to_radians()).collect(),
            amplitude: rows.iter().map(|r| r.2).collect(),
        })
    }

    /// Parses the text of a response-curve override file.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == RESPONSE_FILE_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    path: source.to_string(),
                    line: 1,
                    message: format!("expected header `{RESPONSE_FILE_HEADER}`"),
                })
            }
        }
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            let parse_err = |message: String| Error::Parse {
                path: source.to_string(),
                line: idx + 1,
                message,
            };
            if fields.len() != 2 && fields.len() != 3 {
                return Err(parse_err(format!("expected 2 or 3 columns, found {}", fields.len())));
            }
            let mut nums = [0.0, 0.0, 1.0];
            for (slot, f) in nums.iter_mut().zip(&fields) {
                *slot = f
                    .parse::<f64>()
                    .map_err(|_| parse_err(format!("not a number: `{f}`")))?;
            }
            if let Some(&(prev, _, _)) = rows.last() {
                if nums[0] <= prev {
                    return Err(parse_err(format!(
                        "voltage {} is not above the previous row ({prev})",
                        nums[0]
                    )));
                }
            }
            rows.push((nums[0], nums[1], nums[2]));
        }
        Self::from_rows(&rows).map_err(|e| Error::Parse {
            path: source.to_string(),
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Writes the table in the override-file format.
    pub fn to_file_text(&self) -> String {
        let mut out = String::from(RESPONSE_FILE_HEADER);
        out.push('\n');
        for i in 0..self.volts.len() {
            out.push_str(&format!(
                "{} {} {}\n",
                self.volts[i],
                self.phase[i].to_degrees(),
                self.amplitude[i]
            ));
        }
        out
    }

    /// Largest achievable phase, radians.
    pub fn phase_span(&self) -> f64 {
        self.phase[self.phase.len() - 1]
    }

    pub fn amplitude_floor(&self) -> f64 {
        self.amplitude.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `(amplitude, phase)` at `volts`, phase in radians.
    pub fn phase_of_voltage(&self, volts: f64) -> Result<(f64, f64)> {
        if !(0.0..=MAX_VOLTAGE).contains(&volts) {
            return Err(Error::OutOfRange {
                what: "bias voltage",
                value: volts,
                range: "[0, 35] V",
            });
        }
        Ok(self.response_unchecked(volts))
    }

    /// Interpolated `(amplitude, phase)`; `volts` must already be in range.
    pub(crate) fn response_unchecked(&self, volts: f64) -> (f64, f64) {
        let last = self.volts.len() - 1;
        // partition_point gives the first row strictly above `volts`
        let hi = self.volts.partition_point(|&v| v <= volts).clamp(1, last);
        let lo = hi - 1;
        let t = ((volts - self.volts[lo]) / (self.volts[hi] - self.volts[lo])).clamp(0.0, 1.0);
        let lerp = |a: &[f64]| a[lo] + t * (a[hi] - a[lo]);
        (lerp(&self.amplitude), lerp(&self.phase))
    }

    /// Voltage whose phase response is closest to `phase` (radians, reduced
    /// modulo 2π). Targets beyond the achievable span snap to whichever end
    /// of the curve is circularly closer.
    pub fn voltage_of_phase(&self, phase: f64) -> f64 {
        let target = wrap_phase(phase);
        let span = self.phase_span();
        if target >= span {
            let to_span = target - span;
            let to_zero = TAU - target;
            return if to_zero < to_span { 0.0 } else { MAX_VOLTAGE };
        }
        let hi = self.phase.partition_point(|&p| p <= target);
        if hi == 0 {
            return self.volts[0];
        }
        if hi >= self.phase.len() {
            return MAX_VOLTAGE;
        }
        let lo = hi - 1;
        let dp = self.phase[hi] - self.phase[lo];
        if dp <= 0.0 {
            return self.volts[lo];
        }
        let t = (target - self.phase[lo]) / dp;
        self.volts[lo] + t * (self.volts[hi] - self.volts[lo])
    }
}

/// Nearest-neighbour coupling between elements: a circular 3-tap kernel
/// `[α, 1−2α, α]` applied to the complex coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingConfig {
    pub alpha: f64,
}

impl CouplingConfig {
    pub const fn disabled() -> Self {
        Self { alpha: 0.0 }
    }

    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&alpha) {
            return Err(Error::OutOfRange {
                what: "coupling alpha",
                value: alpha,
                range: "[0, 0.5]",
            });
        }
        Ok(Self { alpha })
    }

    pub fn is_enabled(&self) -> bool {
        self.alpha > 0.0
    }
}

/// Complex reflection coefficient of every element.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionState {
    coefficients: Vec<Complex64>,
}

impl ReflectionState {
    pub fn new(coefficients: Vec<Complex64>) -> Result<Self> {
        if let Some(c) = coefficients.iter().find(|c| c.norm() > 1.0 + 1e-12) {
            return Err(Error::OutOfRange {
                what: "reflection coefficient magnitude",
                value: c.norm(),
                range: "[0, 1] (passive surface)",
            });
        }
        Ok(Self { coefficients })
    }

    /// Unit-amplitude state with the given phases.
    pub fn from_phases(phases: &PhasePattern) -> Self {
        Self {
            coefficients: phases
                .as_slice()
                .iter()
                .map(|&p| Complex64::from_polar(1.0, p))
                .collect(),
        }
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Same state with every coefficient rotated by `phase` radians.
    pub fn rotated(&self, phase: f64) -> Self {
        let r = Complex64::from_polar(1.0, phase);
        Self {
            coefficients: self.coefficients.iter().map(|c| c * r).collect(),
        }
    }
}

/// Per-element phases from the grating equation:
/// `φ(i) = i·k·p·(sin θ_in + sin θ_d)`, wrapped into `[0, 2π)`.
///
/// Indices are 0-based; shifting to 1-based only adds a global phase,
/// which no observable depends on.
pub fn grating_initial_phase(geom: &RisGeometry, target_angle: f64) -> Result<PhasePattern> {
    check_angle("target_angle", target_angle)?;
    let step = geom.phase_gradient(target_angle);
    Ok(PhasePattern::new((0..geom.element_count).map(|i| i as f64 * step)))
}

/// Initial pattern for one or more target directions.
///
/// A single target uses the grating phases directly. Several targets take
/// the element-wise argument of `Σ_d exp(jφ_d(i))` before mapping to volts.
pub fn initial_voltage_pattern(
    geom: &RisGeometry,
    model: &ElementResponseModel,
    targets: &[f64],
) -> Result<VoltagePattern> {
    let phases = initial_phase_pattern(geom, targets)?;
    Ok(VoltagePattern(
        phases.as_slice().iter().map(|&p| model.voltage_of_phase(p)).collect(),
    ))
}

/// Phase pattern behind [`initial_voltage_pattern`].
pub fn initial_phase_pattern(geom: &RisGeometry, targets: &[f64]) -> Result<PhasePattern> {
    match targets {
        [] => Err(Error::invalid("targets", "at least one direction is required")),
        [single] => grating_initial_phase(geom, *single),
        many => {
            let mut sum = vec![Complex64::new(0.0, 0.0); geom.element_count];
            for &t in many {
                let p = grating_initial_phase(geom, t)?;
                for (s, &phi) in sum.iter_mut().zip(p.as_slice()) {
                    *s += Complex64::from_polar(1.0, phi);
                }
            }
            Ok(PhasePattern::new(sum.into_iter().map(|s| s.arg())))
        }
    }
}

/// Turns a voltage pattern into reflection coefficients.
pub fn realize(
    geom: &RisGeometry,
    model: &ElementResponseModel,
    v: &VoltagePattern,
    coupling: CouplingConfig,
) -> Result<ReflectionState> {
    if v.len() != geom.element_count {
        return Err(Error::LengthMismatch {
            what: "voltage pattern length",
            expected: geom.element_count,
            actual: v.len(),
        });
    }
    let raw: Vec<Complex64> = v
        .as_slice()
        .iter()
        .map(|&volts| {
            let (a, p) = model.response_unchecked(volts);
            Complex64::from_polar(a, p)
        })
        .collect();
    if !coupling.is_enabled() {
        return Ok(ReflectionState { coefficients: raw });
    }
    let n = raw.len();
    let a = coupling.alpha;
    let coefficients = (0..n)
        .map(|i| {
            let prev = raw[(i + n - 1) % n];
            let next = raw[(i + 1) % n];
            prev * a + raw[i] * (1.0 - 2.0 * a) + next * a
        })
        .collect();
    Ok(ReflectionState { coefficients })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circ_dist(a: f64, b: f64) -> f64 {
        let d = wrap_phase(a - b);
        d.min(TAU - d)
    }

    #[test]
    fn wavenumber_matches_definition() {
        let g = RisGeometry::default();
        let k = 2.0 * PI * 220e9 / 2.99792458e8;
        assert!((g.wavenumber() - k).abs() / k < 1e-9);
    }

    #[test]
    fn geometry_validation() {
        assert!(RisGeometry::new(0, 317e-6, 220e9, -77.0).is_err());
        assert!(RisGeometry::new(80, 0.0, 220e9, -77.0).is_err());
        assert!(RisGeometry::new(80, 317e-6, -1.0, -77.0).is_err());
        assert!(RisGeometry::new(80, 317e-6, 220e9, -90.0).is_err());
        assert!(RisGeometry::new(80, 317e-6, 220e9, -77.0).is_ok());
    }

    #[test]
    fn grating_increment_is_constant() {
        let g = RisGeometry::default();
        let p = grating_initial_phase(&g, 12.0).unwrap();
        let step = g.phase_gradient(12.0);
        for i in 1..p.len() {
            let d = p.as_slice()[i] - p.as_slice()[i - 1];
            assert!(circ_dist(d, step) < 1e-9);
        }
    }

    #[test]
    fn grating_specular_is_zero() {
        let g = RisGeometry::default();
        let p = grating_initial_phase(&g, 77.0).unwrap();
        assert!(p.as_slice().iter().all(|&x| circ_dist(x, 0.0) < 1e-9));
    }

    #[test]
    fn grating_broadside_increment() {
        // k·p·sin(-77°) with k = 2π·220e9/c, p = 317 µm, worked by hand
        let g = RisGeometry::default();
        let p = grating_initial_phase(&g, 0.0).unwrap();
        let d = p.as_slice()[1] - p.as_slice()[0];
        assert!(circ_dist(d, -1.424_180_520_383_682) < 1e-9);
    }

    #[test]
    fn grating_rejects_bad_angles() {
        let g = RisGeometry::default();
        assert!(grating_initial_phase(&g, 90.0).is_err());
        assert!(grating_initial_phase(&g, -95.0).is_err());
        assert!(grating_initial_phase(&g, f64::NAN).is_err());
    }

    #[test]
    fn response_endpoints() {
        let m = ElementResponseModel::default();
        let (_, p0) = m.phase_of_voltage(0.0).unwrap();
        let (_, p35) = m.phase_of_voltage(35.0).unwrap();
        assert_eq!(p0, 0.0);
        assert!((p35.to_degrees() - 255.0).abs() < 1e-9);
        assert!(m.phase_of_voltage(20.0).unwrap().1 >= m.phase_of_voltage(10.0).unwrap().1);
        assert!(m.phase_of_voltage(-0.1).is_err());
        assert!(m.phase_of_voltage(35.01).is_err());
    }

    #[test]
    fn amplitude_stays_within_floor_and_one() {
        let m = ElementResponseModel::default();
        let floor = m.amplitude_floor();
        assert!(floor > 0.0 && floor <= 1.0);
        for i in 0..=350 {
            let (a, _) = m.phase_of_voltage(i as f64 * 0.1).unwrap();
            assert!(a >= floor - 1e-12 && a <= 1.0);
        }
    }

    #[test]
    fn inverse_anchors() {
        let m = ElementResponseModel::default();
        assert_eq!(m.voltage_of_phase(0.0), 0.0);
        assert!((m.voltage_of_phase(m.phase_span()) - 35.0).abs() < 1e-9);
    }

    #[test]
    fn inverse_beyond_span_snaps_to_nearest_end() {
        let m = ElementResponseModel::default();
        // 255° span: 280° is 25° from the top end, 80° from zero
        assert_eq!(m.voltage_of_phase(280f64.to_radians()), 35.0);
        // 340° is 20° from zero (wrapping), 85° from the top end
        assert_eq!(m.voltage_of_phase(340f64.to_radians()), 0.0);
    }

    #[test]
    fn round_trip_error_bound() {
        // sweep 100 targets across the span; the bound is the table's own
        // interpolation error, which is tiny for a 256-row table
        let m = ElementResponseModel::default();
        let span = m.phase_span();
        let mut worst: f64 = 0.0;
        for i in 0..100 {
            let x = span * i as f64 / 99.0;
            let v = m.voltage_of_phase(x);
            let (_, back) = m.phase_of_voltage(v).unwrap();
            worst = worst.max((back - x).abs());
        }
        assert!(worst < 1e-9, "worst round-trip error {worst}");
    }

    #[test]
    fn specular_target_gives_zero_voltage() {
        let g = RisGeometry::default();
        let m = ElementResponseModel::default();
        let v = initial_voltage_pattern(&g, &m, &[77.0]).unwrap();
        assert!(v.as_slice().iter().all(|&x| x < 1e-6));
    }

    #[test]
    fn duplicate_targets_collapse() {
        let g = RisGeometry::default();
        let m = ElementResponseModel::default();
        let once = initial_voltage_pattern(&g, &m, &[-20.0, 10.0]).unwrap();
        let twice = initial_voltage_pattern(&g, &m, &[-20.0, 10.0, 10.0, -20.0]).unwrap();
        for (a, b) in once.as_slice().iter().zip(twice.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
        let single = initial_voltage_pattern(&g, &m, &[30.0]).unwrap();
        let dup = initial_voltage_pattern(&g, &m, &[30.0, 30.0]).unwrap();
        for (a, b) in single.as_slice().iter().zip(dup.as_slice()) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(initial_voltage_pattern(&g, &m, &[]).is_err());
    }

    #[test]
    fn realize_without_coupling_matches_elements() {
        let g = RisGeometry::default();
        let m = ElementResponseModel::default();
        let v = VoltagePattern::new((0..80).map(|i| (i % 36) as f64).collect()).unwrap();
        let s = realize(&g, &m, &v, CouplingConfig::disabled()).unwrap();
        for (c, &volts) in s.coefficients().iter().zip(v.as_slice()) {
            let (a, p) = m.phase_of_voltage(volts).unwrap();
            assert!((c - Complex64::from_polar(a, p)).norm() < 1e-15);
        }
    }

    #[test]
    fn uniform_pattern_is_a_coupling_fixed_point() {
        let g = RisGeometry::default();
        let m = ElementResponseModel::default();
        let v = VoltagePattern::uniform(80, 12.5).unwrap();
        let plain = realize(&g, &m, &v, CouplingConfig::disabled()).unwrap();
        let coupled = realize(&g, &m, &v, CouplingConfig::new(0.3).unwrap()).unwrap();
        for (a, b) in plain.coefficients().iter().zip(coupled.coefficients()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn coupling_reduces_alternating_contrast() {
        // 0/35 V alternating: raw neighbours differ by 255°. With α = 0.25
        // each output is 0.5·c_i + 0.5·c_other, so both collapse onto the
        // same value and the neighbour phase contrast drops to zero.
        let g = RisGeometry::new(8, 317e-6, 220e9, -77.0).unwrap();
        let m = ElementResponseModel::default();
        let v = VoltagePattern::new((0..8).map(|i| if i % 2 == 0 { 0.0 } else { 35.0 }).collect()).unwrap();
        let raw = realize(&g, &m, &v, CouplingConfig::disabled()).unwrap();
        let smooth = realize(&g, &m, &v, CouplingConfig::new(0.25).unwrap()).unwrap();
        let contrast = |s: &ReflectionState| {
            let c = s.coefficients();
            circ_dist(c[1].arg(), c[0].arg())
        };
        assert!((contrast(&raw) - 105f64.to_radians()).abs() < 1e-9);
        assert!(contrast(&smooth) < 1e-9);
    }

    #[test]
    fn realize_rejects_wrong_length() {
        let g = RisGeometry::default();
        let m = ElementResponseModel::default();
        let v = VoltagePattern::zeros(79);
        assert!(matches!(
            realize(&g, &m, &v, CouplingConfig::disabled()),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn voltage_pattern_bounds() {
        assert!(VoltagePattern::new(vec![0.0, 35.0]).is_ok());
        assert!(VoltagePattern::new(vec![35.5]).is_err());
        assert_eq!(
            VoltagePattern::clipped(vec![-1.0, 40.0, 3.0]).as_slice(),
            &[0.0, 35.0, 3.0]
        );
    }

    #[test]
    fn response_file_parse_and_errors() {
        let text = "# ris-response v1\n0 10 1.0\n17.5, 100\n35 200 0.9\n";
        let m = ElementResponseModel::parse(text, "mem").unwrap();
        assert!((m.phase_span().to_degrees() - 190.0).abs() < 1e-9);
        let (a, p) = m.phase_of_voltage(8.75).unwrap();
        assert!((p.to_degrees() - 45.0).abs() < 1e-9);
        assert!((a - 1.0).abs() < 1e-12);

        let missing_header = "0 0\n35 255\n";
        assert!(ElementResponseModel::parse(missing_header, "mem").is_err());
        let not_increasing = "# ris-response v1\n0 0\n20 10\n20 20\n35 30\n";
        match ElementResponseModel::parse(not_increasing, "mem") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let bad_number = "# ris-response v1\n0 zero\n35 255\n";
        assert!(ElementResponseModel::parse(bad_number, "mem").is_err());
    }

    #[test]
    fn response_file_round_trip() {
        let m = ElementResponseModel::default();
        let back = ElementResponseModel::parse(&m.to_file_text(), "mem").unwrap();
        for i in 0..=70 {
            let v = i as f64 * 0.5;
            let (a1, p1) = m.phase_of_voltage(v).unwrap();
            let (a2, p2) = back.phase_of_voltage(v).unwrap();
            assert!((a1 - a2).abs() < 1e-12 && (p1 - p2).abs() < 1e-9);
        }
    }
}
