//! Measurement-feedback beamforming.
//!
//! Stochastic parallel gradient descent over voltage patterns: each step
//! draws a Bernoulli `±δ` perturbation, takes two readings at `v ± Δv` and
//! moves along `Δv` scaled by the difference. Multi-direction objectives
//! combine per-direction readings as a weighted sum in linear milliwatts.
//! The min-power feedback loop raises the weight of the weakest direction
//! one round at a time and re-optimizes from the current pattern.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{dbm_to_mw, mw_to_dbm};
use crate::error::{Error, Result};
use crate::ris::{VoltagePattern, MAX_VOLTAGE};

#[derive(Debug, Clone, PartialEq)]
pub struct SpgdConfig {
    /// Scale constant `g` applied to the reading difference.
    pub gain: f64,
    /// Perturbation magnitude `δ`, volts.
    pub perturbation: f64,
    pub max_iterations: usize,
    pub seed: u64,
    /// Voltage bounds applied to perturbed patterns and to every update.
    pub clip: (f64, f64),
}

impl Default for SpgdConfig {
    fn default() -> Self {
        Self {
            gain: 1.0,
            perturbation: 0.5,
            max_iterations: 400,
            seed: 0,
            clip: (0.0, MAX_VOLTAGE),
        }
    }
}

impl SpgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(Error::OutOfRange {
                what: "spgd gain",
                value: self.gain,
                range: "(0, inf)",
            });
        }
        if !(self.perturbation > 0.0 && self.perturbation.is_finite()) {
            return Err(Error::OutOfRange {
                what: "spgd perturbation",
                value: self.perturbation,
                range: "(0, inf) V",
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be at least 1"));
        }
        let (lo, hi) = self.clip;
        if !(0.0 <= lo && lo < hi && hi <= MAX_VOLTAGE) {
            return Err(Error::invalid(
                "clip",
                format!("bounds ({lo}, {hi}) not within [0, 35]"),
            ));
        }
        Ok(())
    }

    fn clip_all(&self, v: impl Iterator<Item = f64>) -> VoltagePattern {
        let (lo, hi) = self.clip;
        VoltagePattern::clipped(v.map(|x| x.clamp(lo, hi)).collect())
    }
}

/// A black-box map from a voltage pattern to per-direction power readings.
pub trait Objective {
    fn direction_count(&self) -> usize;

    /// One physical measurement: per-direction readings in dBm, including
    /// whatever reading noise the source has.
    fn measure(&mut self, v: &VoltagePattern) -> Result<Vec<f64>>;

    /// Noise-free readings used to rank candidate patterns. Sources without
    /// a noise-free view can simply measure.
    fn reference(&mut self, v: &VoltagePattern) -> Result<Vec<f64>> {
        self.measure(v)
    }
}

/// Target directions (degrees) with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub directions: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ObjectiveSpec {
    pub fn new(directions: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let spec = Self { directions, weights };
        spec.validate()?;
        Ok(spec)
    }

    pub fn uniform(directions: Vec<f64>) -> Result<Self> {
        let weights = vec![1.0; directions.len()];
        Self::new(directions, weights)
    }

    pub fn validate(&self) -> Result<()> {
        if self.directions.is_empty() {
            return Err(Error::invalid("directions", "at least one direction is required"));
        }
        if self.weights.len() != self.directions.len() {
            return Err(Error::LengthMismatch {
                what: "weights",
                expected: self.directions.len(),
                actual: self.weights.len(),
            });
        }
        for (i, a) in self.directions.iter().enumerate() {
            if self.directions[..i].contains(a) {
                return Err(Error::invalid("directions", format!("{a} listed twice")));
            }
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::OutOfRange {
                what: "weight",
                value: *w,
                range: "(0, inf)",
            });
        }
        Ok(())
    }

    /// `y = Σ_k w_k·f_k` with readings converted from dBm to mW.
    pub fn combine(&self, readings_dbm: &[f64]) -> Result<f64> {
        if readings_dbm.len() != self.weights.len() {
            return Err(Error::LengthMismatch {
                what: "objective readings",
                expected: self.weights.len(),
                actual: readings_dbm.len(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(readings_dbm)
            .map(|(w, r)| w * dbm_to_mw(*r))
            .sum())
    }
}

/// Weighted objective `Σ w_k f_k(v)` in mW, from one measurement of `v`.
pub fn objective_value<O: Objective + ?Sized>(
    spec: &ObjectiveSpec,
    objective: &mut O,
    v: &VoltagePattern,
) -> Result<f64> {
    let readings = objective.measure(v)?;
    spec.combine(&readings)
}

/// Bernoulli `±δ` perturbation, independent per element.
pub fn sample_perturbation<R: Rng + ?Sized>(config: &SpgdConfig, len: usize, rng: &mut R) -> Vec<f64> {
    (0..len)
        .map(|_| {
            if rng.random::<bool>() {
                config.perturbation
            } else {
                -config.perturbation
            }
        })
        .collect()
}

/// Result of one update.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next: VoltagePattern,
    pub y_plus: f64,
    pub y_minus: f64,
}

/// `clip(v + g·Δv·diff)`.
pub fn spgd_update(v: &VoltagePattern, delta: &[f64], diff: f64, config: &SpgdConfig) -> VoltagePattern {
    let scale = config.gain * diff;
    config.clip_all(v.as_slice().iter().zip(delta).map(|(x, d)| x + scale * d))
}

/// One update against a scalar objective:
/// `v ← clip(v + g·Δv·(f(v+Δv) − f(v−Δv)))`.
pub fn spgd_step_scalar<F, R>(mut f: F, v: &VoltagePattern, config: &SpgdConfig, rng: &mut R) -> Result<StepOutcome>
where
    F: FnMut(&VoltagePattern) -> Result<f64>,
    R: Rng + ?Sized,
{
    let delta = sample_perturbation(config, v.len(), rng);
    let plus = config.clip_all(v.as_slice().iter().zip(&delta).map(|(x, d)| x + d));
    let minus = config.clip_all(v.as_slice().iter().zip(&delta).map(|(x, d)| x - d));
    let y_plus = f(&plus)?;
    let y_minus = f(&minus)?;
    let next = spgd_update(v, &delta, y_plus - y_minus, config);
    Ok(StepOutcome { next, y_plus, y_minus })
}

/// One update against a (possibly multi-direction) objective.
pub fn spgd_step<O, R>(
    spec: &ObjectiveSpec,
    objective: &mut O,
    v: &VoltagePattern,
    config: &SpgdConfig,
    rng: &mut R,
) -> Result<StepOutcome>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    spgd_step_scalar(|p| objective_value(spec, objective, p), v, config, rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub y_plus: f64,
    pub y_minus: f64,
    /// Noise-free objective of the pattern after this update, mW.
    pub objective_mw: f64,
    /// Noise-free per-direction readings of that pattern, dBm. Empty for
    /// scalar objectives.
    pub readings_dbm: Vec<f64>,
    pub best_so_far_mw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpgdTrace {
    pub directions: Vec<f64>,
    pub initial_objective: f64,
    pub records: Vec<TraceRecord>,
    /// Best pattern seen, including the initial one.
    pub best: VoltagePattern,
    pub best_objective: f64,
    /// Last iterate.
    pub last: VoltagePattern,
    /// Number of objective measurements issued (always `2·J`).
    pub measurements: usize,
}

impl SpgdTrace {
    /// Writes the trace as CSV:
    /// `iteration,objective_linear_mw,objective_dbm_<angle>...,best_so_far_mw`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["iteration".to_string(), "objective_linear_mw".to_string()];
        header.extend(self.directions.iter().map(|a| format!("objective_dbm_{a}")));
        header.push("best_so_far_mw".to_string());
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.iteration.to_string(), r.objective_mw.to_string()];
            row.extend(r.readings_dbm.iter().map(|x| x.to_string()));
            row.push(r.best_so_far_mw.to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("trace csv", e))?;
        Ok(())
    }
}

/// Runs `config.max_iterations` steps against a scalar objective.
///
/// `measure` is the noisy reading used by the update rule; `reference` is
/// a noise-free evaluation used only to keep the best pattern. The return
/// value holds both the best and the last iterate.
pub fn run_spgd_scalar<F, G>(
    mut measure: F,
    mut reference: G,
    v0: &VoltagePattern,
    config: &SpgdConfig,
) -> Result<SpgdTrace>
where
    F: FnMut(&VoltagePattern) -> Result<f64>,
    G: FnMut(&VoltagePattern) -> Result<(f64, Vec<f64>)>,
{
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (y0, _) = reference(v0)?;
    let mut best = v0.clone();
    let mut best_y = y0;
    let mut current = v0.clone();
    let mut records = Vec::with_capacity(config.max_iterations);
    let mut measurements = 0;
    for t in 0..config.max_iterations {
        let step = spgd_step_scalar(
            |p| {
                measurements += 1;
                measure(p)
            },
            &current,
            config,
            &mut rng,
        )?;
        current = step.next;
        let (y, readings) = reference(&current)?;
        if y > best_y {
            best_y = y;
            best = current.clone();
        }
        records.push(TraceRecord {
            iteration: t + 1,
            y_plus: step.y_plus,
            y_minus: step.y_minus,
            objective_mw: y,
            readings_dbm: readings,
            best_so_far_mw: best_y,
        });
    }
    Ok(SpgdTrace {
        directions: Vec::new(),
        initial_objective: y0,
        records,
        best,
        best_objective: best_y,
        last: current,
        measurements,
    })
}

/// Runs SPGD on a direction set.
pub fn run_spgd<O: Objective + ?Sized>(
    spec: &ObjectiveSpec,
    objective: &mut O,
    v0: &VoltagePattern,
    config: &SpgdConfig,
) -> Result<SpgdTrace> {
    spec.validate()?;
    if objective.direction_count() != spec.directions.len() {
        return Err(Error::LengthMismatch {
            what: "objective directions",
            expected: spec.directions.len(),
            actual: objective.direction_count(),
        });
    }
    // both closures need the objective; route them through a RefCell
    let cell = std::cell::RefCell::new(objective);
    let mut trace = run_spgd_scalar(
        |p| objective_value(spec, *cell.borrow_mut(), p),
        |p| {
            let readings = cell.borrow_mut().reference(p)?;
            Ok((spec.combine(&readings)?, readings))
        },
        v0,
        config,
    )?;
    trace.directions = spec.directions.clone();
    Ok(trace)
}

/// Integer direction weights and the readings that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackState {
    pub weights: Vec<u32>,
    pub last_measured_rrp: Vec<f64>,
    pub round: usize,
}

impl FeedbackState {
    pub fn new(directions: usize) -> Self {
        Self {
            weights: vec![1; directions],
            last_measured_rrp: Vec::new(),
            round: 0,
        }
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        self.weights.iter().map(|&w| f64::from(w)).collect()
    }
}

/// Increments the weight of the weakest direction. Ties go to the lowest
/// index.
pub fn feedback_adjust(state: &FeedbackState, measured: &[f64]) -> Result<FeedbackState> {
    if measured.len() != state.weights.len() {
        return Err(Error::LengthMismatch {
            what: "measured readings",
            expected: state.weights.len(),
            actual: measured.len(),
        });
    }
    let mut weakest = 0;
    for (i, &p) in measured.iter().enumerate() {
        if p < measured[weakest] {
            weakest = i;
        }
    }
    let mut weights = state.weights.clone();
    weights[weakest] += 1;
    Ok(FeedbackState {
        weights,
        last_measured_rrp: measured.to_vec(),
        round: state.round + 1,
    })
}

/// Output of [`run_feedback_loop`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackOutcome {
    pub pattern: VoltagePattern,
    /// Initial state followed by one entry per round.
    pub history: Vec<FeedbackState>,
    /// Noise-free per-direction readings of the final pattern.
    pub final_readings: Vec<f64>,
}

/// Feedback rounds: measure every direction under the current pattern,
/// bump the weakest weight, then re-run SPGD with the new weights starting
/// from the current pattern and a quarter of the iteration budget.
pub fn run_feedback_loop<O: Objective + ?Sized>(
    directions: &[f64],
    objective: &mut O,
    start: &VoltagePattern,
    config: &SpgdConfig,
    rounds: usize,
) -> Result<FeedbackOutcome> {
    if rounds == 0 {
        return Err(Error::invalid("rounds", "at least one feedback round is required"));
    }
    let mut state = FeedbackState::new(directions.len());
    let mut history = vec![state.clone()];
    let mut pattern = start.clone();
    let fine = SpgdConfig {
        max_iterations: (config.max_iterations / 4).max(1),
        ..config.clone()
    };
    for round in 0..rounds {
        let measured = objective.measure(&pattern)?;
        state = feedback_adjust(&state, &measured)?;
        history.push(state.clone());
        let spec = ObjectiveSpec::new(directions.to_vec(), state.weights_f64())?;
        let round_cfg = SpgdConfig {
            seed: config.seed.wrapping_add(1 + round as u64),
            ..fine.clone()
        };
        let trace = run_spgd(&spec, objective, &pattern, &round_cfg)?;
        pattern = trace.best;
    }
    let final_readings = objective.reference(&pattern)?;
    Ok(FeedbackOutcome {
        pattern,
        history,
        final_readings,
    })
}

/// Weighted objective in dBm, for reporting.
pub fn objective_dbm(spec: &ObjectiveSpec, readings_dbm: &[f64]) -> Result<f64> {
    Ok(mw_to_dbm(spec.combine(readings_dbm)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Noise-free objective with fixed per-direction readings.
    struct Fixed(Vec<f64>);

    impl Objective for Fixed {
        fn direction_count(&self) -> usize {
            self.0.len()
        }
        fn measure(&mut self, _v: &VoltagePattern) -> Result<Vec<f64>> {
            Ok(self.0.clone())
        }
    }

    fn quadratic(v: &VoltagePattern) -> Result<f64> {
        Ok(-v.as_slice().iter().map(|x| (x - 17.5).powi(2)).sum::<f64>())
    }

    #[test]
    fn perturbation_entries_have_fixed_magnitude() {
        let cfg = SpgdConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = sample_perturbation(&cfg, 1000, &mut rng);
        assert!(d.iter().all(|x| x.abs() == 0.5));
        assert!(d.iter().any(|&x| x > 0.0) && d.iter().any(|&x| x < 0.0));
    }

    #[test]
    fn perturbation_is_seeded() {
        let cfg = SpgdConfig::default();
        let a = sample_perturbation(&cfg, 80, &mut ChaCha8Rng::seed_from_u64(5));
        let b = sample_perturbation(&cfg, 80, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn perturbation_mean_is_zero() {
        // sum of 1e5 ±δ draws has std δ·√n; 3σ on the mean is 3δ/√n
        let cfg = SpgdConfig::default();
        let n = 100_000;
        let d = sample_perturbation(&cfg, n, &mut ChaCha8Rng::seed_from_u64(11));
        let mean = d.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 3.0 * 0.5 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn combine_weighted_linear_sum() {
        let spec = ObjectiveSpec::new(vec![0.0, 10.0], vec![2.0, 1.0]).unwrap();
        // 1 mW = 0 dBm, 2 mW = 3.0103 dBm
        let y = spec.combine(&[0.0, 10.0 * 2f64.log10()]).unwrap();
        assert!((y - 4.0).abs() < 1e-12);
        let single = ObjectiveSpec::uniform(vec![5.0]).unwrap();
        assert!((single.combine(&[-30.0]).unwrap() - 1e-3).abs() < 1e-15);
        assert!(spec.combine(&[0.0]).is_err());
    }

    #[test]
    fn objective_spec_validation() {
        assert!(ObjectiveSpec::new(vec![], vec![]).is_err());
        assert!(ObjectiveSpec::new(vec![1.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(ObjectiveSpec::new(vec![1.0, 2.0], vec![1.0, 0.0]).is_err());
        assert!(ObjectiveSpec::new(vec![1.0, 2.0], vec![1.0]).is_err());
    }

    #[test]
    fn equal_readings_leave_pattern_unchanged() {
        let spec = ObjectiveSpec::uniform(vec![0.0]).unwrap();
        let mut obj = Fixed(vec![-30.0]);
        let v = VoltagePattern::uniform(8, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = spgd_step(&spec, &mut obj, &v, &SpgdConfig::default(), &mut rng).unwrap();
        assert_eq!(out.next, v);
    }

    #[test]
    fn update_arithmetic() {
        let cfg = SpgdConfig {
            gain: 1.0,
            perturbation: 0.5,
            ..Default::default()
        };
        let v = VoltagePattern::uniform(3, 10.0).unwrap();
        let next = spgd_update(&v, &[0.5, 0.5, 0.5], 0.1, &cfg);
        for x in next.as_slice() {
            assert!((x - 10.05).abs() < 1e-15);
        }
        let clipped = spgd_update(&VoltagePattern::uniform(1, 34.99).unwrap(), &[0.5], 0.1, &cfg);
        assert_eq!(clipped.as_slice(), &[35.0]);
    }

    #[test]
    fn iterates_respect_bounds() {
        let cfg = SpgdConfig {
            gain: 0.02,
            perturbation: 2.0,
            max_iterations: 50,
            seed: 3,
            ..Default::default()
        };
        let v0 = VoltagePattern::uniform(16, 34.0).unwrap();
        let trace = run_spgd_scalar(
            |p| Ok(p.as_slice().iter().sum::<f64>()),
            |p| Ok((p.as_slice().iter().sum::<f64>(), vec![])),
            &v0,
            &cfg,
        )
        .unwrap();
        for v in [&trace.best, &trace.last] {
            assert!(v.as_slice().iter().all(|x| (0.0..=35.0).contains(x)));
        }
        assert!(trace.best_objective > 16.0 * 34.0);
    }

    #[test]
    fn single_iteration_trace() {
        let cfg = SpgdConfig {
            gain: 0.05,
            max_iterations: 1,
            ..Default::default()
        };
        let v0 = VoltagePattern::zeros(4);
        let trace = run_spgd_scalar(quadratic, |p| Ok((quadratic(p)?, vec![])), &v0, &cfg).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.measurements, 2);
        assert!(trace.best_objective >= quadratic(&v0).unwrap());
    }

    #[test]
    fn best_so_far_is_monotone() {
        let cfg = SpgdConfig {
            gain: 0.05,
            max_iterations: 200,
            seed: 9,
            ..Default::default()
        };
        let v0 = VoltagePattern::zeros(20);
        let trace = run_spgd_scalar(quadratic, |p| Ok((quadratic(p)?, vec![])), &v0, &cfg).unwrap();
        for w in trace.records.windows(2) {
            assert!(w[1].best_so_far_mw >= w[0].best_so_far_mw);
        }
        assert_eq!(trace.measurements, 400);
    }

    #[test]
    fn feedback_picks_weakest() {
        let s = FeedbackState::new(3);
        let s = feedback_adjust(&s, &[-40.0, -50.0, -45.0]).unwrap();
        assert_eq!(s.weights, vec![1, 2, 1]);
        assert_eq!(s.round, 1);
        let s = feedback_adjust(&s, &[-40.0, -50.0, -45.0]).unwrap();
        assert_eq!(s.weights, vec![1, 3, 1]);
    }

    #[test]
    fn feedback_tie_breaks_low() {
        let s = feedback_adjust(&FeedbackState::new(3), &[-42.0, -42.0, -42.0]).unwrap();
        assert_eq!(s.weights, vec![2, 1, 1]);
        assert!(feedback_adjust(&s, &[-1.0]).is_err());
    }

    #[test]
    fn feedback_loop_on_symmetric_readings() {
        let mut obj = Fixed(vec![-40.0, -40.0, -40.0]);
        let v0 = VoltagePattern::uniform(6, 5.0).unwrap();
        let cfg = SpgdConfig {
            max_iterations: 8,
            ..Default::default()
        };
        let out = run_feedback_loop(&[-20.0, 0.0, 20.0], &mut obj, &v0, &cfg, 1).unwrap();
        assert_eq!(out.history.len(), 2);
        assert_eq!(out.history[1].weights, vec![2, 1, 1]);
        assert!(run_feedback_loop(&[0.0], &mut Fixed(vec![-1.0]), &v0, &cfg, 0).is_err());
    }

    #[test]
    fn trace_csv_header_and_rows() {
        let spec = ObjectiveSpec::uniform(vec![-20.0, 20.0]).unwrap();
        let mut obj = Fixed(vec![-40.0, -41.0]);
        let cfg = SpgdConfig {
            max_iterations: 3,
            ..Default::default()
        };
        let trace = run_spgd(&spec, &mut obj, &VoltagePattern::zeros(4), &cfg).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "iteration,objective_linear_mw,objective_dbm_-20,objective_dbm_20,best_so_far_mw"
        );
        assert_eq!(lines.count(), 3);
    }
}
