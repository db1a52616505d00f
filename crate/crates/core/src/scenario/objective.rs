use rand_chacha::ChaCha8Rng;

use crate::channel::{LinkModel, SteeringVector};
use crate::error::Result;
use crate::ris::{realize, CouplingConfig, ElementResponseModel, ReflectionState, VoltagePattern};
use crate::spgd::Objective;

/// Simulated power meter: realizes a voltage pattern on the surface and
/// reads the received power at each direction, with reading jitter on
/// `measure` and without on `reference`.
pub struct RrpObjective<'a> {
    model: &'a LinkModel,
    response: &'a ElementResponseModel,
    coupling: CouplingConfig,
    steering: Vec<SteeringVector>,
    rng: ChaCha8Rng,
    pub measurements: usize,
}

impl<'a> RrpObjective<'a> {
    pub fn new(
        model: &'a LinkModel,
        response: &'a ElementResponseModel,
        coupling: CouplingConfig,
        directions: &[f64],
        rng: ChaCha8Rng,
    ) -> Self {
        Self {
            model,
            response,
            coupling,
            steering: directions.iter().map(|&a| SteeringVector::new(&model.ris, a)).collect(),
            rng,
            measurements: 0,
        }
    }

    pub fn state(&self, v: &VoltagePattern) -> Result<ReflectionState> {
        realize(&self.model.ris, self.response, v, self.coupling)
    }

    fn readings(&mut self, v: &VoltagePattern, jitter: bool) -> Result<Vec<f64>> {
        let state = self.state(v)?;
        Ok(self
            .steering
            .iter()
            .map(|s| {
                let clean = self.model.components_with(s, &state).total_dbm();
                if jitter {
                    self.model.jitter(clean, Some(&mut self.rng))
                } else {
                    clean
                }
            })
            .collect())
    }
}

impl Objective for RrpObjective<'_> {
    fn direction_count(&self) -> usize {
        self.steering.len()
    }

    fn measure(&mut self, v: &VoltagePattern) -> Result<Vec<f64>> {
        self.measurements += 1;
        self.readings(v, true)
    }

    fn reference(&mut self, v: &VoltagePattern) -> Result<Vec<f64>> {
        self.readings(v, false)
    }
}
