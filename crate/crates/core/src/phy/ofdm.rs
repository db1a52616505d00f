use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{CellKind, PhyConfig, ResourceGrid};
use crate::error::{Error, Result};

/// Complex baseband samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
}

impl Waveform {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// FFT index of occupied subcarrier `j`: the lower half maps to negative
/// frequencies, DC is skipped.
pub fn subcarrier_bin(j: usize, occupied: usize, fft_size: usize) -> usize {
    let half = occupied / 2;
    if j < half {
        fft_size - half + j
    } else {
        j - half + 1
    }
}

/// Unitary OFDM modulator and demodulator with cached FFT plans.
#[derive(Clone)]
pub struct Ofdm {
    config: PhyConfig,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    bins: Vec<usize>,
    scale: f64,
}

impl Ofdm {
    pub fn new(config: &PhyConfig) -> Result<Self> {
        config.validate()?;
        let mut planner = FftPlanner::new();
        let n = config.fft_size;
        let occ = config.occupied_subcarriers();
        Ok(Self {
            config: config.clone(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            bins: (0..occ).map(|j| subcarrier_bin(j, occ, n)).collect(),
            scale: 1.0 / (n as f64).sqrt(),
        })
    }

    pub fn config(&self) -> &PhyConfig {
        &self.config
    }

    pub fn modulate(&self, grid: &ResourceGrid) -> Result<Waveform> {
        let c = &self.config;
        if grid.occupied != c.occupied_subcarriers() || grid.symbols != c.symbols_per_rb {
            return Err(Error::invalid(
                "grid",
                format!(
                    "{}x{} grid does not match {}x{} layout",
                    grid.symbols,
                    grid.occupied,
                    c.symbols_per_rb,
                    c.occupied_subcarriers()
                ),
            ));
        }
        let n = c.fft_size;
        let mut out = Vec::with_capacity(c.frame_length());
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for s in 0..grid.symbols {
            buf.fill(Complex64::new(0.0, 0.0));
            for (&bin, &x) in self.bins.iter().zip(grid.symbol(s)) {
                buf[bin] = x;
            }
            self.inverse.process(&mut buf);
            for x in buf.iter_mut() {
                *x *= self.scale;
            }
            out.extend_from_slice(&buf[n - c.cp_length..]);
            out.extend_from_slice(&buf);
        }
        Ok(Waveform {
            samples: out,
            sample_rate: c.sample_rate,
        })
    }

    /// Demodulate one frame starting at sample `offset`. Pilot cells are
    /// tagged in the returned grid; everything else is `Null`.
    pub fn demodulate(&self, samples: &[Complex64], offset: usize) -> Result<ResourceGrid> {
        let c = &self.config;
        let need = offset + c.frame_length();
        if samples.len() < need {
            return Err(Error::LengthMismatch {
                what: "received samples",
                expected: need,
                actual: samples.len(),
            });
        }
        let mut grid = ResourceGrid::empty(c);
        let occ = grid.occupied;
        let mut buf = vec![Complex64::new(0.0, 0.0); c.fft_size];
        for s in 0..c.symbols_per_rb {
            let start = offset + s * c.symbol_length() + c.cp_length;
            buf.copy_from_slice(&samples[start..start + c.fft_size]);
            self.forward.process(&mut buf);
            for (j, &bin) in self.bins.iter().enumerate() {
                grid.cells[s * occ + j] = buf[bin] * self.scale;
            }
        }
        for &s in &c.pilot.symbols {
            grid.kinds[s * occ..(s + 1) * occ].fill(CellKind::Pilot);
        }
        Ok(grid)
    }
}

pub fn ofdm_modulate(grid: &ResourceGrid, config: &PhyConfig) -> Result<Waveform> {
    Ofdm::new(config)?.modulate(grid)
}

pub fn ofdm_demodulate(samples: &[Complex64], offset: usize, config: &PhyConfig) -> Result<ResourceGrid> {
    Ofdm::new(config)?.demodulate(samples, offset)
}
