//! Multi-user OFDM baseband chain.
//!
//! Transmit: bits → rate-1/2 convolutional code → QAM → resource mapping
//! with block ZC pilots → 2048-point inverse FFT with cyclic prefix.
//! Receive: correlation sync → FFT → least-squares channel estimate from
//! the pilot symbol → one-tap equalization → per-user LLRs → Viterbi.

pub mod conv;
pub mod grid;
pub mod io;
pub mod link;
pub mod metrics;
pub mod ofdm;
pub mod qam;
pub mod receiver;
pub mod sync;
pub mod zc;

pub use conv::{conv_encode, viterbi_decode, viterbi_decode_hard, ConvCode};
pub use grid::{build_grid, CellKind, ResourceGrid, UserAllocation};
pub use link::{receive_frame, transmit_frame, FrameLayout, ReceivedFrame};
pub use metrics::{ber_per_user, bit_errors, compute_ber, effective_rate};
pub use ofdm::{ofdm_demodulate, ofdm_modulate, Waveform};
pub use qam::{qam_demap, qam_map, Modulation};
pub use receiver::{equalize_extract, estimate_channel};
pub use sync::synchronize;
pub use zc::zc_sequence;

use crate::error::{Error, Result};

/// Pilot sequence and placement.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotConfig {
    pub zc_root: u32,
    pub zc_length: usize,
    /// OFDM symbols (within a frame) that carry pilots on every occupied
    /// subcarrier.
    pub symbols: Vec<usize>,
}

impl Default for PilotConfig {
    fn default() -> Self {
        Self {
            zc_root: 25,
            zc_length: 139,
            symbols: vec![0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhyConfig {
    pub fft_size: usize,
    pub cp_length: usize,
    /// Samples per second.
    pub sample_rate: f64,
    pub modulation: Modulation,
    pub code: ConvCode,
    pub rb_count: usize,
    /// OFDM symbols per resource block, which is also the frame length.
    pub symbols_per_rb: usize,
    pub subcarriers_per_rb: usize,
    pub pilot: PilotConfig,
    /// Minimum correlation peak-to-mean power ratio accepted by sync.
    pub sync_threshold: f64,
}

impl Default for PhyConfig {
    fn default() -> Self {
        Self {
            fft_size: 2048,
            cp_length: 144,
            sample_rate: 2.4e9,
            modulation: Modulation::Qam16,
            code: ConvCode::default(),
            rb_count: 120,
            symbols_per_rb: 14,
            subcarriers_per_rb: 12,
            pilot: PilotConfig::default(),
            sync_threshold: 20.0,
        }
    }
}

impl PhyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fft_size < 2 {
            return Err(Error::invalid("fft_size", "must be at least 2"));
        }
        if self.occupied_subcarriers() == 0 || self.occupied_subcarriers() >= self.fft_size {
            return Err(Error::invalid(
                "rb_count",
                format!(
                    "{} occupied subcarriers do not fit a {}-point transform with DC nulled",
                    self.occupied_subcarriers(),
                    self.fft_size
                ),
            ));
        }
        if self.cp_length >= self.fft_size {
            return Err(Error::invalid("cp_length", "must be shorter than fft_size"));
        }
        if !(self.sample_rate > 0.0) {
            return Err(Error::OutOfRange {
                what: "sample_rate",
                value: self.sample_rate,
                range: "(0, inf)",
            });
        }
        if self.symbols_per_rb == 0 {
            return Err(Error::invalid("symbols_per_rb", "must be at least 1"));
        }
        if self.pilot.symbols.is_empty() {
            return Err(Error::invalid("pilot symbols", "at least one pilot symbol is required"));
        }
        if let Some(s) = self.pilot.symbols.iter().find(|&&s| s >= self.symbols_per_rb) {
            return Err(Error::invalid("pilot symbols", format!("symbol {s} outside the frame")));
        }
        if self.pilot.symbols.len() >= self.symbols_per_rb {
            return Err(Error::invalid("pilot symbols", "no symbols left for data"));
        }
        zc_sequence(self.pilot.zc_root, self.pilot.zc_length)?;
        self.code.validate()?;
        if !(self.sync_threshold > 0.0) {
            return Err(Error::OutOfRange {
                what: "sync_threshold",
                value: self.sync_threshold,
                range: "(0, inf)",
            });
        }
        Ok(())
    }

    pub fn occupied_subcarriers(&self) -> usize {
        self.rb_count * self.subcarriers_per_rb
    }

    pub fn symbol_length(&self) -> usize {
        self.fft_size + self.cp_length
    }

    /// Samples per frame, `symbols_per_frame·(fft_size + cp_length)`.
    pub fn frame_length(&self) -> usize {
        self.symbols_per_rb * self.symbol_length()
    }

    pub fn frame_duration(&self) -> f64 {
        self.frame_length() as f64 / self.sample_rate
    }

    /// Bandwidth spanned by the occupied subcarriers, Hz.
    pub fn occupied_bandwidth(&self) -> f64 {
        self.occupied_subcarriers() as f64 * self.sample_rate / self.fft_size as f64
    }

    pub fn data_symbols(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.symbols_per_rb).filter(|s| !self.pilot.symbols.contains(s))
    }

    pub fn data_cells_per_rb(&self) -> usize {
        self.subcarriers_per_rb * (self.symbols_per_rb - self.pilot.symbols.len())
    }

    /// Pilot value on every occupied subcarrier: the ZC sequence tiled
    /// cyclically.
    pub fn pilot_values(&self) -> Result<Vec<num_complex::Complex64>> {
        let zc = zc_sequence(self.pilot.zc_root, self.pilot.zc_length)?;
        Ok((0..self.occupied_subcarriers()).map(|j| zc[j % zc.len()]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_dimensions() {
        let c = PhyConfig::default();
        c.validate().unwrap();
        assert_eq!(c.occupied_subcarriers(), 1440);
        assert_eq!(c.frame_length(), 14 * 2192);
        assert_eq!(c.data_cells_per_rb(), 156);
        assert!((c.occupied_bandwidth() - 1.6875e9).abs() < 1.0);
    }

    #[test]
    fn validation_rejects_bad_layouts() {
        let c = PhyConfig {
            rb_count: 171,
            ..PhyConfig::default()
        };
        assert!(c.validate().is_err());
        let c = PhyConfig {
            cp_length: 2048,
            ..PhyConfig::default()
        };
        assert!(c.validate().is_err());
        let mut c = PhyConfig::default();
        c.pilot.symbols = vec![14];
        assert!(c.validate().is_err());
        let mut c = PhyConfig::default();
        c.pilot.zc_root = 139;
        assert!(c.validate().is_err());
    }
}
