use num_complex::Complex64;

use super::grid::validate_allocations;
use super::ofdm::Ofdm;
use super::sync::correlate;
use super::{
    build_grid, conv_encode, equalize_extract, estimate_channel, viterbi_decode, PhyConfig, ResourceGrid,
    UserAllocation, Waveform,
};
use crate::error::{Error, Result};

/// A validated configuration plus user layout, with FFT plans cached.
#[derive(Clone)]
pub struct FrameLayout {
    pub config: PhyConfig,
    pub allocations: Vec<UserAllocation>,
    ofdm: Ofdm,
}

#[derive(Debug, Clone)]
pub struct ReceivedFrame {
    pub offset: usize,
    pub peak_to_mean: f64,
    /// False when the correlation peak fell below threshold; bits were then
    /// decoded at the best available offset anyway.
    pub synchronized: bool,
    pub channel: Vec<Complex64>,
    /// Decoded payload per user, each `payload_capacity` bits long.
    pub bits: Vec<Vec<u8>>,
}

impl FrameLayout {
    pub fn new(config: &PhyConfig, allocations: Vec<UserAllocation>) -> Result<Self> {
        config.validate()?;
        validate_allocations(config, &allocations)?;
        let layout = Self {
            config: config.clone(),
            ofdm: Ofdm::new(config)?,
            allocations,
        };
        for i in 0..layout.allocations.len() {
            if layout.payload_capacity(i) == 0 {
                return Err(Error::invalid(
                    "allocation",
                    format!("user {} cannot carry the code tail", layout.allocations[i].user_id),
                ));
            }
        }
        Ok(layout)
    }

    /// One user owning every resource block.
    pub fn single_user(config: &PhyConfig) -> Result<Self> {
        Self::new(config, UserAllocation::split_equal(config.rb_count, 1))
    }

    /// Information bits per frame for allocation `user`.
    pub fn payload_capacity(&self, user: usize) -> usize {
        let coded = self.allocations[user].coded_bits(&self.config);
        self.config.code.message_capacity(coded).unwrap_or(0)
    }

    /// Encode, map and modulate one frame. Short payloads are zero padded.
    pub fn transmit(&self, payloads: &[Vec<u8>]) -> Result<(ResourceGrid, Waveform)> {
        if payloads.len() != self.allocations.len() {
            return Err(Error::LengthMismatch {
                what: "payloads",
                expected: self.allocations.len(),
                actual: payloads.len(),
            });
        }
        let mut coded = Vec::with_capacity(payloads.len());
        for (i, p) in payloads.iter().enumerate() {
            let cap = self.payload_capacity(i);
            if p.len() > cap {
                return Err(Error::LengthMismatch {
                    what: "payload bits",
                    expected: cap,
                    actual: p.len(),
                });
            }
            let mut bits = p.clone();
            bits.resize(cap, 0);
            let mut c = conv_encode(&self.config.code, &bits);
            c.resize(self.allocations[i].coded_bits(&self.config), 0);
            coded.push(c);
        }
        let grid = build_grid(&self.config, &self.allocations, &coded)?;
        let wave = self.ofdm.modulate(&grid)?;
        Ok((grid, wave))
    }

    /// Sync, estimate, equalize and decode one frame. `noise_var` is the
    /// per-sample noise variance used to scale LLRs.
    pub fn receive(&self, rx: &[Complex64], noise_var: f64) -> Result<ReceivedFrame> {
        let sync = correlate(rx, &self.config)?;
        let grid = self.ofdm.demodulate(rx, sync.offset)?;
        let channel = estimate_channel(&grid, &self.config)?;
        let llrs = equalize_extract(&grid, &channel, &self.allocations, &self.config, noise_var)?;
        let bits = llrs
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let cap = self.payload_capacity(i);
                let used = self.config.code.coded_len(cap);
                let mut b = viterbi_decode(&self.config.code, &l[..used])?;
                b.truncate(cap);
                Ok(b)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ReceivedFrame {
            offset: sync.offset,
            peak_to_mean: sync.peak_to_mean,
            synchronized: sync.peak_to_mean >= self.config.sync_threshold,
            channel,
            bits,
        })
    }
}

pub fn transmit_frame(
    config: &PhyConfig,
    allocations: &[UserAllocation],
    payloads: &[Vec<u8>],
) -> Result<(ResourceGrid, Waveform)> {
    FrameLayout::new(config, allocations.to_vec())?.transmit(payloads)
}

pub fn receive_frame(
    config: &PhyConfig,
    allocations: &[UserAllocation],
    rx: &[Complex64],
    noise_var: f64,
) -> Result<ReceivedFrame> {
    FrameLayout::new(config, allocations.to_vec())?.receive(rx, noise_var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacities() {
        let cfg = PhyConfig::default();
        let one = FrameLayout::single_user(&cfg).unwrap();
        assert_eq!(one.payload_capacity(0), 37434);
        let three = FrameLayout::new(&cfg, UserAllocation::split_equal(cfg.rb_count, 3)).unwrap();
        assert_eq!(three.payload_capacity(2), 12474);
    }

    #[test]
    fn clean_loopback() {
        let cfg = PhyConfig::default();
        let layout = FrameLayout::new(&cfg, UserAllocation::split_equal(cfg.rb_count, 3)).unwrap();
        let payloads: Vec<Vec<u8>> = (0..3)
            .map(|u| {
                (0..layout.payload_capacity(u))
                    .map(|i| ((i * (u + 3)) % 7 % 2) as u8)
                    .collect()
            })
            .collect();
        let (_, w) = layout.transmit(&payloads).unwrap();
        let rx = layout.receive(&w.samples, 1e-3).unwrap();
        assert!(rx.synchronized);
        assert_eq!(rx.offset, 0);
        assert_eq!(rx.bits, payloads);
    }

    #[test]
    fn oversized_payload_rejected() {
        let cfg = PhyConfig::default();
        let layout = FrameLayout::single_user(&cfg).unwrap();
        assert!(layout.transmit(&[vec![0; 40000]]).is_err());
        assert!(layout.transmit(&[]).is_err());
    }
}
