use num_complex::Complex64;
use rustfft::FftPlanner;

use super::ofdm::Ofdm;
use super::{PhyConfig, ResourceGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncResult {
    /// Sample index of the frame start.
    pub offset: usize,
    /// Correlation peak power over mean correlation power.
    pub peak_to_mean: f64,
}

/// Time-domain pilot symbol (cyclic prefix included) for the first pilot
/// symbol of the frame.
pub fn pilot_reference(config: &PhyConfig) -> Result<Vec<Complex64>> {
    let mut grid = ResourceGrid::empty(config);
    let s0 = config.pilot.symbols[0];
    let occ = grid.occupied;
    grid.cells[s0 * occ..(s0 + 1) * occ].copy_from_slice(&config.pilot_values()?);
    let w = Ofdm::new(config)?.modulate(&grid)?;
    let sl = config.symbol_length();
    Ok(w.samples[s0 * sl..(s0 + 1) * sl].to_vec())
}

/// Correlate against the pilot symbol at every lag and report the best
/// frame start, whether or not it clears the threshold.
pub fn correlate(rx: &[Complex64], config: &PhyConfig) -> Result<SyncResult> {
    let reference = pilot_reference(config)?;
    let sl = reference.len();
    let lead = config.pilot.symbols[0] * config.symbol_length();
    let frame = config.frame_length();
    if rx.len() < frame {
        return Err(Error::LengthMismatch {
            what: "received samples",
            expected: frame,
            actual: rx.len(),
        });
    }
    let lags = rx.len() - sl + 1;
    let n = (rx.len() + sl).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let mut a = vec![Complex64::new(0.0, 0.0); n];
    a[..rx.len()].copy_from_slice(rx);
    let mut b = vec![Complex64::new(0.0, 0.0); n];
    b[..sl].copy_from_slice(&reference);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y.conj();
    }
    inv.process(&mut a);

    let power: Vec<f64> = a[..lags].iter().map(|c| c.norm_sqr()).collect();
    let mean = power.iter().sum::<f64>() / lags as f64;
    // the frame must fit around the pilot for a lag to be a candidate
    let (best_lag, peak) = (lead..lags)
        .filter(|&l| l - lead + frame <= rx.len())
        .map(|l| (l, power[l]))
        .fold((lead, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let ratio = if mean > 0.0 { peak / mean } else { 0.0 };
    Ok(SyncResult {
        offset: best_lag - lead,
        peak_to_mean: ratio,
    })
}

/// Frame start that maximises pilot correlation. Fails when the peak does
/// not stand out from the mean by the configured threshold.
pub fn synchronize(rx: &[Complex64], config: &PhyConfig) -> Result<usize> {
    let r = correlate(rx, config)?;
    if r.peak_to_mean < config.sync_threshold {
        return Err(Error::SyncFailure {
            peak_to_mean: r.peak_to_mean,
            threshold: config.sync_threshold,
            best_offset: r.offset,
        });
    }
    Ok(r.offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::{build_grid, ofdm_modulate, UserAllocation};

    fn frame(cfg: &PhyConfig) -> Vec<Complex64> {
        let allocs = UserAllocation::split_equal(cfg.rb_count, 1);
        let coded: Vec<Vec<u8>> = allocs
            .iter()
            .map(|a| (0..a.coded_bits(cfg)).map(|i| ((i * 11 / 5) % 2) as u8).collect())
            .collect();
        ofdm_modulate(&build_grid(cfg, &allocs, &coded).unwrap(), cfg)
            .unwrap()
            .samples
    }

    #[test]
    fn aligned_frame() {
        let cfg = PhyConfig::default();
        assert_eq!(synchronize(&frame(&cfg), &cfg).unwrap(), 0);
    }

    #[test]
    fn delayed_frame() {
        let cfg = PhyConfig::default();
        let mut rx = vec![Complex64::new(0.0, 0.0); 517];
        rx.extend(frame(&cfg));
        rx.extend(vec![Complex64::new(0.0, 0.0); 300]);
        assert_eq!(synchronize(&rx, &cfg).unwrap(), 517);
    }

    #[test]
    fn noise_only_fails() {
        let cfg = PhyConfig::default();
        let mut s = 12345u64;
        let rx: Vec<Complex64> = (0..cfg.frame_length() + 1000)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = ((s >> 33) as f64 / (1u64 << 31) as f64) - 0.5;
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = ((s >> 33) as f64 / (1u64 << 31) as f64) - 0.5;
                Complex64::new(a, b)
            })
            .collect();
        match synchronize(&rx, &cfg) {
            Err(Error::SyncFailure { peak_to_mean, .. }) => assert!(peak_to_mean < 20.0),
            other => panic!("{other:?}"),
        }
    }
}
