use num_complex::Complex64;

use super::qam::demap_symbol;
use super::{PhyConfig, ResourceGrid, UserAllocation};
use crate::error::{Error, Result};

fn check_dims(grid: &ResourceGrid, config: &PhyConfig) -> Result<()> {
    if grid.occupied != config.occupied_subcarriers() || grid.symbols != config.symbols_per_rb {
        return Err(Error::invalid("received grid", "dimensions do not match the layout"));
    }
    Ok(())
}

/// Least-squares channel estimate per occupied subcarrier, averaged over
/// the pilot symbols and held for the whole frame.
pub fn estimate_channel(grid: &ResourceGrid, config: &PhyConfig) -> Result<Vec<Complex64>> {
    check_dims(grid, config)?;
    let pilots = config.pilot_values()?;
    let occ = grid.occupied;
    if pilots.iter().any(|p| p.norm_sqr() == 0.0) {
        return Err(Error::invalid("pilot", "known pilot value is zero"));
    }
    let n = config.pilot.symbols.len() as f64;
    let mut h = vec![Complex64::new(0.0, 0.0); occ];
    for &s in &config.pilot.symbols {
        for (j, (hj, p)) in h.iter_mut().zip(&pilots).enumerate() {
            *hj += grid.cells[s * occ + j] / p;
        }
    }
    for hj in h.iter_mut() {
        *hj /= n;
    }
    Ok(h)
}

/// One-tap equalize each user's cells and emit max-log LLRs in bit order.
/// `noise_var` is the per-cell noise variance before equalization.
pub fn equalize_extract(
    grid: &ResourceGrid,
    channel: &[Complex64],
    allocations: &[UserAllocation],
    config: &PhyConfig,
    noise_var: f64,
) -> Result<Vec<Vec<f64>>> {
    check_dims(grid, config)?;
    if channel.len() != grid.occupied {
        return Err(Error::LengthMismatch {
            what: "channel estimate",
            expected: grid.occupied,
            actual: channel.len(),
        });
    }
    let m = config.modulation;
    let k = m.bits_per_symbol();
    let pts = m.constellation();
    let occ = grid.occupied;
    Ok(allocations
        .iter()
        .map(|a| {
            let idx = a.cell_indices(config);
            let mut out = Vec::with_capacity(idx.len() * k);
            for i in idx {
                let h = channel[i % occ];
                let g = h.norm_sqr();
                if g < 1e-300 {
                    out.extend(std::iter::repeat_n(0.0, k));
                    continue;
                }
                demap_symbol(grid.cells[i] / h, &pts, k, noise_var / g, &mut out);
            }
            out
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::{build_grid, ofdm_demodulate, ofdm_modulate};

    #[test]
    fn flat_channel_is_recovered() {
        let cfg = PhyConfig::default();
        let allocs = UserAllocation::split_equal(cfg.rb_count, 2);
        let coded: Vec<Vec<u8>> = allocs
            .iter()
            .map(|a| (0..a.coded_bits(&cfg)).map(|i| (i % 3 % 2) as u8).collect())
            .collect();
        let grid = build_grid(&cfg, &allocs, &coded).unwrap();
        let gain = Complex64::from_polar(0.3, 1.1);
        let tx = ofdm_modulate(&grid, &cfg).unwrap();
        let rx: Vec<Complex64> = tx.samples.iter().map(|s| s * gain).collect();
        let g = ofdm_demodulate(&rx, 0, &cfg).unwrap();
        let h = estimate_channel(&g, &cfg).unwrap();
        for hj in &h {
            assert!((hj - gain).norm() < 1e-9);
        }
        let llrs = equalize_extract(&g, &h, &allocs, &cfg, 1e-3).unwrap();
        for (l, c) in llrs.iter().zip(&coded) {
            let hard: Vec<u8> = l.iter().map(|&x| u8::from(x < 0.0)).collect();
            assert_eq!(&hard, c);
        }
    }
}
