use super::{PhyConfig, UserAllocation};
use crate::error::{Error, Result};

/// Fraction of differing bits. Empty inputs give zero.
pub fn compute_ber(sent: &[u8], received: &[u8]) -> Result<f64> {
    if sent.len() != received.len() {
        return Err(Error::LengthMismatch {
            what: "bit streams",
            expected: sent.len(),
            actual: received.len(),
        });
    }
    if sent.is_empty() {
        return Ok(0.0);
    }
    Ok(bit_errors(sent, received) as f64 / sent.len() as f64)
}

pub fn bit_errors(sent: &[u8], received: &[u8]) -> usize {
    sent.iter().zip(received).filter(|(a, b)| (*a & 1) != (*b & 1)).count()
}

/// BER of each user's received stream against what was sent.
pub fn ber_per_user(sent: &[Vec<u8>], received: &[Vec<u8>]) -> Result<Vec<f64>> {
    if sent.len() != received.len() {
        return Err(Error::LengthMismatch {
            what: "user streams",
            expected: sent.len(),
            actual: received.len(),
        });
    }
    sent.iter().zip(received).map(|(s, r)| compute_ber(s, r)).collect()
}

/// Information rate in bit/s carried by the data cells of `allocation`, or
/// of the whole grid when `None`. Pilots, cyclic prefix and code rate are
/// charged against it.
pub fn effective_rate(config: &PhyConfig, allocation: Option<&UserAllocation>) -> f64 {
    let cells = match allocation {
        Some(a) => a.data_cells(config),
        None => config.rb_count * config.data_cells_per_rb(),
    };
    let code_rate = 0.5;
    cells as f64 * config.modulation.bits_per_symbol() as f64 * code_rate / config.frame_duration()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::Modulation;

    #[test]
    fn ber_counts() {
        assert_eq!(compute_ber(&[0, 1, 1, 0], &[0, 0, 1, 1]).unwrap(), 0.5);
        assert_eq!(compute_ber(&[], &[]).unwrap(), 0.0);
        assert!(compute_ber(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn default_rate_matches_hand_count() {
        let cfg = PhyConfig::default();
        let hand = 1440.0 * 13.0 * 4.0 * 0.5 / (14.0 * 2192.0 / 2.4e9);
        assert!((effective_rate(&cfg, None) - hand).abs() < 1.0);
        assert!((hand - 2.928e9).abs() < 1e6);
        let qpsk = PhyConfig {
            modulation: Modulation::Qpsk,
            ..cfg.clone()
        };
        assert!((effective_rate(&qpsk, None) * 2.0 - hand).abs() < 1.0);
        let a = UserAllocation::new(1, (0..40).collect());
        assert!((effective_rate(&cfg, Some(&a)) * 3.0 - hand).abs() < 1.0);
    }
}
