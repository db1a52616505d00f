use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gray-coded square constellations with unit average energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Qpsk,
    Qam16,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }

    /// Every constellation point, indexed by its bit label read LSB first
    /// (`label & 1` is the first bit).
    pub fn constellation(self) -> Vec<Complex64> {
        let k = self.bits_per_symbol();
        (0..1usize << k)
            .map(|label| {
                let bits: Vec<u8> = (0..k).map(|i| ((label >> i) & 1) as u8).collect();
                map_one(self, &bits)
            })
            .collect()
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "16QAM",
        })
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "QPSK" | "4QAM" => Ok(Modulation::Qpsk),
            "16QAM" | "QAM16" | "16-QAM" => Ok(Modulation::Qam16),
            other => Err(Error::invalid(
                "modulation",
                format!("unsupported scheme {other:?}, expected QPSK or 16QAM"),
            )),
        }
    }
}

const QAM16_SCALE: f64 = 0.316_227_766_016_837_94; // 1/sqrt(10)

fn pam4(sign: u8, outer: u8) -> f64 {
    let s = 1.0 - 2.0 * f64::from(sign);
    s * (1.0 + 2.0 * f64::from(outer))
}

fn map_one(m: Modulation, b: &[u8]) -> Complex64 {
    match m {
        Modulation::Qpsk => Complex64::new(
            (1.0 - 2.0 * f64::from(b[0])) * FRAC_1_SQRT_2,
            (1.0 - 2.0 * f64::from(b[1])) * FRAC_1_SQRT_2,
        ),
        Modulation::Qam16 => Complex64::new(pam4(b[0], b[2]), pam4(b[1], b[3])) * QAM16_SCALE,
    }
}

/// Map bits to symbols. The bit count must be a multiple of the bits per
/// symbol.
pub fn qam_map(bits: &[u8], modulation: Modulation) -> Result<Vec<Complex64>> {
    let k = modulation.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(Error::LengthMismatch {
            what: "bits for modulation",
            expected: bits.len().div_ceil(k) * k,
            actual: bits.len(),
        });
    }
    Ok(bits.chunks_exact(k).map(|c| map_one(modulation, c)).collect())
}

/// Max-log LLRs for one received symbol, appended to `out`. Positive
/// values favour bit 0.
pub fn demap_symbol(y: Complex64, constellation: &[Complex64], bits: usize, noise_var: f64, out: &mut Vec<f64>) {
    let mut best = [[f64::INFINITY; 2]; 8];
    for (label, p) in constellation.iter().enumerate() {
        let d = (y - p).norm_sqr();
        for (i, slot) in best.iter_mut().enumerate().take(bits) {
            let b = (label >> i) & 1;
            if d < slot[b] {
                slot[b] = d;
            }
        }
    }
    let inv = 1.0 / noise_var.max(1e-300);
    out.extend(best[..bits].iter().map(|[d0, d1]| (d1 - d0) * inv));
}

/// Max-log LLRs for a run of symbols sharing one noise variance.
pub fn qam_demap(symbols: &[Complex64], modulation: Modulation, noise_var: f64) -> Vec<f64> {
    let k = modulation.bits_per_symbol();
    let pts = modulation.constellation();
    let mut out = Vec::with_capacity(symbols.len() * k);
    for &y in symbols {
        demap_symbol(y, &pts, k, noise_var, &mut out);
    }
    out
}
