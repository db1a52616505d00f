//! Rate-1/2 feedforward convolutional code with zero-tail termination and a
//! soft-input Viterbi decoder.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvCode {
    pub constraint_length: u32,
    /// Generator polynomials, MSB tapping the current input bit.
    pub generators: [u32; 2],
}

impl Default for ConvCode {
    fn default() -> Self {
        Self {
            constraint_length: 7,
            generators: [0o133, 0o171],
        }
    }
}

impl ConvCode {
    pub const MAX_CONSTRAINT_LENGTH: u32 = 16;

    pub fn validate(&self) -> Result<()> {
        let k = self.constraint_length;
        if !(2..=Self::MAX_CONSTRAINT_LENGTH).contains(&k) {
            return Err(Error::OutOfRange {
                what: "constraint_length",
                value: f64::from(k),
                range: "[2, 16]",
            });
        }
        for g in self.generators {
            if g == 0 || g >> k != 0 {
                return Err(Error::invalid(
                    "generator",
                    format!("{g:o} (octal) does not fit constraint length {k}"),
                ));
            }
        }
        Ok(())
    }

    pub fn memory(&self) -> usize {
        self.constraint_length as usize - 1
    }

    fn state_count(&self) -> usize {
        1 << self.memory()
    }

    /// Coded length for `n` information bits, tail included.
    pub fn coded_len(&self, n: usize) -> usize {
        2 * (n + self.memory())
    }

    /// Largest message that fits in `coded` bits, if any.
    pub fn message_capacity(&self, coded: usize) -> Option<usize> {
        (coded / 2).checked_sub(self.memory())
    }

    fn outputs(&self, reg: u32) -> (u8, u8) {
        (
            ((reg & self.generators[0]).count_ones() & 1) as u8,
            ((reg & self.generators[1]).count_ones() & 1) as u8,
        )
    }
}

/// Encode `bits` (0/1) and append `K−1` zero tail bits. Output is
/// interleaved `g0, g1` per input bit.
pub fn conv_encode(code: &ConvCode, bits: &[u8]) -> Vec<u8> {
    let m = code.memory();
    let mut state = 0u32;
    let mut out = Vec::with_capacity(code.coded_len(bits.len()));
    for &b in bits.iter().chain(std::iter::repeat_n(&0u8, m)) {
        let reg = (u32::from(b & 1) << m) | state;
        let (a, c) = code.outputs(reg);
        out.push(a);
        out.push(c);
        state = reg >> 1;
    }
    out
}

/// Maximum-likelihood decode of zero-tail-terminated soft input. `llrs`
/// holds one value per coded bit, positive favouring 0. Returns the
/// information bits with the tail removed.
pub fn viterbi_decode(code: &ConvCode, llrs: &[f64]) -> Result<Vec<u8>> {
    code.validate()?;
    if !llrs.len().is_multiple_of(2) {
        return Err(Error::invalid("coded stream", "length must be even"));
    }
    let m = code.memory();
    let steps = llrs.len() / 2;
    if steps < m {
        return Err(Error::LengthMismatch {
            what: "coded stream",
            expected: 2 * m,
            actual: llrs.len(),
        });
    }
    let states = code.state_count();
    let words = states.div_ceil(64);

    // branch outputs indexed by [next_state][dropped bit]
    let mut branch = vec![[(0u8, 0u8); 2]; states];
    for (ns, slot) in branch.iter_mut().enumerate() {
        let input = (ns >> (m - 1)) as u32;
        for (b, out) in slot.iter_mut().enumerate() {
            let prev = ((ns << 1) & (states - 1)) | b;
            let reg = (input << m) | prev as u32;
            *out = code.outputs(reg);
        }
    }

    let mut metric = vec![f64::NEG_INFINITY; states];
    metric[0] = 0.0;
    let mut next = vec![0.0; states];
    let mut decisions = vec![0u64; steps * words];

    for t in 0..steps {
        let (l0, l1) = (llrs[2 * t], llrs[2 * t + 1]);
        let score = |(a, c): (u8, u8)| (if a == 0 { l0 } else { -l0 }) + (if c == 0 { l1 } else { -l1 });
        let dec = &mut decisions[t * words..(t + 1) * words];
        for ns in 0..states {
            let base = (ns << 1) & (states - 1);
            let m0 = metric[base] + score(branch[ns][0]);
            let m1 = metric[base | 1] + score(branch[ns][1]);
            if m1 > m0 {
                next[ns] = m1;
                dec[ns / 64] |= 1 << (ns % 64);
            } else {
                next[ns] = m0;
            }
        }
        std::mem::swap(&mut metric, &mut next);
    }

    let mut out = vec![0u8; steps];
    let mut ns = 0usize;
    for t in (0..steps).rev() {
        out[t] = (ns >> (m - 1)) as u8;
        let bit = (decisions[t * words + ns / 64] >> (ns % 64)) & 1;
        ns = ((ns << 1) & (states - 1)) | bit as usize;
    }
    out.truncate(steps - m);
    Ok(out)
}

/// Hard-input decode: bits are mapped to ±1 soft values.
pub fn viterbi_decode_hard(code: &ConvCode, bits: &[u8]) -> Result<Vec<u8>> {
    let llrs: Vec<f64> = bits.iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).collect();
    viterbi_decode(code, &llrs)
}
