//! Payload, waveform and BER report files.
//!
//! Payload: u64 LE bit count, then bits packed MSB first, zero padded to a
//! byte. Waveform: magic `RISIQ1`, f64 LE sample rate, u64 LE sample
//! count, then interleaved f32 LE I/Q.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use super::Waveform;
use crate::error::{Error, Result};

pub const WAVEFORM_MAGIC: &[u8; 6] = b"RISIQ1";

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line: 0,
        message: message.into(),
    }
}

pub fn encode_payload(bits: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + bits.len().div_ceil(8));
    out.extend_from_slice(&(bits.len() as u64).to_le_bytes());
    for chunk in bits.chunks(8) {
        let mut byte = 0u8;
        for (i, &b) in chunk.iter().enumerate() {
            byte |= (b & 1) << (7 - i);
        }
        out.push(byte);
    }
    out
}

pub fn decode_payload(data: &[u8], path: &Path) -> Result<Vec<u8>> {
    let head: [u8; 8] = data
        .get(..8)
        .and_then(|h| h.try_into().ok())
        .ok_or_else(|| parse_err(path, "missing 8-byte length header"))?;
    let n = u64::from_le_bytes(head) as usize;
    let body = &data[8..];
    if body.len() != n.div_ceil(8) {
        return Err(parse_err(
            path,
            format!("header declares {n} bits but {} payload bytes follow", body.len()),
        ));
    }
    Ok((0..n).map(|i| (body[i / 8] >> (7 - i % 8)) & 1).collect())
}

pub fn write_payload(path: &Path, bits: &[u8]) -> Result<()> {
    fs::write(path, encode_payload(bits)).map_err(|e| Error::io(path, e))
}

pub fn read_payload(path: &Path) -> Result<Vec<u8>> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_payload(&data, path)
}

pub fn encode_waveform(w: &Waveform) -> Vec<u8> {
    let mut out = Vec::with_capacity(22 + 8 * w.samples.len());
    out.extend_from_slice(WAVEFORM_MAGIC);
    out.extend_from_slice(&w.sample_rate.to_le_bytes());
    out.extend_from_slice(&(w.samples.len() as u64).to_le_bytes());
    for s in &w.samples {
        out.extend_from_slice(&(s.re as f32).to_le_bytes());
        out.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    out
}

pub fn decode_waveform(data: &[u8], path: &Path) -> Result<Waveform> {
    if data.len() < 22 || &data[..6] != WAVEFORM_MAGIC {
        return Err(parse_err(path, "not a RISIQ1 waveform file"));
    }
    let rate = f64::from_le_bytes(data[6..14].try_into().expect("8 bytes"));
    let n = u64::from_le_bytes(data[14..22].try_into().expect("8 bytes")) as usize;
    let body = &data[22..];
    if body.len() != n * 8 {
        return Err(parse_err(
            path,
            format!("header declares {n} samples but {} bytes follow", body.len()),
        ));
    }
    let f = |b: &[u8]| f64::from(f32::from_le_bytes(b.try_into().expect("4 bytes")));
    let samples = body
        .chunks_exact(8)
        .map(|c| Complex64::new(f(&c[..4]), f(&c[4..])))
        .collect();
    Ok(Waveform {
        samples,
        sample_rate: rate,
    })
}

pub fn write_waveform(path: &Path, w: &Waveform) -> Result<()> {
    fs::write(path, encode_waveform(w)).map_err(|e| Error::io(path, e))
}

pub fn read_waveform(path: &Path) -> Result<Waveform> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_waveform(&data, path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub user_id: u32,
    pub sent_bits: usize,
    pub errors: usize,
}

impl BerRecord {
    pub fn ber(&self) -> f64 {
        if self.sent_bits == 0 {
            0.0
        } else {
            self.errors as f64 / self.sent_bits as f64
        }
    }
}

pub fn write_ber_report(path: &Path, records: &[BerRecord]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "user_id,sent_bits,errors,ber").map_err(|e| Error::io(path, e))?;
    for r in records {
        writeln!(w, "{},{},{},{:.6e}", r.user_id, r.sent_bits, r.errors, r.ber()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
