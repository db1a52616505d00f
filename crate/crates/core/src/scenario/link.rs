use rand::Rng;

use crate::channel::{apply_channel, PhyLink};
use crate::error::{Error, Result};
use crate::phy::FrameLayout;

/// Carry one bit stream per user through as many frames as needed. Every
/// user sees the whole frame through its own link and keeps only its own
/// decoded bits. Streams must be whole multiples of the user's capacity.
pub fn simulate_users<R: Rng + ?Sized>(
    layout: &FrameLayout,
    streams: &[Vec<u8>],
    links: &[PhyLink],
    rng: &mut R,
) -> Result<Vec<Vec<u8>>> {
    let users = layout.allocations.len();
    if streams.len() != users || links.len() != users {
        return Err(Error::LengthMismatch {
            what: "per-user streams and links",
            expected: users,
            actual: streams.len().min(links.len()),
        });
    }
    let caps: Vec<usize> = (0..users).map(|u| layout.payload_capacity(u)).collect();
    let frames = streams[0].len() / caps[0];
    for (u, s) in streams.iter().enumerate() {
        if s.len() != frames * caps[u] {
            return Err(Error::LengthMismatch {
                what: "user stream bits",
                expected: frames * caps[u],
                actual: s.len(),
            });
        }
    }
    let mut out: Vec<Vec<u8>> = caps.iter().map(|c| Vec::with_capacity(c * frames)).collect();
    for f in 0..frames {
        let payloads: Vec<Vec<u8>> = streams
            .iter()
            .zip(&caps)
            .map(|(s, &c)| s[f * c..(f + 1) * c].to_vec())
            .collect();
        let (_, wave) = layout.transmit(&payloads)?;
        for (u, link) in links.iter().enumerate() {
            let rx = apply_channel(&wave.samples, link.gain, link.noise, rng);
            let frame = layout.receive(&rx, link.noise.variance.max(1e-12))?;
            out[u].extend_from_slice(&frame.bits[u]);
        }
    }
    Ok(out)
}

pub(crate) fn random_bits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u8> {
    (0..n).map(|_| u8::from(rng.random::<bool>())).collect()
}
