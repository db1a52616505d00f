//! Coded BER against SNR for QPSK and 16QAM over AWGN.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ris_thz::channel::{apply_channel, Awgn};
use ris_thz::phy::{compute_ber, FrameLayout, Modulation, PhyConfig};

fn main() -> ris_thz::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    println!("modulation,snr_db,ber");
    for modulation in [Modulation::Qpsk, Modulation::Qam16] {
        let config = PhyConfig {
            modulation,
            ..PhyConfig::default()
        };
        let layout = FrameLayout::single_user(&config)?;
        let bits: Vec<u8> = (0..layout.payload_capacity(0))
            .map(|_| rng.random_range(0..2u8))
            .collect();
        let (_, wave) = layout.transmit(std::slice::from_ref(&bits))?;
        for snr in (-2..=12).step_by(2) {
            let noise = Awgn::from_snr_db(f64::from(snr), wave.mean_power());
            let rx = apply_channel(&wave.samples, Complex64::new(1.0, 0.0), noise, &mut rng);
            let frame = layout.receive(&rx, noise.variance)?;
            println!("{modulation},{snr},{:.3e}", compute_ber(&bits, &frame.bits[0])?);
        }
    }
    Ok(())
}
