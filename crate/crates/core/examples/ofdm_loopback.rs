//! One three-user frame through a noiseless channel; every user recovers
//! its payload exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ris_thz::phy::{FrameLayout, PhyConfig, UserAllocation};

fn main() -> ris_thz::Result<()> {
    let config = PhyConfig::default();
    let layout = FrameLayout::new(&config, UserAllocation::split_equal(config.rb_count, 3))?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let payloads: Vec<Vec<u8>> = (0..3)
        .map(|u| {
            (0..layout.payload_capacity(u))
                .map(|_| rng.random_range(0..2u8))
                .collect()
        })
        .collect();
    let (_, wave) = layout.transmit(&payloads)?;
    let frame = layout.receive(&wave.samples, 1e-9)?;
    println!(
        "{} samples, {:.2} us, sync peak/mean {:.1}",
        wave.len(),
        1e6 * config.frame_duration(),
        frame.peak_to_mean
    );
    for (u, p) in payloads.iter().enumerate() {
        println!("user {}: {} bits, identical {}", u + 1, p.len(), frame.bits[u] == *p);
    }
    Ok(())
}
