use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use ris_thz::channel::{apply_channel, Awgn};
use ris_thz::phy::sync::correlate;
use ris_thz::phy::{
    compute_ber, estimate_channel, ofdm_demodulate, ofdm_modulate, qam_demap, qam_map, synchronize, FrameLayout,
    Modulation, PhyConfig, ResourceGrid,
};
use ris_thz::Error;
use statrs::function::erf::erfc;

fn q(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Gray 16QAM bit error probability at symbol SNR `snr_db`: the sign bit of
/// each rail fails past distance 1 or 3, the magnitude bit past 1, 3 or
/// inside the outer ring.
fn qam16_ber(snr_db: f64) -> f64 {
    let a = (10f64.powf(snr_db / 10.0) / 5.0).sqrt();
    (3.0 * q(a) + 2.0 * q(3.0 * a) - q(5.0 * a)) / 4.0
}

fn hard_ber(snr_db: f64, symbols: usize, seed: u64) -> (usize, usize) {
    let es_n0 = 10f64.powf(snr_db / 10.0);
    let sigma = (0.5 / es_n0).sqrt();
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chunk = 250_000;
    let (mut errors, mut bits) = (0, 0);
    let mut left = symbols;
    while left > 0 {
        let n = left.min(chunk);
        left -= n;
        let tx: Vec<u8> = (0..4 * n).map(|_| rng.random_range(0..2u8)).collect();
        let rx: Vec<Complex64> = qam_map(&tx, Modulation::Qam16)
            .unwrap()
            .into_iter()
            .map(|s| s + Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
            .collect();
        let llr = qam_demap(&rx, Modulation::Qam16, 1.0 / es_n0);
        errors += tx.iter().zip(&llr).filter(|(&b, &l)| (l < 0.0) != (b == 1)).count();
        bits += tx.len();
    }
    (errors, bits)
}

#[test]
fn qam16_hard_ber_at_10db_matches_q_function() {
    let (errors, bits) = hard_ber(10.0, 1_000_000, 1);
    let measured = errors as f64 / bits as f64;
    let expected = qam16_ber(10.0);
    assert!(
        (measured / expected - 1.0).abs() < 0.10,
        "{measured:.4e} vs {expected:.4e}"
    );
}

#[test]
fn qam16_hard_ber_at_20db_matches_q_function() {
    // ~3e-6 BER: 10% relative needs about a thousand errors, so this point
    // uses 1e8 symbols rather than 1e6
    let (errors, bits) = hard_ber(20.0, 100_000_000, 2);
    let measured = errors as f64 / bits as f64;
    let expected = qam16_ber(20.0);
    assert!(errors > 500, "{errors} errors");
    assert!(
        (measured / expected - 1.0).abs() < 0.10,
        "{measured:.4e} vs {expected:.4e}"
    );
}

#[test]
fn qam16_hard_ber_at_20db_over_1e6_symbols_is_consistent() {
    // about 12 expected errors: check the count against a Poisson band
    let (errors, bits) = hard_ber(20.0, 1_000_000, 3);
    let mean = qam16_ber(20.0) * bits as f64;
    assert!(
        (errors as f64 - mean).abs() < 4.0 * mean.sqrt() + 1.0,
        "{errors} vs {mean:.1}"
    );
}

#[test]
fn sync_locates_frame_after_random_prefix() {
    let config = PhyConfig::default();
    let layout = FrameLayout::single_user(&config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let bits: Vec<u8> = (0..layout.payload_capacity(0))
        .map(|_| rng.random_range(0..2u8))
        .collect();
    let (_, wave) = layout.transmit(std::slice::from_ref(&bits)).unwrap();
    let noise = Awgn::from_snr_db(16.0, wave.mean_power());
    let prefix = apply_channel(
        &vec![Complex64::new(0.0, 0.0); 1000],
        Complex64::new(1.0, 0.0),
        noise,
        &mut rng,
    );
    let mut rx = prefix;
    rx.extend(apply_channel(
        &wave.samples,
        Complex64::from_polar(1.0, 0.7),
        noise,
        &mut rng,
    ));
    assert_eq!(synchronize(&rx, &config).unwrap(), 1000);
    let frame = layout.receive(&rx, noise.variance).unwrap();
    assert!(frame.synchronized);
    assert_eq!(frame.offset, 1000);
    assert_eq!(compute_ber(&bits, &frame.bits[0]).unwrap(), 0.0);
}

#[test]
fn sync_rejects_pure_noise() {
    let config = PhyConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = config.frame_length() + 2000;
    let rx = apply_channel(
        &vec![Complex64::new(0.0, 0.0); n],
        Complex64::new(1.0, 0.0),
        Awgn { variance: 1.0 },
        &mut rng,
    );
    let r = correlate(&rx, &config).unwrap();
    assert!(r.peak_to_mean < config.sync_threshold, "{}", r.peak_to_mean);
    assert!(matches!(synchronize(&rx, &config), Err(Error::SyncFailure { .. })));
}

#[test]
fn ls_estimate_error_variance_equals_noise_over_pilot_power() {
    let config = PhyConfig::default();
    let layout = FrameLayout::single_user(&config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let bits: Vec<u8> = (0..layout.payload_capacity(0))
        .map(|_| rng.random_range(0..2u8))
        .collect();
    let (_, wave) = layout.transmit(std::slice::from_ref(&bits)).unwrap();
    let pilots = config.pilot_values().unwrap();
    let inv_power = pilots.iter().map(|p| 1.0 / p.norm_sqr()).sum::<f64>() / pilots.len() as f64;
    let gain = Complex64::from_polar(0.8, -1.1);
    let variance = 0.01;
    let mut total = 0.0;
    let trials = 20;
    for _ in 0..trials {
        let rx = apply_channel(&wave.samples, gain, Awgn { variance }, &mut rng);
        let grid = ofdm_demodulate(&rx, 0, &config).unwrap();
        let h = estimate_channel(&grid, &config).unwrap();
        total += h.iter().map(|x| (x - gain).norm_sqr()).sum::<f64>() / h.len() as f64;
    }
    let measured = total / trials as f64;
    let expected = variance * inv_power;
    assert!(
        (measured / expected - 1.0).abs() < 0.05,
        "{measured:.4e} vs {expected:.4e}"
    );
}

#[test]
fn all_null_grid_gives_zero_waveform() {
    let config = PhyConfig::default();
    let wave = ofdm_modulate(&ResourceGrid::empty(&config), &config).unwrap();
    assert_eq!(wave.len(), config.frame_length());
    assert!(wave.samples.iter().all(|s| s.norm() == 0.0));
}

#[test]
fn coded_waterfall_falls_with_snr() {
    for (modulation, clean_at) in [(Modulation::Qpsk, 8.0), (Modulation::Qam16, 14.0)] {
        let config = PhyConfig {
            modulation,
            ..PhyConfig::default()
        };
        let layout = FrameLayout::single_user(&config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let bits: Vec<u8> = (0..layout.payload_capacity(0))
            .map(|_| rng.random_range(0..2u8))
            .collect();
        let (_, wave) = layout.transmit(std::slice::from_ref(&bits)).unwrap();
        let mut prev = 1.0;
        for snr in [0.0, 4.0, 8.0, clean_at] {
            let noise = Awgn::from_snr_db(snr, wave.mean_power());
            let rx = apply_channel(&wave.samples, Complex64::new(1.0, 0.0), noise, &mut rng);
            let ber = compute_ber(&bits, &layout.receive(&rx, noise.variance).unwrap().bits[0]).unwrap();
            assert!(ber <= prev, "{modulation} at {snr} dB: {ber} > {prev}");
            prev = ber;
        }
        assert_eq!(prev, 0.0, "{modulation} not clean at {clean_at} dB");
    }
}

#[test]
fn frame_dimensions() {
    let config = PhyConfig::default();
    assert_eq!(config.occupied_subcarriers(), 1440);
    assert_eq!(config.frame_length(), 14 * 2192);
    let layout = FrameLayout::single_user(&config).unwrap();
    assert_eq!(layout.payload_capacity(0), 1440 * 13 * 2 - 6);
}

#[test]
fn q_function_oracle_values() {
    // frozen from an independent scipy evaluation of the same expression
    assert!((qam16_ber(10.0) / 0.0589927252679144 - 1.0).abs() < 1e-9);
    assert!((qam16_ber(20.0) / 2.9040811616415373e-06 - 1.0).abs() < 1e-9);
}
