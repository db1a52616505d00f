use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ris_thz::config::RunConfig;
use ris_thz::phy::io::{decode_payload, decode_waveform, encode_payload, encode_waveform};
use ris_thz::phy::{conv_encode, qam_demap, qam_map, viterbi_decode_hard, ConvCode, Modulation, Waveform};
use ris_thz::ris::{grating_initial_phase, realize, CouplingConfig, ElementResponseModel, RisGeometry, VoltagePattern};
use ris_thz::scenario::BitImage;
use ris_thz::spgd::{feedback_adjust, run_spgd_scalar, FeedbackState, SpgdConfig};
use std::path::Path;

fn bits(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, 0..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn realized_coefficients_are_passive(
        v in prop::collection::vec(0.0f64..=35.0, 80),
        alpha in 0.0f64..0.5,
    ) {
        let state = realize(
            &RisGeometry::default(),
            &ElementResponseModel::default(),
            &VoltagePattern::new(v).unwrap(),
            CouplingConfig::new(alpha).unwrap(),
        ).unwrap();
        prop_assert!(state.coefficients().iter().all(|c| c.norm() <= 1.0 + 1e-12));
    }

    #[test]
    fn grating_phases_are_wrapped(angle in -89.0f64..89.0) {
        let p = grating_initial_phase(&RisGeometry::default(), angle).unwrap();
        prop_assert!(p.as_slice().iter().all(|&x| (0.0..std::f64::consts::TAU).contains(&x)));
    }

    #[test]
    fn spgd_iterates_stay_in_bounds(seed in 0u64..1000, gain in 0.001f64..1.0, delta in 0.1f64..3.0) {
        let f = |v: &VoltagePattern| -> ris_thz::Result<f64> {
            Ok(v.as_slice().iter().enumerate().map(|(i, x)| x * (i as f64 - 3.5)).sum())
        };
        let cfg = SpgdConfig { gain, perturbation: delta, max_iterations: 30, seed, ..SpgdConfig::default() };
        let v0 = VoltagePattern::uniform(8, 17.5).unwrap();
        let t = run_spgd_scalar(f, |v| Ok((f(v)?, Vec::new())), &v0, &cfg).unwrap();
        prop_assert!(t.last.as_slice().iter().all(|&x| (0.0..=35.0).contains(&x)));
        prop_assert!(t.best_objective >= t.initial_objective);
    }

    #[test]
    fn feedback_increments_exactly_one_weight(readings in prop::collection::vec(-80.0f64..-20.0, 1..6)) {
        let s0 = FeedbackState::new(readings.len());
        let s1 = feedback_adjust(&s0, &readings).unwrap();
        let diff: Vec<u32> = s1.weights.iter().zip(&s0.weights).map(|(a, b)| a - b).collect();
        prop_assert_eq!(diff.iter().sum::<u32>(), 1);
        let k = diff.iter().position(|&d| d == 1).unwrap();
        prop_assert!(readings.iter().all(|&r| r >= readings[k]));
    }

    #[test]
    fn convolutional_code_round_trips(msg in bits(300)) {
        let code = ConvCode::default();
        prop_assert_eq!(viterbi_decode_hard(&code, &conv_encode(&code, &msg)).unwrap(), msg);
    }

    #[test]
    fn qam_round_trips(raw in bits(400), qam16 in any::<bool>()) {
        let m = if qam16 { Modulation::Qam16 } else { Modulation::Qpsk };
        let k = m.bits_per_symbol();
        let msg = &raw[..raw.len() / k * k];
        let llr = qam_demap(&qam_map(msg, m).unwrap(), m, 0.1);
        let hard: Vec<u8> = llr.iter().map(|&l| u8::from(l < 0.0)).collect();
        prop_assert_eq!(hard, msg.to_vec());
    }

    #[test]
    fn payload_file_round_trips(msg in bits(200)) {
        prop_assert_eq!(decode_payload(&encode_payload(&msg), Path::new("p")).unwrap(), msg);
    }

    #[test]
    fn waveform_file_round_trips(iq in prop::collection::vec((-1.0f32..1.0, -1.0f32..1.0), 0..50)) {
        let w = Waveform {
            samples: iq.iter().map(|&(i, q)| Complex64::new(f64::from(i), f64::from(q))).collect(),
            sample_rate: 2.4e9,
        };
        let back = decode_waveform(&encode_waveform(&w), Path::new("w")).unwrap();
        prop_assert_eq!(back.samples, w.samples);
        prop_assert_eq!(back.sample_rate, w.sample_rate);
    }

    #[test]
    fn pbm_round_trips(w in 1usize..40, h in 1usize..10, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = BitImage::new(w, h, (0..w * h).map(|_| rng.random_range(0..2u8)).collect()).unwrap();
        prop_assert_eq!(BitImage::from_pbm(&img.to_pbm(), "x").unwrap(), img);
    }

    #[test]
    fn config_round_trips(
        seed in any::<u64>(),
        alpha in 0.0f64..0.5,
        power in -40.0f64..10.0,
        sigma in 0.0f64..1.0,
        gain in 0.01f64..100.0,
        qpsk in any::<bool>(),
        angles in prop::collection::vec(-89.0f64..89.0, 1..5),
    ) {
        let text = format!(
            "[scenario]\nseed = {seed}\nsweep_angles = {}\n[ris]\ncoupling_alpha = {alpha}\n[link]\ntx_power_dbm = {power}\n\
             [noise]\nmeasurement_sigma_db = {sigma}\n[phy]\nmodulation = {}\n[spgd]\ngain = {gain}\n",
            angles.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", "),
            if qpsk { "QPSK" } else { "16QAM" },
        );
        let cfg = RunConfig::parse(&text, "gen", None).unwrap();
        prop_assert_eq!(&cfg.spec.sweep_angles, &angles);
        prop_assert_eq!(RunConfig::parse(&cfg.to_text(), "again", None).unwrap(), cfg);
    }
}
