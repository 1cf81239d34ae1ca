use phasemask::array_sim::corpus::synthetic_corpus;
use phasemask::array_sim::{generate_scene, ideal_masks, simulate_mixture, ArrayGeometry, SceneOptions};
use phasemask::audio::{StftPlan, TimeSignal};
use phasemask::blstm::{separate, MaskPair, NetworkConfig, NetworkWeights};
use phasemask::eval::{evaluate_scene, sir};
use phasemask::pipeline::{PipelineConfig, Separator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RATE: u32 = 16_000;

/// White noise restricted to FFT bins [lo, hi) of the whole signal.
fn band_noise(len: usize, lo: usize, hi: usize, seed: u64) -> TimeSignal {
    use realfft::RealFftPlanner;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planner = RealFftPlanner::<f64>::new();
    let inv = planner.plan_fft_inverse(len);
    let mut spec = inv.make_input_vec();
    for (k, v) in spec.iter_mut().enumerate() {
        if (lo..hi).contains(&k) {
            *v = realfft::num_complex::Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
        }
    }
    let mut out = inv.make_output_vec();
    inv.process(&mut spec, &mut out).unwrap();
    let rms = (out.iter().map(|x| x * x).sum::<f64>() / len as f64).sqrt();
    TimeSignal::new(out.into_iter().map(|x| 0.1 * x / rms).collect(), RATE).unwrap()
}

#[test]
fn ideal_mask_on_disjoint_bands_separates_cleanly() {
    let cfg = NetworkConfig {
        buffer_len: 16384,
        ..Default::default()
    };
    // 16384-point bins 0..4096 end at 4 kHz; keep a guard band between the sources
    let low = band_noise(16384, 64, 2800, 1);
    let high = band_noise(16384, 5000, 7800, 2);
    let mix = &low + &high;
    let plan = StftPlan::new(cfg.frame_len).unwrap();
    let (o_soi, o_int) = ideal_masks(&low, &high, &plan).unwrap();
    let probs = o_soi.mapv(|b| if b { 1.0 } else { 0.0 });
    let masks = MaskPair::from_probabilities(probs);
    assert_eq!(masks.int, o_int);
    let (y_soi, y_int) = separate(&mix, &masks, &cfg).unwrap();
    let r = sir(&y_soi, &low, &[&high]).unwrap();
    assert!(r.sir_db >= 30.0, "{}", r.sir_db);
    let r = sir(&y_int, &high, &[&low]).unwrap();
    assert!(r.sir_db >= 30.0, "{}", r.sir_db);
}

#[test]
fn all_ones_mask_passes_reference_through() {
    let cfg = NetworkConfig {
        buffer_len: 4096,
        ..Default::default()
    };
    let x = band_noise(4096, 10, 1500, 5);
    let probs = ndarray::Array2::<f64>::ones((cfg.num_frames(), cfg.num_bins()));
    let (y_soi, y_int) = separate(&x, &MaskPair::from_probabilities(probs), &cfg).unwrap();
    let err: f64 = y_soi.samples().iter().zip(x.samples()).map(|(a, b)| (a - b).powi(2)).sum();
    assert!((err / x.energy()).sqrt() < 1e-10);
    assert!(y_int.energy() < 1e-20 * x.energy());
}

#[test]
fn silent_input_gives_silent_output() {
    let cfg = PipelineConfig::from_network(NetworkConfig {
        layers: 1,
        hidden: 4,
        buffer_len: 4096,
        ..Default::default()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let w = NetworkWeights::<f64>::random(1, 4, 257, &mut rng).unwrap();
    let geometry = ArrayGeometry::linear(3, 0.1).unwrap();
    let sep = Separator::new(cfg, geometry, w).unwrap();
    let silent = vec![TimeSignal::zeros(9000, RATE).unwrap(); 3];
    let out = sep.run(&silent, 30.0).unwrap();
    assert!(out.soi.samples().iter().all(|&v| v == 0.0));
    assert!(out.interference.samples().iter().all(|&v| v == 0.0));
}

#[test]
fn rejects_bad_doa_and_mic_count() {
    let cfg = PipelineConfig::from_network(NetworkConfig {
        layers: 1,
        hidden: 4,
        buffer_len: 4096,
        ..Default::default()
    });
    let w = NetworkWeights::<f32>::zeros(1, 4, 257).unwrap();
    let sep = Separator::new(cfg, ArrayGeometry::linear(2, 0.1).unwrap(), w).unwrap();
    let two = vec![TimeSignal::zeros(4096, RATE).unwrap(); 2];
    assert!(sep.run(&two, 95.0).is_err());
    assert!(sep.run(&two[..1], 0.0).is_err());
}

#[test]
fn single_source_scene_scores_near_cap() {
    let cfg = PipelineConfig::from_network(NetworkConfig {
        layers: 1,
        hidden: 4,
        buffer_len: 4096,
        ..Default::default()
    });
    // bias the output layer so every bin is classified as SOI
    let mut w = NetworkWeights::<f64>::zeros(1, 4, 257).unwrap();
    w.fc_bias.slice_mut(ndarray::s![..257]).fill(5.0);
    let geometry = ArrayGeometry::linear(2, 0.1).unwrap();
    let sep = Separator::new(cfg, geometry.clone(), w).unwrap();
    let corpus = synthetic_corpus(3, 10000, RATE, 8).unwrap();
    let scene = generate_scene(&corpus, &SceneOptions::new(1, 8192), &geometry, 2).unwrap();
    let score = evaluate_scene(&sep, &scene).unwrap();
    assert!(score.output.sir_db > 30.0, "{}", score.output.sir_db);
}

#[test]
fn beamformer_separates_broadside_from_endfire() {
    let geometry = ArrayGeometry::linear(2, 0.1).unwrap();
    let corpus = synthetic_corpus(2, 16384 * 2, RATE, 9).unwrap();
    let mics = simulate_mixture(&[(corpus[0].clone(), 0.0), (corpus[1].clone(), 90.0)], &geometry).unwrap();
    let cfg = PipelineConfig::from_network(NetworkConfig {
        layers: 1,
        hidden: 4,
        ..Default::default()
    });
    let w = NetworkWeights::<f32>::zeros(1, 4, 257).unwrap();
    let sep = Separator::new(cfg, geometry, w).unwrap();
    let out = sep.run(&mics, 0.0).unwrap();
    let r = sir(&out.beamformer_soi, &corpus[0], &[&corpus[1]]).unwrap();
    let mixture = sir(&mics[0], &corpus[0], &[&corpus[1]]).unwrap();
    assert!(r.sir_db > mixture.sir_db + 3.0, "{} vs {}", r.sir_db, mixture.sir_db);
}
