//! Trains a small network on synthetic two-source scenes and compares
//! held-out SIR against the beamformer alone.
//!
//! cargo run --release -p phasemask --example desk_train -- [train_scenes] [epochs] [lr]

use std::time::Instant;

use phasemask::array_sim::corpus::{split_train_validation, synthetic_corpus};
use phasemask::array_sim::ArrayGeometry;
use phasemask::blstm::{NetworkConfig, Trainer};
use phasemask::eval::{sweep_sources, SweepSettings};
use phasemask::pipeline::{training_set, PipelineConfig, Separator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> phasemask::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let scenes: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let lr: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let nb: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(16384);

    let net = NetworkConfig {
        layers: 2,
        hidden: 64,
        buffer_len: nb,
        learning_rate: lr,
        ..Default::default()
    };
    let cfg = PipelineConfig::from_network(net);
    let geometry = ArrayGeometry::linear(2, 0.1)?;
    let corpus = synthetic_corpus(200, 48000, 16000, 11)?;
    let (train, valid) = split_train_validation(&corpus);

    let t0 = Instant::now();
    let examples = training_set(train, &geometry, 2, scenes, 1_000, &cfg)?;
    println!("built {} examples in {:.1}s", examples.len(), t0.elapsed().as_secs_f64());

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut trainer = Trainer::new(net, &mut rng)?;
    let eval_set = &examples[..32.min(examples.len())];
    println!("initial loss {:.4}", trainer.mean_loss(eval_set)?);
    for epoch in 0..epochs {
        let t = Instant::now();
        let loss = trainer.train_epoch(&examples, 16, &mut rng)?;
        println!("epoch {epoch}: loss {loss:.4} ({:.1}s)", t.elapsed().as_secs_f64());
    }

    let sep = Separator::new(cfg, geometry, trainer.weights.cast::<f32>())?;
    let rows = sweep_sources(&sep, valid, &[2], &SweepSettings::new(100, 900_000, nb))?;
    let n = rows.len() as f64;
    let out = rows.iter().map(|r| r.sir_db).sum::<f64>() / n;
    let bf = rows.iter().map(|r| r.sir_beamformer_db).sum::<f64>() / n;
    println!("held-out SIR: output {out:.2} dB, beamformer {bf:.2} dB, gain {:.2} dB", out - bf);
    Ok(())
}
