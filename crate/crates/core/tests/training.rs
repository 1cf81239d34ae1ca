mod common;

use phasemask::blstm::{forward, load_checkpoint, save_checkpoint, Checkpoint, NetworkConfig, RmsProp, Trainer};
use phasemask::array_sim::corpus::synthetic_corpus;
use phasemask::array_sim::ArrayGeometry;
use phasemask::pipeline::{training_set, PipelineConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(layers: usize, hidden: usize, lr: f64) -> NetworkConfig {
    NetworkConfig {
        layers,
        hidden,
        buffer_len: 4096,
        learning_rate: lr,
        ..Default::default()
    }
}

#[test]
fn overfits_a_single_example() {
    let cfg = config(1, 32, 1e-3);
    let geometry = ArrayGeometry::linear(2, 0.1).unwrap();
    let corpus = synthetic_corpus(4, 8000, 16000, 42).unwrap();
    let example = training_set(&corpus, &geometry, 2, 1, 7, &PipelineConfig::from_network(cfg))
        .unwrap()
        .remove(0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut trainer = Trainer::new(cfg, &mut rng).unwrap();
    let batch = [example];
    let initial = trainer.mean_loss(&batch).unwrap();
    let mut reached = None;
    for step in 0..5000 {
        let loss = trainer.train_step(&batch).unwrap();
        if loss < 0.01 * initial {
            reached = Some(step);
            break;
        }
    }
    assert!(reached.is_some(), "final loss {} vs initial {initial}", trainer.mean_loss(&batch).unwrap());
}

#[test]
fn resumed_training_matches_uninterrupted() {
    let cfg = config(1, 6, 1e-3);
    let batch: Vec<_> = (0..2).map(|s| common::random_example(cfg.num_frames(), cfg.num_bins(), s)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut straight = Trainer::new(cfg, &mut rng).unwrap();
    let mut split = straight.clone();
    for _ in 0..6 {
        straight.train_step(&batch).unwrap();
    }
    for _ in 0..3 {
        split.train_step(&batch).unwrap();
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    save_checkpoint(
        &path,
        &Checkpoint {
            config: cfg,
            weights: split.weights.clone(),
            optimizer: Some(split.optimizer.clone()),
            step: split.step,
        },
    )
    .unwrap();
    let ck = load_checkpoint(&path).unwrap();
    let mut resumed = Trainer::resume(ck.config, ck.weights, ck.optimizer, ck.step);
    assert_eq!(resumed.step, 3);
    for _ in 0..3 {
        resumed.train_step(&batch).unwrap();
    }
    assert_eq!(resumed.step, 6);
    assert_eq!(resumed.weights, straight.weights);
}

#[test]
fn loss_decreases_over_steps() {
    let cfg = config(2, 8, 1e-3);
    let batch: Vec<_> = (0..4).map(|s| common::random_example(cfg.num_frames(), cfg.num_bins(), 10 + s)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut trainer = Trainer::new(cfg, &mut rng).unwrap();
    let first = trainer.mean_loss(&batch).unwrap();
    for _ in 0..50 {
        trainer.train_step(&batch).unwrap();
    }
    assert!(trainer.mean_loss(&batch).unwrap() < first);
}

#[test]
fn single_precision_agrees_on_masks() {
    let cfg = config(2, 16, 1e-5);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let trainer = Trainer::new(cfg, &mut rng).unwrap();
    let w32 = trainer.weights.cast::<f32>();
    let (mut agree, mut total) = (0usize, 0usize);
    for s in 0..8 {
        let ex = common::random_example(cfg.num_frames(), cfg.num_bins(), 100 + s);
        let a = forward(ex.features.view(), &trainer.weights).unwrap();
        let b = forward(ex.features.mapv(|v| v as f32).view(), &w32).unwrap();
        agree += a.soi.iter().zip(b.soi.iter()).filter(|(x, y)| x == y).count();
        total += a.soi.len();
    }
    assert!(agree as f64 >= 0.999 * total as f64, "{agree}/{total}");
}

#[test]
fn optimizer_defaults() {
    let opt = RmsProp::new(1e-5, 0.9, 0.9);
    assert_eq!(opt.epsilon, 1e-8);
    assert!(opt.mean_square().is_empty());
}
