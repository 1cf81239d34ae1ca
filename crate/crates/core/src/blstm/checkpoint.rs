//! Versioned binary checkpoints: magic, format version, a length-prefixed
//! JSON header, then every tensor as little-endian f64 in header order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::optim::RmsProp;
use super::weights::NetworkWeights;
use super::NetworkConfig;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"PHMASKCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to resume training or run inference.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: NetworkConfig,
    pub weights: NetworkWeights<f64>,
    pub optimizer: Option<RmsProp>,
    pub step: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: NetworkConfig,
    num_bins: usize,
    step: usize,
    tensors: Vec<(String, Vec<usize>)>,
    optimizer: Option<OptimizerHeader>,
}

#[derive(Serialize, Deserialize)]
struct OptimizerHeader {
    learning_rate: f64,
    decay: f64,
    momentum: f64,
    epsilon: f64,
    initialized: bool,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn write_f64s(w: &mut impl Write, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64s(r: &mut impl Read, out: &mut [f64]) -> Result<()> {
    let mut buf = [0u8; 8];
    for v in out {
        r.read_exact(&mut buf)
            .map_err(|_| corrupt("checkpoint is truncated"))?;
        *v = f64::from_le_bytes(buf);
    }
    Ok(())
}

pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    let tensors = ckpt.weights.tensors();
    let optimizer = ckpt.optimizer.as_ref().map(|o| OptimizerHeader {
        learning_rate: o.learning_rate,
        decay: o.decay,
        momentum: o.momentum,
        epsilon: o.epsilon,
        initialized: !o.mean_square().is_empty(),
    });
    let header = Header {
        config: ckpt.config,
        num_bins: ckpt.weights.num_bins(),
        step: ckpt.step,
        tensors: tensors.iter().map(|(n, s, _)| (n.clone(), s.clone())).collect(),
        optimizer,
    };
    let json = serde_json::to_vec(&header).map_err(|e| corrupt(e.to_string()))?;

    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for (_, _, values) in &tensors {
        write_f64s(&mut w, values)?;
    }
    if let Some(o) = &ckpt.optimizer {
        for t in o.mean_square().iter().chain(o.velocity()) {
            write_f64s(&mut w, t)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| corrupt("file too short for a checkpoint"))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(corrupt("not a checkpoint file"));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word).map_err(|_| corrupt("checkpoint is truncated"))?;
    let version = u32::from_le_bytes(word);
    if version != CHECKPOINT_VERSION {
        return Err(corrupt(format!(
            "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
        )));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|_| corrupt("checkpoint is truncated"))?;
    let len = u64::from_le_bytes(len);
    if len > 1 << 24 {
        return Err(corrupt("checkpoint header is implausibly large"));
    }
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json).map_err(|_| corrupt("checkpoint is truncated"))?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| corrupt(format!("bad header: {e}")))?;

    let cfg = header.config;
    cfg.validate().map_err(|e| corrupt(format!("bad config: {e}")))?;
    if header.num_bins != cfg.num_bins() {
        return Err(corrupt("header bin count disagrees with the STFT window"));
    }
    let mut weights = NetworkWeights::zeros(cfg.layers, cfg.hidden, cfg.num_bins())?;
    let expected: Vec<(String, Vec<usize>)> =
        weights.tensors().into_iter().map(|(n, s, _)| (n, s)).collect();
    if expected != header.tensors {
        return Err(corrupt("tensor layout does not match the configured architecture"));
    }
    for t in weights.tensors_mut() {
        read_f64s(&mut r, t)?;
    }

    let optimizer = match header.optimizer {
        None => None,
        Some(h) => {
            let mut opt = RmsProp::new(h.learning_rate, h.decay, h.momentum);
            opt.epsilon = h.epsilon;
            if h.initialized {
                let mut state: Vec<Vec<f64>> = expected
                    .iter()
                    .chain(&expected)
                    .map(|(_, s)| vec![0.0; s.iter().product()])
                    .collect();
                for t in &mut state {
                    read_f64s(&mut r, t)?;
                }
                let velocity = state.split_off(expected.len());
                opt.set_state(state, velocity)?;
            }
            Some(opt)
        }
    };
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(corrupt("trailing bytes after checkpoint data"));
    }
    if !weights.all_finite() {
        return Err(corrupt("checkpoint contains non-finite weights"));
    }
    Ok(Checkpoint {
        config: cfg,
        weights,
        optimizer,
        step: header.step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> Checkpoint {
        let config = NetworkConfig {
            layers: 2,
            hidden: 3,
            frame_len: 16,
            buffer_len: 64,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let weights = NetworkWeights::random(2, 3, 9, &mut rng).unwrap();
        Checkpoint {
            config,
            weights,
            optimizer: None,
            step: 7,
        }
    }

    #[test]
    fn round_trip_without_optimizer() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ckpt");
        let ck = small();
        save_checkpoint(&path, &ck).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), ck);
    }

    #[test]
    fn round_trip_with_optimizer_state() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.ckpt");
        let mut ck = small();
        let mut opt = RmsProp::new(1e-3, 0.9, 0.9);
        let grads = ck.weights.clone();
        opt.step(&mut ck.weights, &grads).unwrap();
        ck.optimizer = Some(opt);
        save_checkpoint(&path, &ck).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), ck);
    }

    #[test]
    fn rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ckpt");
        std::fs::write(&path, b"garbage").unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(_))));

        save_checkpoint(&path, &small()).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[8] = 99;
        std::fs::write(&path, &bytes).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");

        save_checkpoint(&path, &small()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(_))));
    }
}
