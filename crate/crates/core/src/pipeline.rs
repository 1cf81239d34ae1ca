//! End-to-end separation: beamformer, feature extraction, BLSTM masking and
//! resynthesis from the reference microphone, buffer by buffer.

use serde::{Deserialize, Serialize};

use crate::array_sim::{generate_scene, ideal_masks, ArrayGeometry, Scene, SceneOptions};
use crate::audio::{StftPlan, TimeSignal};
use crate::beamformer::{process_stream, BeamformerConfig, BeamformerOutput};
use crate::blstm::{forward, preprocess, separate, vad_mask, NetworkConfig, NetworkWeights, Real, TrainingExample};
use crate::error::{Error, Result};

/// Settings shared by both stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub struct PipelineConfig {
    pub beamformer: BeamformerConfig,
    pub network: NetworkConfig,
}


impl PipelineConfig {
    /// Builds a consistent pair from the network settings, keeping the
    /// beamformer defaults for everything else.
    pub fn from_network(network: NetworkConfig) -> Self {
        Self {
            beamformer: BeamformerConfig {
                buffer_len: network.buffer_len,
                ..BeamformerConfig::default()
            },
            network,
        }
    }

    pub fn buffer_len(&self) -> usize {
        self.network.buffer_len
    }

    pub fn sample_rate(&self) -> u32 {
        self.beamformer.sample_rate
    }

    pub fn validate(&self) -> Result<()> {
        self.beamformer.validate()?;
        self.network.validate()?;
        if self.beamformer.buffer_len != self.network.buffer_len {
            return Err(Error::invalid(format!(
                "beamformer buffer {} differs from network input length {}",
                self.beamformer.buffer_len, self.network.buffer_len
            )));
        }
        Ok(())
    }
}

/// Separated output for one N_B buffer, with the intermediate beamformer
/// estimates kept for comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedBuffer {
    pub start: usize,
    pub soi: TimeSignal,
    pub interference: TimeSignal,
    pub beamformer: BeamformerOutput,
}

/// Whole-signal result of [`Separator::run`], trimmed to the input length.
#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    pub soi: TimeSignal,
    pub interference: TimeSignal,
    pub beamformer_soi: TimeSignal,
    pub beamformer_interference: TimeSignal,
    pub buffers: usize,
}

/// Inference-time pipeline around a fixed set of weights.
#[derive(Debug, Clone)]
pub struct Separator<A: Real = f32> {
    config: PipelineConfig,
    geometry: ArrayGeometry,
    weights: NetworkWeights<A>,
}

impl<A: Real> Separator<A> {
    pub fn new(config: PipelineConfig, geometry: ArrayGeometry, weights: NetworkWeights<A>) -> Result<Self> {
        config.validate()?;
        let net = &config.network;
        if weights.num_bins() != net.num_bins() {
            return Err(Error::shape(format!(
                "weights expect {} bins, the STFT window gives {}",
                weights.num_bins(),
                net.num_bins()
            )));
        }
        Ok(Self {
            config,
            geometry,
            weights,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn weights(&self) -> &NetworkWeights<A> {
        &self.weights
    }

    /// Second stage on one beamformer buffer.
    pub fn separate_buffer(&self, buffer: BeamformerOutput) -> Result<SeparatedBuffer> {
        let net = &self.config.network;
        let features = preprocess(&buffer.soi, &buffer.interference, net)?;
        let features = features.mapv(A::from_f64);
        let masks = forward(features.view(), &self.weights)?;
        let (soi, interference) = separate(&buffer.reference, &masks, net)?;
        Ok(SeparatedBuffer {
            start: buffer.start,
            soi,
            interference,
            beamformer: buffer,
        })
    }

    /// Separates whole microphone signals steered at `doa_deg`. The input is
    /// zero-padded to a whole number of buffers and the outputs are trimmed back.
    pub fn run(&self, mic_signals: &[TimeSignal], doa_deg: f64) -> Result<Separation> {
        let first = mic_signals
            .first()
            .ok_or_else(|| Error::invalid("no microphone signals"))?;
        let len = first.len();
        let rate = first.sample_rate();
        let nb = self.config.buffer_len();
        let padded_len = len.div_ceil(nb).max(1) * nb;
        let padded: Vec<TimeSignal> = mic_signals
            .iter()
            .map(|s| {
                let mut v = s.samples().to_vec();
                v.resize(padded_len, 0.0);
                TimeSignal::new(v, s.sample_rate())
            })
            .collect::<Result<_>>()?;
        let buffers = process_stream(&padded, doa_deg, &self.geometry, self.config.beamformer)?;

        let mut out = [vec![0.0; padded_len], vec![0.0; padded_len], vec![0.0; padded_len], vec![0.0; padded_len]];
        let count = buffers.len();
        for buffer in buffers {
            let sep = self.separate_buffer(buffer)?;
            let range = sep.start..sep.start + nb;
            out[0][range.clone()].copy_from_slice(sep.soi.samples());
            out[1][range.clone()].copy_from_slice(sep.interference.samples());
            out[2][range.clone()].copy_from_slice(sep.beamformer.soi.samples());
            out[3][range].copy_from_slice(sep.beamformer.interference.samples());
        }
        let [soi, interference, bf_soi, bf_int] = out.map(|mut v| {
            v.truncate(len);
            v
        });
        Ok(Separation {
            soi: TimeSignal::new(soi, rate)?,
            interference: TimeSignal::new(interference, rate)?,
            beamformer_soi: TimeSignal::new(bf_soi, rate)?,
            beamformer_interference: TimeSignal::new(bf_int, rate)?,
            buffers: count,
        })
    }
}

/// Turns a simulated scene into supervised examples, one per whole N_B
/// buffer: beamformer estimates steered at the SOI become the features, and
/// ideal masks computed from the clean sources over the same window the targets.
pub fn training_examples(scene: &Scene, config: &PipelineConfig) -> Result<Vec<TrainingExample>> {
    config.validate()?;
    let net = &config.network;
    let nb = net.buffer_len;
    if scene.reference().len() < nb {
        return Err(Error::invalid(format!(
            "scene has {} samples, training needs at least {nb}",
            scene.reference().len()
        )));
    }
    let plan = StftPlan::new(net.frame_len)?;
    let buffers = process_stream(&scene.mic_signals, scene.soi_doa(), &scene.geometry, config.beamformer)?;
    let rate = scene.reference().sample_rate();
    buffers
        .into_iter()
        .map(|buffer| {
            let features = preprocess(&buffer.soi, &buffer.interference, net)?;
            let soi = scene.soi().signal.slice(buffer.start, nb)?;
            let interference = scene
                .interferers()
                .into_iter()
                .map(|s| s.slice(buffer.start, nb))
                .collect::<Result<Vec<_>>>()?;
            let interference = if interference.is_empty() {
                TimeSignal::zeros(nb, rate)?
            } else {
                TimeSignal::sum(&interference)?
            };
            let (ideal_soi, ideal_int) = ideal_masks(&soi, &interference, &plan)?;
            let reference = plan.forward(&buffer.reference)?;
            TrainingExample::new(
                features,
                ideal_soi,
                ideal_int,
                reference.magnitudes(),
                vad_mask(&reference, net.vad_db),
            )
        })
        .collect()
}

/// Simulates `count` one-buffer scenes from `corpus` and converts them to
/// training examples. Scene `k` uses seed `seed + k`.
pub fn training_set(
    corpus: &[TimeSignal],
    geometry: &ArrayGeometry,
    num_sources: usize,
    count: usize,
    seed: u64,
    config: &PipelineConfig,
) -> Result<Vec<TrainingExample>> {
    let options = SceneOptions {
        frame_len: config.network.frame_len,
        ..SceneOptions::new(num_sources, config.buffer_len())
    };
    (0..count as u64)
        .map(|k| {
            let scene = generate_scene(corpus, &options, geometry, seed.wrapping_add(k))?;
            Ok(training_examples(&scene, config)?.remove(0))
        })
        .collect()
}
