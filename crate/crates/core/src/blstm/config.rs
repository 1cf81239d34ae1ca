use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Stacked BLSTM layers (L).
    pub layers: usize,
    /// Hidden units per direction (H).
    pub hidden: usize,
    /// Input length in samples (N_B).
    pub buffer_len: usize,
    /// STFT window (N_H); hop is half of it.
    pub frame_len: usize,
    /// VAD threshold below the window maximum, dB.
    pub vad_db: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Decay of the RMSProp squared-gradient average.
    pub rms_decay: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            layers: 3,
            hidden: 200,
            buffer_len: 16384,
            frame_len: 512,
            vad_db: 40.0,
            learning_rate: 1e-5,
            momentum: 0.9,
            rms_decay: 0.9,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::invalid("at least one BLSTM layer is required"));
        }
        if self.hidden == 0 {
            return Err(Error::invalid("hidden size must be at least 1"));
        }
        if self.frame_len < 2 || !self.frame_len.is_multiple_of(2) {
            return Err(Error::invalid(format!("STFT window must be even, got {}", self.frame_len)));
        }
        if self.buffer_len == 0 || !self.buffer_len.is_multiple_of(self.frame_len / 2) {
            return Err(Error::invalid(format!(
                "input length {} must be a positive multiple of the hop {}",
                self.buffer_len,
                self.frame_len / 2
            )));
        }
        if !(self.vad_db > 0.0) {
            return Err(Error::invalid("VAD threshold must be positive"));
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.momentum) || !(0.0..1.0).contains(&self.rms_decay) {
            return Err(Error::invalid("optimizer hyperparameters out of range"));
        }
        Ok(())
    }

    /// Frequency bins per side, F = N_H/2 + 1.
    pub fn num_bins(&self) -> usize {
        self.frame_len / 2 + 1
    }

    /// Frames per input window, T = N_B/(N_H/2) + 1.
    pub fn num_frames(&self) -> usize {
        self.buffer_len / (self.frame_len / 2) + 1
    }

    pub fn hop(&self) -> usize {
        self.frame_len / 2
    }
}
