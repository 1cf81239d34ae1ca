use super::network::MaskPair;
use super::weights::{parameter_count, Real};
use super::NetworkConfig;
use crate::audio::{StftPlan, TimeSignal};
use crate::error::{Error, Result};

/// Applies the network's masks to the reference-microphone spectrogram and
/// resynthesizes both outputs. Masked bins are zeroed; the reference phase is kept.
pub fn separate<A: Real>(
    reference: &TimeSignal,
    masks: &MaskPair<A>,
    cfg: &NetworkConfig,
) -> Result<(TimeSignal, TimeSignal)> {
    if reference.len() != cfg.buffer_len {
        return Err(Error::invalid(format!(
            "reference has {} samples, expected {}",
            reference.len(),
            cfg.buffer_len
        )));
    }
    let plan = StftPlan::new(cfg.frame_len)?;
    let spec = plan.forward(reference)?;
    let soi = plan.inverse(&spec.masked(&masks.soi)?)?;
    let int = plan.inverse(&spec.masked(&masks.int)?)?;
    Ok((soi, int))
}

/// Parameter storage of a network in MB (1e6 bytes) at 32-bit precision.
pub fn estimate_memory(cfg: &NetworkConfig) -> f64 {
    parameter_count(cfg.layers, cfg.hidden, cfg.num_bins()) as f64 * 4.0 / 1e6
}
