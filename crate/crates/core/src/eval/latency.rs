use std::time::Instant;

use serde::Serialize;

use crate::array_sim::Scene;
use crate::beamformer::process_stream;
use crate::blstm::Real;
use crate::error::{Error, Result};
use crate::pipeline::Separator;

/// Wall-clock cost of one buffer. Timing fields vary between runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyReport {
    pub seconds_per_buffer: f64,
    pub buffer_secs: f64,
    /// Processing time over buffer duration; below 1 keeps up with input.
    pub realtime_factor: f64,
}

/// Times the first N_B samples of `scene` through beamformer, network and
/// resynthesis. Reports the median of `repeats` runs after one warm-up.
pub fn latency_check<A: Real>(separator: &Separator<A>, scene: &Scene, repeats: usize) -> Result<LatencyReport> {
    let cfg = separator.config();
    let nb = cfg.buffer_len();
    if scene.reference().len() < nb {
        return Err(Error::invalid(format!(
            "scene has {} samples, one buffer needs {nb}",
            scene.reference().len()
        )));
    }
    let mics = scene
        .mic_signals
        .iter()
        .map(|s| s.slice(0, nb))
        .collect::<Result<Vec<_>>>()?;
    let run = || -> Result<f64> {
        let t0 = Instant::now();
        let buffers = process_stream(&mics, scene.soi_doa(), separator.geometry(), cfg.beamformer)?;
        for b in buffers {
            separator.separate_buffer(b)?;
        }
        Ok(t0.elapsed().as_secs_f64())
    };
    run()?;
    let mut times = (0..repeats.max(1)).map(|_| run()).collect::<Result<Vec<_>>>()?;
    times.sort_by(f64::total_cmp);
    let seconds_per_buffer = times[times.len() / 2];
    let buffer_secs = nb as f64 / cfg.sample_rate() as f64;
    Ok(LatencyReport {
        seconds_per_buffer,
        buffer_secs,
        realtime_factor: seconds_per_buffer / buffer_secs,
    })
}
