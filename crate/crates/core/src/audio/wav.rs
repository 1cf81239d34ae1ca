//! 16-bit PCM WAV reading and writing. Anything else is rejected.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::TimeSignal;
use crate::error::{Error, Result};

/// Reads every channel of a 16-bit PCM WAV file.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Vec<TimeSignal>> {
    let path = path.as_ref();
    let mut reader = WavReader::open(path).map_err(|e| Error::data(path, e.to_string()))?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::data(
            path,
            format!(
                "unsupported WAV encoding ({:?}, {} bits); expected 16-bit PCM",
                spec.sample_format, spec.bits_per_sample
            ),
        ));
    }
    let channels = spec.channels as usize;
    let mut data = vec![Vec::new(); channels];
    for (i, s) in reader.samples::<i16>().enumerate() {
        let s = s.map_err(|e| Error::data(path, e.to_string()))?;
        data[i % channels].push(s as f64 / 32768.0);
    }
    data.into_iter()
        .map(|ch| TimeSignal::new(ch, spec.sample_rate).map_err(|e| Error::data(path, e.to_string())))
        .collect()
}

/// Reads a mono file and checks its sample rate.
pub fn read_mono(path: impl AsRef<Path>, sample_rate: u32) -> Result<TimeSignal> {
    let path = path.as_ref();
    let mut channels = read_wav(path)?;
    if channels.len() != 1 {
        return Err(Error::data(path, format!("expected mono, found {} channels", channels.len())));
    }
    let signal = channels.remove(0);
    if signal.sample_rate() != sample_rate {
        return Err(Error::data(
            path,
            format!("sample rate {} Hz, expected {sample_rate} Hz", signal.sample_rate()),
        ));
    }
    Ok(signal)
}

/// Writes equal-length channels as interleaved 16-bit PCM. Samples outside
/// [-1, 1) are clipped.
pub fn write_wav(path: impl AsRef<Path>, channels: &[&TimeSignal]) -> Result<()> {
    let path = path.as_ref();
    let first = channels
        .first()
        .ok_or_else(|| Error::invalid("no channels to write"))?;
    for ch in &channels[1..] {
        first.check_compatible(ch)?;
    }
    let spec = WavSpec {
        channels: channels.len() as u16,
        sample_rate: first.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let to_io = |e: hound::Error| Error::data(path, e.to_string());
    let mut writer = WavWriter::create(path, spec).map_err(to_io)?;
    for i in 0..first.len() {
        for ch in channels {
            let v = (ch.samples()[i] * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
            writer.write_sample(v).map_err(to_io)?;
        }
    }
    writer.finalize().map_err(to_io)
}
