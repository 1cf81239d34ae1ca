//! Signal containers and the time-frequency plumbing shared by both stages.

mod features;
mod signal;
mod stft;
pub mod wav;

pub use features::{standardize, to_db, FeatureMatrix, DB_FLOOR};
pub use signal::{TimeSignal, DEFAULT_SAMPLE_RATE};
pub use stft::{hann_periodic, istft, stft, Spectrogram, StftPlan};
