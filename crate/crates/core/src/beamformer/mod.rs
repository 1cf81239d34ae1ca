//! Stage one: phase-based frequency-masking beamformer.
//!
//! Each N-sample frame of the array is Fourier transformed, phase-aligned
//! toward the known DOA of the source of interest, and split into two
//! complementary frequency masks by thresholding the mean pairwise phase
//! difference across microphones. Both masks are applied to the reference
//! microphone, giving an estimate of the SOI and of everything else.

mod spectra;
mod stream;

pub use spectra::{
    apply_masks, make_masks, mean_pairwise_phase_diff, phase_align, wrap_phase, FrequencyMaskPair,
    MultichannelSpectra,
};
pub use stream::{process_stream, BeamformerConfig, BeamformerOutput, BeamformerStream};
