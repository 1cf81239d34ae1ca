//! Separation quality (SIR), architecture selection, latency and the
//! parameter sweeps over source count, microphone count and geometry.

mod arch;
mod latency;
mod sir;
mod sweep;

pub use arch::{
    arch_score, rank_architectures, read_candidates, table1_candidates, write_ranking, ArchCandidate, RankedArch,
    DEFAULT_XMAX_MB,
};
pub use latency::{latency_check, LatencyReport};
pub use sir::{sir, SirResult, SIR_CAP_DB};
pub use sweep::{
    evaluate_scene, sweep_mics_and_geometry, sweep_sources, write_sweep, SceneScore, SweepRow, SweepSettings,
};
