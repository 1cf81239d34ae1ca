//! Far-field, anechoic microphone-array simulation.

pub mod corpus;
mod geometry;
mod propagation;
mod scene;

pub use geometry::{ArrayGeometry, GeometryKind, MicPosition, DEFAULT_SPACING, SPEED_OF_SOUND};
pub use propagation::{delay_signal, farfield_delay, simulate_mixture};
pub use scene::{generate_scene, ideal_masks, Scene, SceneOptions, SceneSource, DOA_GRID};
