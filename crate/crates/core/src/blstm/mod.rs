//! Stage two: a stacked bidirectional LSTM that classifies every
//! time-frequency bin as belonging to the source of interest or to the
//! cumulative interference, trained with a VAD-gated magnitude spectrum
//! approximation loss.

mod checkpoint;
mod config;
mod loss;
mod lstm;
mod network;
mod optim;
mod separate;
mod train;
mod weights;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::NetworkConfig;
pub use loss::{msa_loss, msa_loss_grad, vad_mask};
pub use network::{forward, loss_and_gradient, MaskPair};
pub use optim::RmsProp;
pub use separate::{estimate_memory, separate};
pub use train::{preprocess, TrainingExample, Trainer};
pub use weights::{parameter_count, LstmParams, NetworkWeights, Real};
