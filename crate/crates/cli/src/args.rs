use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phasemask::beamformer::BeamformerConfig;
use phasemask::blstm::NetworkConfig;
use phasemask::pipeline::PipelineConfig;

#[derive(Debug, Parser)]
#[command(name = "phasemask", version, about = "Online two-stage source separation")]
pub struct Cli {
    /// Seed for every random choice made by the command.
    #[arg(long, global = true, env = "PHASEMASK_SEED", default_value_t = 0)]
    pub seed: u64,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate multichannel scenes and write them as WAV files.
    Simulate(SimulateArgs),
    /// Train the masking network on simulated scenes.
    Train(TrainArgs),
    /// Separate recorded microphone signals with a trained network.
    Separate(SeparateArgs),
    /// Run only the beamformer stage.
    Beamform(BeamformArgs),
    /// SIR sweeps over source count or array configuration.
    Evaluate(EvaluateArgs),
    /// Rank architectures by their memory/SIR trade-off.
    Rank(RankArgs),
}

#[derive(Debug, Clone, Args)]
pub struct NetworkArgs {
    /// Network input length in samples.
    #[arg(long, env = "PHASEMASK_NB", default_value_t = 16384)]
    pub nb: usize,
    /// STFT window of the network features, in samples.
    #[arg(long, env = "PHASEMASK_NH", default_value_t = 512)]
    pub nh: usize,
    #[arg(long, env = "PHASEMASK_LAYERS", default_value_t = 3)]
    pub layers: usize,
    /// Hidden units per direction.
    #[arg(long, env = "PHASEMASK_HIDDEN", default_value_t = 200)]
    pub hidden: usize,
    /// VAD threshold below the window maximum, in dB.
    #[arg(long, env = "PHASEMASK_VAD_DB", default_value_t = 40.0)]
    pub vad_db: f64,
    #[arg(long, env = "PHASEMASK_LR", default_value_t = 1e-5)]
    pub lr: f64,
    #[arg(long, env = "PHASEMASK_MOMENTUM", default_value_t = 0.9)]
    pub momentum: f64,
}

impl NetworkArgs {
    pub fn config(&self) -> NetworkConfig {
        NetworkConfig {
            layers: self.layers,
            hidden: self.hidden,
            buffer_len: self.nb,
            frame_len: self.nh,
            vad_db: self.vad_db,
            learning_rate: self.lr,
            momentum: self.momentum,
            ..NetworkConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ArrayArgs {
    /// Geometry file (`r theta` per line, first line `0 0`) or a family
    /// spec such as `linear:4` or `hexagon`.
    #[arg(long, env = "PHASEMASK_GEOMETRY", default_value = "linear:2")]
    pub geometry: String,
    /// Beamformer phase-difference threshold in degrees.
    #[arg(long, env = "PHASEMASK_PHIMAX", default_value_t = 60.0)]
    pub phimax: f64,
}

impl ArrayArgs {
    pub fn beamformer(&self, buffer_len: usize) -> BeamformerConfig {
        BeamformerConfig {
            buffer_len,
            phi_max: self.phimax * PI / 180.0,
            ..BeamformerConfig::default()
        }
    }

    pub fn pipeline(&self, network: NetworkConfig) -> PipelineConfig {
        PipelineConfig {
            beamformer: self.beamformer(network.buffer_len),
            network,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    Train,
    Validation,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Manifest of 16 kHz mono WAV files, one path per line.
    #[arg(long, env = "PHASEMASK_MANIFEST", conflicts_with = "synthetic")]
    pub manifest: Option<PathBuf>,
    /// Use this many generated speech-like clips instead of a manifest.
    #[arg(long, env = "PHASEMASK_SYNTHETIC")]
    pub synthetic: Option<usize>,
    /// Length of each generated clip in samples.
    #[arg(long, env = "PHASEMASK_CLIP_LEN", default_value_t = 48000)]
    pub clip_len: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub array: ArrayArgs,
    #[arg(long, value_enum, default_value_t = Split::Train)]
    pub split: Split,
    #[arg(long, default_value_t = 2)]
    pub sources: usize,
    /// Scene length in samples.
    #[arg(long, default_value_t = 16384)]
    pub length: usize,
    /// Number of scenes; scene k uses seed + k.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// STFT window for the ideal masks.
    #[arg(long, env = "PHASEMASK_NH", default_value_t = 512)]
    pub nh: usize,
    /// Draw DOAs on a 5-degree grid instead of 45-degree steps.
    #[arg(long)]
    pub continuous_doa: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub network: NetworkArgs,
    #[command(flatten)]
    pub array: ArrayArgs,
    /// Train on scene directories written by `simulate` instead of fresh simulations.
    #[arg(long, conflicts_with_all = ["manifest", "synthetic"])]
    pub scenes: Option<PathBuf>,
    /// Number of scenes to simulate.
    #[arg(long, default_value_t = 2000)]
    pub scene_count: usize,
    #[arg(long, default_value_t = 2)]
    pub sources: usize,
    #[arg(long, default_value_t = 2)]
    pub epochs: usize,
    #[arg(long, default_value_t = 16)]
    pub batch: usize,
    /// Stop after this many optimizer steps in total.
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Save a checkpoint every this many steps (0: once per epoch).
    #[arg(long, default_value_t = 0)]
    pub checkpoint_every: usize,
    /// Continue from a checkpoint; its network settings replace the flags.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SeparateArgs {
    /// One multichannel WAV, or one mono WAV per microphone in array order.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Direction of arrival of the source of interest, degrees in [-90, 90].
    #[arg(long, allow_hyphen_values = true, env = "PHASEMASK_DOA")]
    pub doa: f64,
    #[arg(long, env = "PHASEMASK_CHECKPOINT")]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub array: ArrayArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BeamformArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, allow_hyphen_values = true, env = "PHASEMASK_DOA")]
    pub doa: f64,
    #[command(flatten)]
    pub array: ArrayArgs,
    /// Output buffer length in samples.
    #[arg(long, env = "PHASEMASK_NB", default_value_t = 16384)]
    pub nb: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sweep {
    /// Vary the number of simultaneous sources.
    Sources,
    /// Vary the array family and microphone count.
    Arrays,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, env = "PHASEMASK_CHECKPOINT")]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value_t = Sweep::Sources)]
    pub sweep: Sweep,
    /// Source counts, as a range `2..5` or a list `2,3,4`.
    #[arg(long, default_value = "2..4")]
    pub counts: String,
    /// Array families for the array sweep.
    #[arg(long, value_delimiter = ',', default_value = "linear,triangle,square,pentagon,hexagon")]
    pub geometries: Vec<String>,
    /// Microphone counts for the linear family, as a range or list.
    #[arg(long, default_value = "2..8")]
    pub mics: String,
    /// Sources per scene in the array sweep.
    #[arg(long, default_value_t = 2)]
    pub sources: usize,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Scene length in samples (default: one network buffer).
    #[arg(long)]
    pub scene_len: Option<usize>,
    #[arg(long)]
    pub continuous_doa: bool,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub array: ArrayArgs,
    /// CSV output path (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// CSV with `config,label,mem_mb,sir_db` columns (default: bundled table).
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Upper memory limit of the score integral, MB.
    #[arg(long, env = "PHASEMASK_XMAX_MB", default_value_t = 512.0)]
    pub xmax_mb: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
