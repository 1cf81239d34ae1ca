use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use phasemask::array_sim::corpus::{load_corpus, read_manifest, split_train_validation, synthetic_corpus};
use phasemask::array_sim::{generate_scene, ArrayGeometry, GeometryKind, SceneOptions};
use phasemask::audio::{wav, TimeSignal, DEFAULT_SAMPLE_RATE};
use phasemask::beamformer::process_stream;
use phasemask::blstm::{load_checkpoint, save_checkpoint, Checkpoint, Trainer, TrainingExample};
use phasemask::eval::{
    rank_architectures, read_candidates, sweep_mics_and_geometry, sweep_sources, write_ranking, write_sweep,
    SweepRow, SweepSettings,
};
use phasemask::pipeline::{training_examples, training_set, PipelineConfig, Separator};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::args::{
    ArrayArgs, BeamformArgs, CorpusArgs, EvaluateArgs, RankArgs, SeparateArgs, SimulateArgs, Split, Sweep,
    TrainArgs,
};
use crate::scene_io;
use crate::UsageError;

const BUNDLED_TABLE: &str = include_str!("../data/table1.csv");
const DEFAULT_SYNTHETIC_CLIPS: usize = 200;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn snapshot(path: &Path, command: &str, seed: u64, body: serde_json::Value) -> Result<()> {
    let value = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "settings": body,
    });
    fs::write(path, serde_json::to_string_pretty(&value)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn parse_geometry(spec: &str) -> Result<ArrayGeometry> {
    let path = Path::new(spec);
    if path.is_file() {
        return Ok(ArrayGeometry::load(path)?);
    }
    let (family, mics) = match spec.split_once(':') {
        Some((f, m)) => (f, Some(m.parse::<usize>().map_err(|_| usage(format!("bad microphone count in '{spec}'")))?)),
        None => (spec, None),
    };
    let kind: GeometryKind = family
        .parse()
        .map_err(|_| usage(format!("'{spec}' is neither a geometry file nor a family spec")))?;
    let mics = match (kind.vertices(), mics) {
        (Some(v), Some(m)) if m != v => bail!(usage(format!("{kind} arrays have {v} microphones, not {m}"))),
        (Some(v), _) => v,
        (None, m) => m.unwrap_or(2),
    };
    Ok(kind.build(mics)?)
}

/// `2..5` (inclusive) or `2,3,5`.
fn parse_counts(spec: &str) -> Result<Vec<usize>> {
    let bad = || usage(format!("bad count list '{spec}'"));
    if let Some((a, b)) = spec.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    spec.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn load_sources(corpus: &CorpusArgs, split: Split, seed: u64) -> Result<Vec<TimeSignal>> {
    let all = match &corpus.manifest {
        Some(path) => {
            let paths = read_manifest(path)?;
            let (train, valid) = split_train_validation(&paths);
            let chosen = match split {
                Split::Train => train,
                Split::Validation => valid,
                Split::All => &paths[..],
            };
            return Ok(load_corpus(chosen, DEFAULT_SAMPLE_RATE)?);
        }
        None => synthetic_corpus(
            corpus.synthetic.unwrap_or(DEFAULT_SYNTHETIC_CLIPS),
            corpus.clip_len,
            DEFAULT_SAMPLE_RATE,
            seed,
        )?,
    };
    let (train, valid) = split_train_validation(&all);
    let chosen = match split {
        Split::Train => train,
        Split::Validation => valid,
        Split::All => &all[..],
    };
    if chosen.is_empty() {
        bail!(phasemask::Error::InvalidArgument("no sources available".into()));
    }
    Ok(chosen.to_vec())
}

fn corpus_json(c: &CorpusArgs) -> serde_json::Value {
    json!({
        "manifest": c.manifest,
        "synthetic": c.manifest.is_none().then(|| c.synthetic.unwrap_or(DEFAULT_SYNTHETIC_CLIPS)),
        "clip_len": c.clip_len,
    })
}

fn array_json(a: &ArrayArgs, geometry: &ArrayGeometry) -> serde_json::Value {
    json!({ "geometry": a.geometry, "mics": geometry.mics(), "phimax_deg": a.phimax })
}

pub fn simulate(args: SimulateArgs, seed: u64) -> Result<()> {
    let geometry = parse_geometry(&args.array.geometry)?;
    let corpus = load_sources(&args.corpus, args.split, seed)?;
    let options = SceneOptions {
        frame_len: args.nh,
        continuous_doa: args.continuous_doa,
        ..SceneOptions::new(args.sources, args.length)
    };
    create_dir(&args.out)?;
    for k in 0..args.count {
        let scene = generate_scene(&corpus, &options, &geometry, seed.wrapping_add(k as u64))?;
        scene_io::write_scene(&args.out.join(format!("scene_{k:04}")), &scene)?;
    }
    snapshot(
        &args.out.join("config.json"),
        "simulate",
        seed,
        json!({
            "corpus": corpus_json(&args.corpus),
            "split": format!("{:?}", args.split).to_lowercase(),
            "array": array_json(&args.array, &geometry),
            "sources": args.sources,
            "length": args.length,
            "count": args.count,
            "nh": args.nh,
            "continuous_doa": args.continuous_doa,
        }),
    )?;
    log::info!("wrote {} scene(s) to {}", args.count, args.out.display());
    Ok(())
}

fn save_atomically(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let tmp = path.with_extension("ckpt.tmp");
    save_checkpoint(&tmp, ckpt)?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))
}

pub fn train(args: TrainArgs, seed: u64) -> Result<()> {
    let geometry = parse_geometry(&args.array.geometry)?;
    if args.batch == 0 {
        return Err(usage("--batch must be positive"));
    }
    let mut trainer = match &args.resume {
        Some(path) => {
            if !path.is_file() {
                return Err(usage(format!("checkpoint {} does not exist", path.display())));
            }
            let ck = load_checkpoint(path)?;
            log::info!("resuming from {} at step {}", path.display(), ck.step);
            Trainer::resume(ck.config, ck.weights, ck.optimizer, ck.step)
        }
        None => {
            let net = args.network.config();
            net.validate()?;
            Trainer::new(net, &mut ChaCha8Rng::seed_from_u64(seed))?
        }
    };
    let config = args.array.pipeline(trainer.config);
    config.validate()?;

    let t0 = Instant::now();
    let examples: Vec<TrainingExample> = match &args.scenes {
        Some(root) => {
            let dirs = scene_io::scene_dirs(root)?;
            if dirs.is_empty() {
                bail!(phasemask::Error::InvalidArgument(format!("no scenes under {}", root.display())));
            }
            let mut out = Vec::new();
            for d in dirs {
                let scene = scene_io::read_scene(&d)?;
                let pcfg = PipelineConfig {
                    beamformer: config.beamformer,
                    network: trainer.config,
                };
                out.extend(training_examples(&scene, &pcfg)?);
            }
            out
        }
        None => {
            let corpus = load_sources(&args.corpus, Split::Train, seed)?;
            training_set(&corpus, &geometry, args.sources, args.scene_count, seed, &config)?
        }
    };
    log::info!("{} training examples ready in {:.1}s", examples.len(), t0.elapsed().as_secs_f64());

    create_dir(&args.out)?;
    let net = trainer.config;
    snapshot(
        &args.out.join("config.json"),
        "train",
        seed,
        json!({
            "network": net,
            "beamformer": config.beamformer,
            "corpus": corpus_json(&args.corpus),
            "scenes": args.scenes,
            "scene_count": args.scene_count,
            "sources": args.sources,
            "array": array_json(&args.array, &geometry),
            "epochs": args.epochs,
            "batch": args.batch,
            "max_steps": args.max_steps,
            "resume": args.resume,
            "examples": examples.len(),
        }),
    )?;

    let ckpt_path = args.out.join("model.ckpt");
    let log_path = args.out.join("train_log.csv");
    let mut log_file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)
        .with_context(|| format!("opening {}", log_path.display()))?;
    if log_file.metadata()?.len() == 0 {
        writeln!(log_file, "step,loss,wall_time_s")?;
    }
    let save = |trainer: &Trainer| {
        save_atomically(
            &ckpt_path,
            &Checkpoint {
                config: trainer.config,
                weights: trainer.weights.clone(),
                optimizer: Some(trainer.optimizer.clone()),
                step: trainer.step,
            },
        )
    };

    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trainer.step as u64));
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let limit = args.max_steps.unwrap_or(usize::MAX);
    'epochs: for epoch in 0..args.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(args.batch) {
            if trainer.step >= limit {
                break 'epochs;
            }
            let batch: Vec<&TrainingExample> = chunk.iter().map(|&i| &examples[i]).collect();
            let loss = trainer
                .train_batch(&batch)
                .context("training aborted; the last saved checkpoint is intact")?;
            writeln!(log_file, "{},{loss},{:.3}", trainer.step, start.elapsed().as_secs_f64())?;
            epoch_loss += loss;
            batches += 1;
            if args.checkpoint_every > 0 && trainer.step % args.checkpoint_every == 0 {
                save(&trainer)?;
            }
        }
        log::info!(
            "epoch {epoch}: mean loss {:.4} at step {}",
            epoch_loss / batches.max(1) as f64,
            trainer.step
        );
        save(&trainer)?;
    }
    save(&trainer)?;
    log::info!("checkpoint at step {} written to {}", trainer.step, ckpt_path.display());
    Ok(())
}

fn read_inputs(inputs: &[PathBuf], geometry: &ArrayGeometry) -> Result<Vec<TimeSignal>> {
    let mut channels = Vec::new();
    for p in inputs {
        channels.extend(wav::read_wav(p)?);
    }
    if channels.len() != geometry.num_mics() {
        bail!(phasemask::Error::InvalidArgument(format!(
            "{} input channels for a {}-microphone geometry",
            channels.len(),
            geometry.num_mics()
        )));
    }
    if let Some(bad) = channels.iter().find(|c| c.sample_rate() != DEFAULT_SAMPLE_RATE) {
        bail!(phasemask::Error::Data {
            path: inputs[0].clone(),
            message: format!("sample rate {} Hz, expected {DEFAULT_SAMPLE_RATE} Hz", bad.sample_rate()),
        });
    }
    let len = channels[0].len();
    if channels.iter().any(|c| c.len() != len) {
        bail!(phasemask::Error::Data {
            path: inputs[0].clone(),
            message: "input channels differ in length".into(),
        });
    }
    Ok(channels)
}

fn check_doa(doa: f64) -> Result<()> {
    if !(-90.0..=90.0).contains(&doa) {
        bail!(phasemask::Error::InvalidArgument(format!("DOA {doa} lies outside [-90, 90] degrees")));
    }
    Ok(())
}

pub fn separate(args: SeparateArgs, seed: u64) -> Result<()> {
    check_doa(args.doa)?;
    if !args.checkpoint.is_file() {
        return Err(usage(format!("checkpoint {} does not exist", args.checkpoint.display())));
    }
    let geometry = parse_geometry(&args.array.geometry)?;
    let ck = load_checkpoint(&args.checkpoint)?;
    let config = args.array.pipeline(ck.config);
    let mics = read_inputs(&args.inputs, &geometry)?;
    let separator = Separator::new(config, geometry.clone(), ck.weights.cast::<f32>())?;

    let t0 = Instant::now();
    let out = separator.run(&mics, args.doa)?;
    let elapsed = t0.elapsed().as_secs_f64();

    create_dir(&args.out)?;
    wav::write_wav(args.out.join("y_soi.wav"), &[&out.soi])?;
    wav::write_wav(args.out.join("y_int.wav"), &[&out.interference])?;
    let buffer_secs = config.buffer_len() as f64 / config.sample_rate() as f64;
    let per_buffer = elapsed / out.buffers.max(1) as f64;
    let timing = json!({
        "note": "wall-clock measurements; not deterministic",
        "buffers": out.buffers,
        "total_seconds": elapsed,
        "seconds_per_buffer": per_buffer,
        "buffer_seconds": buffer_secs,
        "realtime_factor": per_buffer / buffer_secs,
    });
    fs::write(args.out.join("timing.json"), serde_json::to_string_pretty(&timing)? + "\n")?;
    snapshot(
        &args.out.join("config.json"),
        "separate",
        seed,
        json!({
            "inputs": args.inputs,
            "doa_deg": args.doa,
            "checkpoint": args.checkpoint,
            "checkpoint_step": ck.step,
            "network": ck.config,
            "beamformer": config.beamformer,
            "array": array_json(&args.array, &geometry),
        }),
    )?;
    log::info!(
        "separated {} buffer(s), realtime factor {:.3}",
        out.buffers,
        per_buffer / buffer_secs
    );
    Ok(())
}

pub fn beamform(args: BeamformArgs, seed: u64) -> Result<()> {
    check_doa(args.doa)?;
    let geometry = parse_geometry(&args.array.geometry)?;
    let cfg = args.array.beamformer(args.nb);
    cfg.validate()?;
    let mics = read_inputs(&args.inputs, &geometry)?;
    let len = mics[0].len();
    let padded_len = len.div_ceil(args.nb).max(1) * args.nb;
    let padded = mics
        .iter()
        .map(|s| {
            let mut v = s.samples().to_vec();
            v.resize(padded_len, 0.0);
            TimeSignal::new(v, s.sample_rate())
        })
        .collect::<phasemask::Result<Vec<_>>>()?;
    let buffers = process_stream(&padded, args.doa, &geometry, cfg)?;
    let collect = |pick: fn(&phasemask::beamformer::BeamformerOutput) -> &TimeSignal| -> Result<TimeSignal> {
        let mut v: Vec<f64> = buffers.iter().flat_map(|b| pick(b).samples().to_vec()).collect();
        v.truncate(len);
        Ok(TimeSignal::new(v, DEFAULT_SAMPLE_RATE)?)
    };
    let z_soi = collect(|b| &b.soi)?;
    let z_int = collect(|b| &b.interference)?;
    create_dir(&args.out)?;
    wav::write_wav(args.out.join("z_soi.wav"), &[&z_soi])?;
    wav::write_wav(args.out.join("z_int.wav"), &[&z_int])?;
    snapshot(
        &args.out.join("config.json"),
        "beamform",
        seed,
        json!({
            "inputs": args.inputs,
            "doa_deg": args.doa,
            "beamformer": cfg,
            "array": array_json(&args.array, &geometry),
        }),
    )?;
    Ok(())
}

fn snapshot_beside(out: &Option<PathBuf>, command: &str, seed: u64, body: serde_json::Value) -> Result<()> {
    if let Some(path) = out {
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(".config.json");
        snapshot(&path.with_file_name(name), command, seed, body)?;
    }
    Ok(())
}

fn open_output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                create_dir(dir)?;
            }
            Box::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?)
        }
        None => Box::new(std::io::stdout()),
    })
}

fn summarize(rows: &[SweepRow]) {
    let mut params: Vec<&str> = Vec::new();
    for r in rows {
        if !params.contains(&r.param.as_str()) {
            params.push(&r.param);
        }
    }
    for p in params {
        let sel: Vec<&SweepRow> = rows.iter().filter(|r| r.param == p).collect();
        let n = sel.len() as f64;
        log::info!(
            "{p}: output {:.2} dB, beamformer {:.2} dB over {} trial(s)",
            sel.iter().map(|r| r.sir_db).sum::<f64>() / n,
            sel.iter().map(|r| r.sir_beamformer_db).sum::<f64>() / n,
            sel.len()
        );
    }
}

pub fn evaluate(args: EvaluateArgs, seed: u64) -> Result<()> {
    if !args.checkpoint.is_file() {
        return Err(usage(format!("checkpoint {} does not exist", args.checkpoint.display())));
    }
    let ck = load_checkpoint(&args.checkpoint)?;
    let config = args.array.pipeline(ck.config);
    let weights = ck.weights.cast::<f32>();
    let corpus = load_sources(&args.corpus, Split::Validation, seed)?;
    let settings = SweepSettings {
        continuous_doa: args.continuous_doa,
        ..SweepSettings::new(args.trials, seed, args.scene_len.unwrap_or(ck.config.buffer_len))
    };
    let rows = match args.sweep {
        Sweep::Sources => {
            let geometry = parse_geometry(&args.array.geometry)?;
            let separator = Separator::new(config, geometry, weights)?;
            sweep_sources(&separator, &corpus, &parse_counts(&args.counts)?, &settings)?
        }
        Sweep::Arrays => {
            let kinds = args
                .geometries
                .iter()
                .map(|g| g.parse::<GeometryKind>().map_err(|e| usage(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            let mics = parse_counts(&args.mics)?;
            sweep_mics_and_geometry(&weights, &config, &kinds, &mics, &corpus, args.sources, &settings)?
        }
    };
    summarize(&rows);
    write_sweep(open_output(&args.out)?, &rows)?;
    snapshot_beside(
        &args.out,
        "evaluate",
        seed,
        json!({
            "checkpoint": args.checkpoint,
            "network": ck.config,
            "beamformer": config.beamformer,
            "sweep": format!("{:?}", args.sweep).to_lowercase(),
            "counts": args.counts,
            "geometries": args.geometries,
            "mics": args.mics,
            "sources": args.sources,
            "settings": settings,
            "corpus": corpus_json(&args.corpus),
            "geometry": args.array.geometry,
            "phimax_deg": args.array.phimax,
        }),
    )
}

pub fn rank(args: RankArgs, seed: u64) -> Result<()> {
    let candidates = match &args.table {
        Some(path) => {
            let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            read_candidates(file).map_err(|e| match e {
                phasemask::Error::Data { message, .. } => phasemask::Error::Data {
                    path: path.clone(),
                    message,
                },
                other => other,
            })?
        }
        None => read_candidates(BUNDLED_TABLE.as_bytes())?,
    };
    let ranked = rank_architectures(candidates, args.xmax_mb)?;
    write_ranking(open_output(&args.out)?, &ranked)?;
    snapshot_beside(
        &args.out,
        "rank",
        seed,
        json!({ "table": args.table, "xmax_mb": args.xmax_mb }),
    )
}
