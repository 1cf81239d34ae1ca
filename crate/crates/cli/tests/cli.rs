use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use phasemask::audio::wav;

fn phasemask(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasemask"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = phasemask(args);
    assert!(
        out.status.success(),
        "phasemask {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(out: &Path, seed: &str, extra: &[&str]) {
    let mut args = vec![
        "--seed", seed, "simulate", "--synthetic", "6", "--clip-len", "12000", "--length", "8192", "--out",
        s(out),
    ];
    args.extend_from_slice(extra);
    ok(&args);
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

/// A tiny model trained for a few steps on 4096-sample buffers.
fn toy_model(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "--seed", "3", "train", "--synthetic", "10", "--clip-len", "8000", "--scene-count", "20", "--nb",
        "4096", "--layers", "1", "--hidden", "16", "--lr", "1e-3", "--batch", "4", "--epochs", "10",
        "--out", s(out),
    ];
    args.extend_from_slice(extra);
    ok(&args)
}

fn log_steps(dir: &Path) -> Vec<usize> {
    fs::read_to_string(dir.join("train_log.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect()
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    simulate(&a, "7", &[]);
    simulate(&b, "7", &[]);
    let scene_a = a.join("scene_0000");
    let scene_b = b.join("scene_0000");
    let names: Vec<_> = files(&scene_a).iter().map(|p| p.file_name().unwrap().to_owned()).collect();
    assert!(!names.is_empty());
    for name in names {
        assert_eq!(fs::read(scene_a.join(&name)).unwrap(), fs::read(scene_b.join(&name)).unwrap(), "{name:?}");
    }

    let c = dir.path().join("c");
    simulate(&c, "8", &[]);
    assert_ne!(
        fs::read(scene_a.join("mic_0.wav")).unwrap(),
        fs::read(c.join("scene_0000/mic_0.wav")).unwrap()
    );
}

#[test]
fn simulate_writes_one_file_per_mic_and_source() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "1", &["--sources", "3", "--geometry", "linear:2"]);
    let names: Vec<String> = files(&dir.path().join("scene_0000"))
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.iter().filter(|n| n.starts_with("mic_")).count(), 2);
    assert_eq!(names.iter().filter(|n| n.starts_with("source_")).count(), 3);
    assert!(dir.path().join("config.json").is_file());
    let mic = wav::read_mono(dir.path().join("scene_0000/mic_1.wav"), 16000).unwrap();
    assert_eq!(mic.len(), 8192);
}

#[test]
fn empty_manifest_has_no_sources() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("list.txt");
    fs::write(&manifest, "# nothing here\n").unwrap();
    let out = phasemask(&["simulate", "--manifest", s(&manifest), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no sources available"));
}

#[test]
fn train_resume_separate() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    toy_model(&run, &["--max-steps", "30"]);
    let ckpt = run.join("model.ckpt");
    let first = phasemask::blstm::load_checkpoint(&ckpt).unwrap();
    assert_eq!(first.step, 30);
    assert_eq!((first.config.layers, first.config.hidden, first.config.buffer_len), (1, 16, 4096));
    assert!(first.weights.all_finite());
    assert_eq!(log_steps(&run), (1..=30).collect::<Vec<_>>());

    toy_model(&run, &["--max-steps", "50", "--resume", s(&ckpt)]);
    let resumed = phasemask::blstm::load_checkpoint(&ckpt).unwrap();
    assert_eq!(resumed.step, 50);
    assert_ne!(resumed.weights, first.weights);
    assert_eq!(log_steps(&run), (1..=50).collect::<Vec<_>>());

    // separation of a simulated two-mic recording
    let scenes = dir.path().join("scenes");
    simulate(&scenes, "11", &[]);
    let mic0 = scenes.join("scene_0000/mic_0.wav");
    let mic1 = scenes.join("scene_0000/mic_1.wav");
    let sep = dir.path().join("sep");
    ok(&["separate", s(&mic0), s(&mic1), "--doa", "-45", "--checkpoint", s(&ckpt), "--out", s(&sep)]);
    let reference = wav::read_mono(&mic0, 16000).unwrap();
    let y_soi = wav::read_mono(sep.join("y_soi.wav"), 16000).unwrap();
    let y_int = wav::read_mono(sep.join("y_int.wav"), 16000).unwrap();
    assert_eq!(y_soi.len(), reference.len());
    let peak = reference.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = reference
        .samples()
        .iter()
        .zip(y_soi.samples().iter().zip(y_int.samples()))
        .map(|(r, (a, b))| (r - a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-3 * peak.max(1e-3), "reconstruction error {worst}");
    let timing: serde_json::Value = serde_json::from_str(&fs::read_to_string(sep.join("timing.json")).unwrap()).unwrap();
    assert_eq!(timing["buffers"], 2);

    // silence in, silence out
    let silent = dir.path().join("silent.wav");
    let zeros = phasemask::audio::TimeSignal::new(vec![0.0; 5000], 16000).unwrap();
    wav::write_wav(&silent, &[&zeros, &zeros]).unwrap();
    let quiet = dir.path().join("quiet");
    ok(&["separate", s(&silent), "--doa", "0", "--checkpoint", s(&ckpt), "--out", s(&quiet)]);
    for name in ["y_soi.wav", "y_int.wav"] {
        let y = wav::read_mono(quiet.join(name), 16000).unwrap();
        assert_eq!(y.len(), 5000);
        assert!(y.samples().iter().all(|&v| v == 0.0));
    }

    // out-of-range DOA
    let bad = phasemask(&["separate", s(&mic0), s(&mic1), "--doa", "120", "--checkpoint", s(&ckpt), "--out", s(&sep)]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("DOA"));

    // evaluation: one row per (count, trial)
    let csv = dir.path().join("eval/sir.csv");
    ok(&[
        "evaluate", "--checkpoint", s(&ckpt), "--counts", "2..5", "--trials", "2", "--synthetic", "30",
        "--clip-len", "8000", "--out", s(&csv),
    ]);
    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(text.lines().next().unwrap(), "sweep,param,trial,seed,sir_db,sir_beamformer_db");
    assert_eq!(rows.len(), 4 * 2);
    for count in 2..=5 {
        for trial in 0..2 {
            let hits = rows
                .iter()
                .filter(|r| r[1].ends_with(&count.to_string()) && r[2] == trial.to_string())
                .count();
            assert_eq!(hits, 1, "count {count} trial {trial}");
        }
    }
    assert!(rows.iter().all(|r| r[4].parse::<f64>().unwrap().is_finite()));
    assert!(dir.path().join("eval/sir.csv.config.json").is_file());
}

#[test]
fn missing_checkpoint_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let wav_path = dir.path().join("x.wav");
    let zeros = phasemask::audio::TimeSignal::new(vec![0.0; 100], 16000).unwrap();
    wav::write_wav(&wav_path, &[&zeros, &zeros]).unwrap();
    let missing = dir.path().join("none.ckpt");
    let out = phasemask(&["separate", s(&wav_path), "--doa", "0", "--checkpoint", s(&missing), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let out = phasemask(&["evaluate", "--checkpoint", s(&missing)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn corrupt_checkpoint_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("bad.ckpt");
    fs::write(&ckpt, b"not a checkpoint").unwrap();
    let out = phasemask(&["evaluate", "--checkpoint", s(&ckpt)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rank_bundled_table() {
    let out = ok(&["rank"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "config,label,mem_mb,sir_db,score");
    assert!(lines.next().unwrap().starts_with("nb=16384 h=200 l=3,recommended,38,24.66,12157.38"));
    assert!(lines.next().unwrap().starts_with("nb=8192 h=300 l=3,alternative,76,23.67,11219.58"));
    assert_eq!(lines.count(), 18);
}

#[test]
fn beamform_splits_the_reference() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "5", &[]);
    let scene = dir.path().join("scene_0000");
    let out = dir.path().join("bf");
    ok(&[
        "beamform", s(&scene.join("mic_0.wav")), s(&scene.join("mic_1.wav")), "--doa", "45", "--nb", "4096",
        "--out", s(&out),
    ]);
    let z_soi = wav::read_mono(out.join("z_soi.wav"), 16000).unwrap();
    let z_int = wav::read_mono(out.join("z_int.wav"), 16000).unwrap();
    assert_eq!((z_soi.len(), z_int.len()), (8192, 8192));
    assert!(z_soi.energy() > 0.0 && z_int.energy() > 0.0);
}

#[test]
fn bad_flags_exit_with_usage_code() {
    assert_eq!(phasemask(&["simulate"]).status.code(), Some(1));
    assert_eq!(phasemask(&["rank", "--xmax-mb", "abc"]).status.code(), Some(1));
    assert_eq!(phasemask(&["--help"]).status.code(), Some(0));
}
