use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const QUICK: &str = r#"
keyframes = 6

[synth]
subjects = 3
samples_per_subject = 4
frame_size = 32
min_frames = 4
max_frames = 6
audio_seconds = 0.5

[level1]
learning_rate = 1e-3
batch_size = 16
max_epochs = 2
patience = 10
min_delta = 1e-4

[level2]
learning_rate = 1e-3
batch_size = 1
max_epochs = 2
patience = 10
min_delta = 1e-4
"#;

fn neopain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neopain"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn quick_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("quick.toml");
    fs::write(&path, format!("{QUICK}{extra}")).unwrap();
    path.display().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(neopain(&["synth", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        neopain(&["train", "--indicator", "smell", "--manifest", "m.csv", "--out", "x"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn missing_config_file_fails() {
    let out = neopain(&["--config", "/nonexistent/run.toml", "synth", "--out", "/tmp/unused"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn training_sound_without_audio_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), "");
    let data = dir.path().join("data");
    let text = fs::read_to_string(&cfg)
        .unwrap()
        .replace("audio_seconds = 0.5", "audio_seconds = 0.5\naudio_missing = 1.0");
    fs::write(&cfg, text).unwrap();
    assert!(neopain(&["--config", &cfg, "synth", "--out", s(&data)])
        .status
        .success());
    let out = neopain(&[
        "--config",
        &cfg,
        "train",
        "--indicator",
        "sound",
        "--manifest",
        s(&data.join("manifest.csv")),
        "--out",
        s(&dir.path().join("models")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sound"));
}

#[test]
fn synth_train_eval_report_round() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), "");
    let data = dir.path().join("data");
    let manifest = data.join("manifest.csv");
    assert!(neopain(&["--config", &cfg, "synth", "--out", s(&data)])
        .status
        .success());

    let train = |out: &Path| {
        neopain(&[
            "--config",
            &cfg,
            "--seed",
            "7",
            "train",
            "--indicator",
            "sound",
            "--manifest",
            s(&manifest),
            "--out",
            s(out),
        ])
    };
    let (m1, m2) = (dir.path().join("m1"), dir.path().join("m2"));
    assert!(train(&m1).status.success());
    assert!(train(&m2).status.success());
    let preds = |m: &Path| fs::read(m.join("sound").join("predictions.json")).unwrap();
    assert_eq!(preds(&m1), preds(&m2));
    let fold = fs::read_dir(m1.join("sound").join("spectrogram-vgg"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    assert!(fold.join("model.ckpt").is_file());
    assert!(fold.join("training_curve.csv").is_file());

    let eval = dir.path().join("eval");
    let out = neopain(&[
        "--seed",
        "7",
        "eval",
        "--experiment",
        "unimodal",
        "--models",
        s(&m1),
        "--out",
        s(&eval),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(eval.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["reports"].as_array().unwrap().len(), 4);
    assert!(fs::read_to_string(eval.join("roc.svg")).unwrap().starts_with("<svg"));

    let plots = dir.path().join("plots");
    assert!(
        neopain(&["report", "--input", s(&eval.join("report.json")), "--out", s(&plots)])
            .status
            .success()
    );
    assert_eq!(
        fs::read(plots.join("roc.csv")).unwrap(),
        fs::read(eval.join("roc.csv")).unwrap()
    );
}
