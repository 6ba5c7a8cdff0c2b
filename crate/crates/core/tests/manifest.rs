use std::fs;
use std::path::Path;

use neopain::manifest::Manifest;
use neopain::synth::{generate_synthetic, SynthConfig};
use neopain::Error;

fn dataset(dir: &Path) -> Manifest {
    let cfg = SynthConfig {
        subjects: 2,
        samples_per_subject: 3,
        min_frames: 4,
        max_frames: 4,
        frame_size: 32,
        audio_seconds: 0.25,
        audio_missing: 0.0,
        ..SynthConfig::default()
    };
    generate_synthetic(&cfg, 3, dir).unwrap()
}

fn rewrite(dir: &Path, edit: impl Fn(String) -> String) -> Result<Manifest, Error> {
    let path = dir.join("manifest.csv");
    let text = fs::read_to_string(&path).unwrap();
    let edited = dir.join("edited.csv");
    fs::write(&edited, edit(text)).unwrap();
    Manifest::load(edited)
}

#[test]
fn csv_and_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = dataset(dir.path());
    m.save(dir.path().join("copy.json")).unwrap();
    let j = Manifest::load(dir.path().join("copy.json")).unwrap();
    assert_eq!(j.samples, m.samples);
    j.save(dir.path().join("copy.csv")).unwrap();
    let c = Manifest::load(dir.path().join("copy.csv")).unwrap();
    assert_eq!(c.samples, m.samples);
}

#[test]
fn duplicate_sample_id_is_rejected_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path());
    let err = rewrite(dir.path(), |t| t.replacen("s00-001", "s00-000", 1)).unwrap_err();
    match err {
        Error::Manifest { line, message, .. } => {
            assert_eq!(line, 3);
            assert!(message.contains("duplicate"), "{message}");
        }
        e => panic!("unexpected error {e}"),
    }
}

#[test]
fn total_must_match_components() {
    let dir = tempfile::tempdir().unwrap();
    let m = dataset(dir.path());
    let mut bad = m.clone();
    bad.samples[0].total += 1;
    bad.save(dir.path().join("bad.csv")).unwrap();
    let err = Manifest::load(dir.path().join("bad.csv")).unwrap_err();
    assert!(err.to_string().contains("components sum"), "{err}");
}

#[test]
fn missing_frames_dir_is_an_error_but_missing_audio_is_absent() {
    let dir = tempfile::tempdir().unwrap();
    let m = dataset(dir.path());
    let mut no_audio = m.clone();
    no_audio.samples[0].audio_path = None;
    no_audio.save(dir.path().join("no_audio.csv")).unwrap();
    let loaded = Manifest::load(dir.path().join("no_audio.csv")).unwrap();
    assert!(loaded.audio_path(&loaded.samples[0]).is_none());

    let mut gone = m.clone();
    gone.samples[1].frames_dir = "frames/nowhere".into();
    gone.save(dir.path().join("gone.csv")).unwrap();
    assert!(Manifest::load(dir.path().join("gone.csv")).is_err());
}
