//! Dataset manifest: one row per segment, CSV with a header or JSON.
//!
//! CSV columns:
//!
//! | column | meaning |
//! |---|---|
//! | `sample_id` | unique segment id |
//! | `subject_id` | infant id, used for leave-one-subject-out |
//! | `scale` | `NIPS` or `NPASS` |
//! | `frames_dir` | directory of frame images, sorted by file name |
//! | `face_roi`, `body_roi` | empty (absent), `full`, `x:y:w:h`, or one box per frame joined by `\|` |
//! | `audio_path` | WAV or raw `f32` file; empty when the audio is missing |
//! | `face_score`, `body_score`, `sound_score` | indicator scores; empty when unknown |
//! | `components` | scale components joined by `;` (may be empty) |
//! | `total` | total scale score |
//!
//! Paths are relative to the manifest's directory. The JSON form is
//! `{"samples": [...]}` with the same field names.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scales::{binarize, PainLabel, Scale};
use crate::video::{RoiBox, RoiKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn roi(&self, kind: RoiKind) -> RoiBox {
        RoiBox {
            x: self.x,
            y: self.y,
            width: self.width,
            height: self.height,
            kind,
        }
    }
}

/// Where a modality's region sits in the frames.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum RoiSpec {
    #[default]
    Absent,
    Full,
    Fixed(Rect),
    PerFrame(Vec<Rect>),
}

impl RoiSpec {
    pub fn is_present(&self) -> bool {
        !matches!(self, RoiSpec::Absent)
    }

    /// Box for frame `index` of a `width` x `height` sequence.
    pub fn box_for(&self, index: usize, width: usize, height: usize, kind: RoiKind) -> Option<RoiBox> {
        match self {
            RoiSpec::Absent => None,
            RoiSpec::Full => Some(RoiBox {
                x: 0,
                y: 0,
                width,
                height,
                kind,
            }),
            RoiSpec::Fixed(r) => Some(r.roi(kind)),
            RoiSpec::PerFrame(v) => v.get(index).map(|r| r.roi(kind)),
        }
    }
}

fn parse_rect(s: &str) -> std::result::Result<Rect, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| format!("bad ROI box {s:?}, expected x:y:w:h"))?;
    match nums[..] {
        [x, y, width, height] if width > 0 && height > 0 => Ok(Rect { x, y, width, height }),
        _ => Err(format!("bad ROI box {s:?}, expected x:y:w:h with positive size")),
    }
}

impl FromStr for RoiSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(RoiSpec::Absent);
        }
        if s.eq_ignore_ascii_case("full") {
            return Ok(RoiSpec::Full);
        }
        if s.contains('|') {
            return s
                .split('|')
                .map(parse_rect)
                .collect::<std::result::Result<_, _>>()
                .map(RoiSpec::PerFrame);
        }
        parse_rect(s).map(RoiSpec::Fixed)
    }
}

impl fmt::Display for RoiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = |r: &Rect| format!("{}:{}:{}:{}", r.x, r.y, r.width, r.height);
        match self {
            RoiSpec::Absent => Ok(()),
            RoiSpec::Full => f.write_str("full"),
            RoiSpec::Fixed(b) => f.write_str(&r(b)),
            RoiSpec::PerFrame(v) => f.write_str(&v.iter().map(r).collect::<Vec<_>>().join("|")),
        }
    }
}

impl Serialize for RoiSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RoiSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

fn ser_components<S: serde::Serializer>(v: &[i32], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";"))
}

fn de_components<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<i32>, D::Error> {
    let s = String::deserialize(d)?;
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<i32>()
                .map_err(|_| serde::de::Error::custom(format!("bad component {p:?}")))
        })
        .collect()
}

/// One segment of the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: String,
    pub subject_id: String,
    pub scale: Scale,
    pub frames_dir: String,
    #[serde(default)]
    pub face_roi: RoiSpec,
    #[serde(default)]
    pub body_roi: RoiSpec,
    #[serde(default, deserialize_with = "empty_as_none")]
    pub audio_path: Option<String>,
    #[serde(default)]
    pub face_score: Option<u8>,
    #[serde(default)]
    pub body_score: Option<u8>,
    #[serde(default)]
    pub sound_score: Option<u8>,
    #[serde(default, serialize_with = "ser_components", deserialize_with = "de_components")]
    pub components: Vec<i32>,
    pub total: i32,
}

fn empty_as_none<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<String>, D::Error> {
    Ok(Option::<String>::deserialize(d)?.filter(|s| !s.trim().is_empty()))
}

impl SampleRecord {
    /// Binary label, `None` for sedated segments.
    pub fn label(&self) -> Result<Option<PainLabel>> {
        Ok(binarize(self.scale.level(self.total)?))
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.sample_id.trim().is_empty() {
            return Err("empty sample_id".into());
        }
        if self.subject_id.trim().is_empty() {
            return Err(format!("sample {}: empty subject_id", self.sample_id));
        }
        if !self.components.is_empty() {
            let sum = self
                .scale
                .check_components(&self.components)
                .map_err(|e| format!("sample {}: {e}", self.sample_id))?;
            if sum != self.total {
                return Err(format!(
                    "sample {}: components sum to {sum} but total is {}",
                    self.sample_id, self.total
                ));
            }
        }
        self.scale
            .level(self.total)
            .map_err(|e| format!("sample {}: {e}", self.sample_id))?;
        for (name, v, max) in [
            ("face_score", self.face_score, 1),
            ("body_score", self.body_score, 1),
            ("sound_score", self.sound_score, 2),
        ] {
            if v.is_some_and(|v| v > max) {
                return Err(format!("sample {}: {name} above {max}", self.sample_id));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
    pub samples: Vec<SampleRecord>,
}

#[derive(Serialize, Deserialize)]
struct JsonManifest {
    samples: Vec<SampleRecord>,
}

impl Manifest {
    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }

    pub fn frames_dir(&self, s: &SampleRecord) -> PathBuf {
        self.resolve(&s.frames_dir)
    }

    pub fn audio_path(&self, s: &SampleRecord) -> Option<PathBuf> {
        s.audio_path.as_deref().map(|p| self.resolve(p))
    }

    pub fn subjects(&self) -> Vec<String> {
        let mut v: Vec<String> = self.samples.iter().map(|s| s.subject_id.clone()).collect();
        v.sort();
        v.dedup();
        v
    }

    fn check(&self, path: &Path, lines: &[usize]) -> Result<()> {
        let err = |line: usize, message: String| Error::Manifest {
            path: path.display().to_string(),
            line,
            message,
        };
        let mut ids = HashSet::new();
        for (s, &line) in self.samples.iter().zip(lines) {
            s.validate().map_err(|m| err(line, m))?;
            if !ids.insert(s.sample_id.as_str()) {
                return Err(err(line, format!("duplicate sample_id {}", s.sample_id)));
            }
            let frames = self.frames_dir(s);
            if !frames.is_dir() {
                return Err(err(line, format!("frames_dir {} does not exist", frames.display())));
            }
            if let Some(a) = self.audio_path(s) {
                if !a.is_file() {
                    return Err(err(line, format!("audio_path {} does not exist", a.display())));
                }
            }
        }
        Ok(())
    }

    /// Loads and validates a manifest; `.json` files use the JSON form.
    pub fn load(path: impl AsRef<Path>) -> Result<Manifest> {
        let path = path.as_ref();
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let (samples, lines) = if is_json {
            let m: JsonManifest = serde_json::from_str(&fs::read_to_string(path)?)?;
            let lines = (1..=m.samples.len()).collect();
            (m.samples, lines)
        } else {
            let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
            let mut samples = Vec::new();
            let mut lines = Vec::new();
            for rec in reader.deserialize::<SampleRecord>() {
                match rec {
                    Ok(r) => {
                        lines.push(samples.len() + 2);
                        samples.push(r);
                    }
                    Err(e) => {
                        let line = e.position().map_or(samples.len() + 2, |p| p.line() as usize);
                        return Err(Error::Manifest {
                            path: path.display().to_string(),
                            line,
                            message: e.to_string(),
                        });
                    }
                }
            }
            (samples, lines)
        };
        let m = Manifest { base_dir, samples };
        m.check(path, &lines)?;
        Ok(m)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for s in &self.samples {
            w.serialize(s)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&JsonManifest {
            samples: self.samples.clone(),
        })?)
    }

    /// Writes CSV, or JSON when `path` ends in `.json`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            self.to_json()?
        } else {
            self.to_csv()?
        };
        fs::write(path, text)?;
        Ok(())
    }
}
