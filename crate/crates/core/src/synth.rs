//! Synthetic dataset generator with a tunable class signal in every
//! modality.
//!
//! Each segment draws a binary class, then NIPS components consistent with
//! it. The face, body and sound scores (facial expression, max of arms and
//! legs, cry) drive what is rendered: a bright expression blob inside the
//! face box, limb blobs whose swing grows with the body score, and a
//! harmonic chirp whose loudness grows with the cry score. Per-modality
//! Gaussian jitter on those intensities, scaled by `1 / separation`,
//! controls how separable each modality is.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng as _, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::audio::{write_wav, AudioSegment};
use crate::error::{Error, Result};
use crate::imaging::Image;
use crate::manifest::{Manifest, Rect, RoiSpec, SampleRecord};
use crate::rng::{derive_seed, Rng};
use crate::scales::{NipsScore, Scale};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub subjects: usize,
    pub samples_per_subject: usize,
    /// Square frame side in pixels.
    pub frame_size: usize,
    pub min_frames: usize,
    pub max_frames: usize,
    pub sample_rate: f64,
    pub audio_seconds: f64,
    pub face_separation: f64,
    pub body_separation: f64,
    pub sound_separation: f64,
    /// Probability that a component is raised in a pain segment.
    pub pain_component_rate: f64,
    /// Probability that a component is raised in a no-pain segment.
    pub calm_component_rate: f64,
    pub face_missing: f64,
    pub audio_missing: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            subjects: 10,
            samples_per_subject: 20,
            frame_size: 64,
            min_frames: 32,
            max_frames: 40,
            sample_rate: 8000.0,
            audio_seconds: 2.0,
            face_separation: 1.0,
            body_separation: 1.0,
            sound_separation: 1.0,
            pain_component_rate: 0.7,
            calm_component_rate: 0.12,
            face_missing: 0.1,
            audio_missing: 0.02,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.subjects < 2 {
            return Err(Error::Config("the generator needs at least 2 subjects".into()));
        }
        if self.samples_per_subject == 0 || self.min_frames < 2 || self.max_frames < self.min_frames {
            return Err(Error::Config("invalid sample or frame counts".into()));
        }
        if self.frame_size < 32 {
            return Err(Error::Config("frame_size must be at least 32".into()));
        }
        for s in [self.face_separation, self.body_separation, self.sound_separation] {
            if s.is_nan() || s <= 0.0 {
                return Err(Error::Config("separations must be positive".into()));
            }
        }
        Ok(())
    }
}

fn nips_components(pain: bool, cfg: &SynthConfig, rng: &mut Rng) -> NipsScore {
    let p = if pain {
        cfg.pain_component_rate
    } else {
        cfg.calm_component_rate
    };
    loop {
        let mut b = || u8::from(rng.gen_bool(p));
        let (face, c1, c2, breathing, arms, legs, arousal) = (b(), b(), b(), b(), b(), b(), b());
        let s = NipsScore::new(face, c1 + c1 * c2, breathing, arms, legs, arousal).expect("components in range");
        if (s.total() >= 3) == pain {
            return s;
        }
    }
}

struct Layout {
    face: Rect,
    body: Rect,
}

fn layout(size: usize, rng: &mut Rng) -> Layout {
    let unit = size as f64 / 64.0;
    let px = |v: f64| (v * unit).round() as usize;
    let jx = rng.gen_range(0..=px(6.0));
    let jy = rng.gen_range(0..=px(3.0));
    Layout {
        face: Rect {
            x: px(14.0) + jx,
            y: px(3.0) + jy,
            width: px(28.0),
            height: px(28.0),
        },
        body: Rect {
            x: px(4.0),
            y: px(35.0),
            width: px(56.0),
            height: px(27.0),
        },
    }
}

fn fill_rect(img: &mut Image, x0: f64, y0: f64, w: f64, h: f64, value: f64) {
    let (iw, ih) = (img.width() as f64, img.height() as f64);
    let xs = x0.max(0.0).round() as usize;
    let ys = y0.max(0.0).round() as usize;
    let xe = (x0 + w).min(iw).round() as usize;
    let ye = (y0 + h).min(ih).round() as usize;
    for y in ys..ye {
        for x in xs..xe {
            img.set(x, y, 0, value);
        }
    }
}

fn fill_ellipse(img: &mut Image, r: &Rect, value: f64) {
    let (cx, cy) = (r.x as f64 + r.width as f64 / 2.0, r.y as f64 + r.height as f64 / 2.0);
    let (ax, ay) = (r.width as f64 / 2.0, r.height as f64 / 2.0);
    for y in r.y..r.y + r.height {
        for x in r.x..r.x + r.width {
            let dx = (x as f64 + 0.5 - cx) / ax;
            let dy = (y as f64 + 0.5 - cy) / ay;
            if dx * dx + dy * dy <= 1.0 {
                img.set(x, y, 0, value);
            }
        }
    }
}

struct Scene<'a> {
    background: &'a Image,
    layout: Layout,
    face_intensity: f64,
    body_intensity: f64,
    phase: f64,
    limb_freq: f64,
}

impl Scene<'_> {
    fn render(&self, t: usize, rng: &mut Rng) -> Image {
        let mut img = self.background.clone();
        let unit = img.width() as f64 / 64.0;
        let f = &self.layout.face;
        fill_ellipse(&mut img, f, 150.0);
        // expression blob: brow and mouth brighten with intensity
        let pulse = 0.8 + 0.2 * (2.0 * PI * t as f64 / 9.0 + self.phase).sin();
        let glow = (150.0 + 95.0 * self.face_intensity.clamp(0.0, 1.1) * pulse).min(255.0);
        let (fx, fy, fw, fh) = (f.x as f64, f.y as f64, f.width as f64, f.height as f64);
        fill_rect(&mut img, fx + 0.2 * fw, fy + 0.25 * fh, 0.6 * fw, 0.12 * fh, glow);
        fill_rect(&mut img, fx + 0.3 * fw, fy + 0.65 * fh, 0.4 * fw, 0.15 * fh, glow);

        let b = &self.layout.body;
        let (bx, by, bw, bh) = (b.x as f64, b.y as f64, b.width as f64, b.height as f64);
        fill_rect(&mut img, bx + 0.3 * bw, by, 0.4 * bw, bh, 120.0);
        let swing = unit * (1.0 + 9.0 * self.body_intensity.clamp(0.0, 1.3));
        let s = (2.0 * PI * self.limb_freq * t as f64 + self.phase).sin();
        let c = (2.0 * PI * self.limb_freq * t as f64 + self.phase * 1.7).cos();
        let limb = 7.0 * unit;
        fill_rect(
            &mut img,
            bx + 0.12 * bw + swing * s,
            by + 0.25 * bh,
            limb,
            limb * 0.8,
            215.0,
        );
        fill_rect(
            &mut img,
            bx + 0.76 * bw - swing * c,
            by + 0.55 * bh,
            limb,
            limb * 0.8,
            215.0,
        );

        for v in img.data_mut() {
            *v = (*v + rng.gen_range(-5.0..5.0)).clamp(0.0, 255.0);
        }
        img
    }
}

fn subject_background(size: usize, rng: &mut Rng) -> Image {
    let base = rng.gen_range(50.0..100.0);
    let tilt = rng.gen_range(-20.0..20.0);
    let mut img = Image::filled(size, size, 1, 0.0);
    for y in 0..size {
        for x in 0..size {
            let v = base + tilt * (x as f64 / size as f64 - 0.5) + rng.gen_range(-8.0..8.0);
            img.set(x, y, 0, v.clamp(0.0, 255.0));
        }
    }
    img
}

fn render_audio(cfg: &SynthConfig, intensity: f64, rng: &mut Rng) -> Result<AudioSegment> {
    let n = (cfg.audio_seconds * cfg.sample_rate).round() as usize;
    let amp = 0.45 * intensity.clamp(0.0, 1.2) / 1.2;
    let f_start = rng.gen_range(380.0..420.0);
    let f_end = rng.gen_range(560.0..640.0);
    let onset = rng.gen_range(0.05..0.2);
    let burst = rng.gen_range(0.55..0.75);
    let hum = rng.gen_range(0.0..0.02);
    let dur = n as f64 / cfg.sample_rate;
    let mut phase = 0.0;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / cfg.sample_rate;
        let rel = t / dur;
        let f = f_start + (f_end - f_start) * rel;
        phase += 2.0 * PI * f / cfg.sample_rate;
        let env = if rel >= onset && rel <= onset + burst {
            (PI * (rel - onset) / burst).sin()
        } else {
            0.0
        };
        let cry = amp * env * (phase.sin() + 0.5 * (2.0 * phase).sin() + 0.25 * (3.0 * phase).sin()) / 1.75;
        let noise = rng.gen_range(-0.02..0.02) + hum * (2.0 * PI * 100.0 * t).sin();
        samples.push((cry + noise).clamp(-1.0, 1.0));
    }
    AudioSegment::new(samples, cfg.sample_rate)
}

/// Writes frames, audio and `manifest.csv` under `out_dir` and returns the
/// loaded manifest. Output bytes depend only on `cfg` and `seed`.
pub fn generate_synthetic(cfg: &SynthConfig, seed: u64, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    cfg.validate()?;
    let out = out_dir.as_ref();
    fs::create_dir_all(out.join("frames"))?;
    fs::create_dir_all(out.join("audio"))?;
    let mut samples = Vec::new();
    for subj in 0..cfg.subjects {
        let mut srng = Rng::seed_from_u64(derive_seed(seed, "synth-subject", subj as u64));
        let background = subject_background(cfg.frame_size, &mut srng);
        let subject_id = format!("subject-{subj:02}");
        for k in 0..cfg.samples_per_subject {
            let index = (subj * cfg.samples_per_subject + k) as u64;
            let mut rng = Rng::seed_from_u64(derive_seed(seed, "synth-sample", index));
            let sample_id = format!("s{subj:02}-{k:03}");
            let pain = rng.gen_bool(0.5);
            let nips = nips_components(pain, cfg, &mut rng);
            let face_score = nips.facial_expression;
            let body_score = nips.arms.max(nips.legs);
            let sound_score = nips.cry;
            let jitter = |sep: f64, rng: &mut Rng| Normal::new(0.0, 0.35 / sep).expect("positive sd").sample(rng);
            let face_intensity = f64::from(face_score) + jitter(cfg.face_separation, &mut rng);
            let body_intensity = f64::from(body_score) + jitter(cfg.body_separation, &mut rng);
            let sound_intensity = (f64::from(sound_score) + jitter(cfg.sound_separation, &mut rng)) / 2.0;

            let scene = Scene {
                background: &background,
                layout: layout(cfg.frame_size, &mut rng),
                face_intensity,
                body_intensity,
                phase: rng.gen_range(0.0..2.0 * PI),
                limb_freq: rng.gen_range(0.12..0.2),
            };
            let n_frames = rng.gen_range(cfg.min_frames..=cfg.max_frames);
            let frames_rel = format!("frames/{sample_id}");
            let dir = out.join(&frames_rel);
            fs::create_dir_all(&dir)?;
            for t in 0..n_frames {
                scene.render(t, &mut rng).save(dir.join(format!("{t:04}.png")))?;
            }
            let face_missing = rng.gen_bool(cfg.face_missing);
            let audio_missing = rng.gen_bool(cfg.audio_missing);
            let audio = render_audio(cfg, sound_intensity, &mut rng)?;
            let audio_path = if audio_missing {
                None
            } else {
                let rel = format!("audio/{sample_id}.wav");
                write_wav(out.join(&rel), &audio)?;
                Some(rel)
            };
            samples.push(SampleRecord {
                sample_id,
                subject_id: subject_id.clone(),
                scale: Scale::Nips,
                frames_dir: frames_rel,
                face_roi: if face_missing {
                    RoiSpec::Absent
                } else {
                    RoiSpec::Fixed(scene.layout.face)
                },
                body_roi: RoiSpec::Fixed(scene.layout.body),
                audio_path,
                face_score: Some(face_score),
                body_score: Some(body_score),
                sound_score: Some(sound_score),
                components: nips.components().to_vec(),
                total: nips.total(),
            });
        }
    }
    let manifest = Manifest {
        base_dir: out.to_path_buf(),
        samples,
    };
    let path = out.join("manifest.csv");
    manifest.save(&path)?;
    Manifest::load(&path)
}
