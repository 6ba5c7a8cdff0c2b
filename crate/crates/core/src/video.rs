//! Key-frame normalisation, image augmentation, ROI cropping and motion
//! images.

use rand::seq::index::sample;
use rand::{Rng as _, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::Image;
use crate::rng::Rng;

/// Default intensity threshold for motion images on a 0-255 scale.
pub const DEFAULT_MOTION_THRESHOLD: f64 = 15.0;

/// Ordered frames of one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: Vec<Image>,
    /// Seconds, strictly increasing.
    pub timestamps: Vec<f64>,
    pub subject_id: String,
}

impl FrameSequence {
    pub fn new(frames: Vec<Image>, timestamps: Vec<f64>, subject_id: impl Into<String>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::contract("frame sequence is empty"));
        }
        if frames.len() != timestamps.len() {
            return Err(Error::contract("one timestamp per frame is required"));
        }
        if frames.iter().any(|f| !f.same_dims(&frames[0])) {
            return Err(Error::contract("all frames must share dimensions"));
        }
        if timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::contract("timestamps must be strictly increasing"));
        }
        Ok(FrameSequence {
            frames,
            timestamps,
            subject_id: subject_id.into(),
        })
    }

    /// Frames sampled at a constant rate starting at t = 0.
    pub fn at_rate(frames: Vec<Image>, fps: f64, subject_id: impl Into<String>) -> Result<Self> {
        let ts = (0..frames.len()).map(|i| i as f64 / fps).collect();
        FrameSequence::new(frames, ts, subject_id)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Indices selected by [`normalize_keyframes`] for a sequence of `n`
/// frames.
pub fn keyframe_indices(n: usize, target: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::contract("cannot normalise an empty sequence"));
    }
    if target == 0 {
        return Err(Error::contract("key-frame target must be positive"));
    }
    Ok(match n.cmp(&target) {
        std::cmp::Ordering::Equal => (0..n).collect(),
        std::cmp::Ordering::Greater => {
            let mut keep = sample(rng, n, target).into_vec();
            keep.sort_unstable();
            keep
        }
        // evenly spaced nearest-index repetition; step < 1 so every index appears
        std::cmp::Ordering::Less => (0..target).map(|j| j * n / target).collect(),
    })
}

/// Brings a sequence to exactly `target` frames: random drops when longer,
/// evenly spaced repetition when shorter. Order is preserved.
pub fn normalize_keyframes(seq: &FrameSequence, target: usize, seed: u64) -> Result<FrameSequence> {
    let mut rng = Rng::seed_from_u64(seed);
    let idx = keyframe_indices(seq.len(), target, &mut rng)?;
    let frames = idx.iter().map(|&i| seq.frames[i].clone()).collect();
    let timestamps = if seq.len() >= target {
        idx.iter().map(|&i| seq.timestamps[i]).collect()
    } else {
        let n = seq.len();
        let t0 = seq.timestamps[0];
        let period = if n > 1 {
            (seq.timestamps[n - 1] - t0) / (n - 1) as f64
        } else {
            1.0
        };
        let span = period * n as f64;
        (0..target).map(|j| t0 + j as f64 * span / target as f64).collect()
    };
    FrameSequence::new(frames, timestamps, seq.subject_id.clone())
}

/// One draw of the image augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageAugment {
    /// Degrees, counter-clockwise.
    pub rotation_deg: f64,
    pub brightness: f64,
    pub flip: bool,
}

impl ImageAugment {
    pub const IDENTITY: ImageAugment = ImageAugment {
        rotation_deg: 0.0,
        brightness: 1.0,
        flip: false,
    };

    /// Rotation uniform in [-30, 30] degrees, brightness uniform in
    /// [0.75, 1.25], horizontal flip with probability 0.5.
    pub fn sample(rng: &mut Rng) -> Self {
        ImageAugment {
            rotation_deg: rng.gen_range(-30.0..=30.0),
            brightness: rng.gen_range(0.75..=1.25),
            flip: rng.gen_bool(0.5),
        }
    }

    pub fn apply(&self, img: &Image) -> Image {
        let mut out = if self.rotation_deg != 0.0 {
            rotate(img, self.rotation_deg)
        } else {
            img.clone()
        };
        if self.brightness != 1.0 {
            for v in out.data_mut() {
                *v = (*v * self.brightness).clamp(0.0, 255.0);
            }
        }
        if self.flip {
            out = out.flip_horizontal();
        }
        out
    }
}

/// Seeded random rotation, brightness and flip.
pub fn augment_image(img: &Image, seed: u64) -> Image {
    let mut rng = Rng::seed_from_u64(seed);
    ImageAugment::sample(&mut rng).apply(img)
}

fn reflect(v: f64, len: usize) -> f64 {
    let max = (len - 1) as f64;
    if max == 0.0 {
        return 0.0;
    }
    let period = 2.0 * max;
    let m = v.rem_euclid(period);
    if m > max {
        period - m
    } else {
        m
    }
}

/// Rotation about the image centre with reflected borders.
pub fn rotate(img: &Image, degrees: f64) -> Image {
    let (w, h) = (img.width(), img.height());
    let (sin, cos) = degrees.to_radians().sin_cos();
    let cx = (w - 1) as f64 / 2.0;
    let cy = (h - 1) as f64 / 2.0;
    let mut out = Image::filled(w, h, img.channels(), 0.0);
    for y in 0..h {
        for x in 0..w {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let sx = reflect(cos * dx - sin * dy + cx, w);
            let sy = reflect(sin * dx + cos * dy + cy, h);
            for c in 0..img.channels() {
                out.set(x, y, c, img.sample(sx, sy, c));
            }
        }
    }
    out
}

/// Binary change map between two frames.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionImage {
    pub width: usize,
    pub height: usize,
    /// 0 or 1 per pixel, row-major.
    pub pixels: Vec<u8>,
    pub threshold: f64,
}

impl MotionImage {
    pub fn to_image(&self) -> Image {
        Image::new(
            self.width,
            self.height,
            1,
            self.pixels.iter().map(|&p| f64::from(p) * 255.0).collect(),
        )
        .expect("motion image dims are positive")
    }
}

/// 1 where the grayscale absolute difference exceeds `threshold`.
pub fn motion_image(prev: &Image, curr: &Image, threshold: f64) -> Result<MotionImage> {
    if prev.width() != curr.width() || prev.height() != curr.height() {
        return Err(Error::Shape {
            op: "motion_image",
            expected: format!("{}x{}", prev.width(), prev.height()),
            actual: vec![curr.width(), curr.height()],
        });
    }
    let a = prev.to_gray();
    let b = curr.to_gray();
    let pixels = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(p, c)| u8::from((c - p).abs() > threshold))
        .collect();
    Ok(MotionImage {
        width: prev.width(),
        height: prev.height(),
        pixels,
        threshold,
    })
}

/// Fraction of moving pixels, in [0, 1].
pub fn total_motion(m: &MotionImage) -> f64 {
    let moving: usize = m.pixels.iter().map(|&p| usize::from(p)).sum();
    moving as f64 / (m.width * m.height) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoiKind {
    Face,
    Body,
}

/// Region of interest in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiBox {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
    pub kind: RoiKind,
}

impl RoiBox {
    pub fn full(img: &Image, kind: RoiKind) -> Self {
        RoiBox {
            x: 0,
            y: 0,
            width: img.width(),
            height: img.height(),
            kind,
        }
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.width > 0 && self.height > 0 && self.x + self.width <= width && self.y + self.height <= height
    }

    /// The largest box inside a `width` x `height` frame that overlaps this one.
    pub fn clipped(&self, width: usize, height: usize) -> Option<RoiBox> {
        let x = self.x.min(width.saturating_sub(1));
        let y = self.y.min(height.saturating_sub(1));
        let w = (self.x + self.width).min(width).saturating_sub(x);
        let h = (self.y + self.height).min(height).saturating_sub(y);
        (w > 0 && h > 0).then_some(RoiBox {
            x,
            y,
            width: w,
            height: h,
            kind: self.kind,
        })
    }
}

/// Crops `bx` and resizes it bilinearly to `out_size` x `out_size`.
pub fn crop_roi(img: &Image, bx: &RoiBox, out_size: usize) -> Result<Image> {
    if !bx.fits(img.width(), img.height()) {
        let hint = match bx.clipped(img.width(), img.height()) {
            Some(c) => format!(
                "; clipped box would be x={} y={} w={} h={}",
                c.x, c.y, c.width, c.height
            ),
            None => String::new(),
        };
        return Err(Error::contract(format!(
            "ROI x={} y={} w={} h={} outside {}x{} frame{hint}",
            bx.x,
            bx.y,
            bx.width,
            bx.height,
            img.width(),
            img.height()
        )));
    }
    if out_size == 0 {
        return Err(Error::contract("output size must be positive"));
    }
    let crop = img.crop(bx.x, bx.y, bx.width, bx.height)?;
    if crop.width() == out_size && crop.height() == out_size {
        return Ok(crop);
    }
    Ok(crop.resize(out_size, out_size))
}
