//! Per-indicator models: level-1 spatial training on indicator scores,
//! level-2 temporal training on binary labels, prediction and checkpoints.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::network::{OutputKind, SpatialConfig, SpatialNet};
use super::train::{fit, LossKind, TrainConfig, TrainingCurve};
use crate::error::{Error, Result};
use crate::fusion::{Indicator, IndicatorDecision};
use crate::imaging::Image;
use crate::rng::Rng;
use crate::scales::PainLabel;
use crate::temporal::{build_temporal_head_with, TemporalHeadSpec};
use crate::tensor::{read_checkpoint, write_checkpoint, CheckpointEntry, Module, Sequential, Tensor};
use crate::video::ImageAugment;

const SCALE_FLOOR: f64 = 1e-6;

/// One level-1 training image. `variants[0]` is the original; training
/// draws one variant per epoch (pre-computed audio augmentations).
#[derive(Debug, Clone)]
pub struct ImageSample {
    pub id: String,
    pub variants: Vec<Image>,
    pub score: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level1Config {
    pub indicator: Indicator,
    pub spatial: SpatialConfig,
    pub train: TrainConfig,
    /// Random rotation, brightness and flip on every training draw.
    pub augment_images: bool,
}

/// Regression target for an indicator score: face and body scores are
/// 0/1, the sound (cry) score 0-2 is halved for the sigmoid output.
pub fn score_target(indicator: Indicator, score: u8, id: &str) -> Result<f64> {
    let max = match indicator {
        Indicator::Face | Indicator::Body => 1,
        Indicator::Sound => 2,
        Indicator::Fused => return Err(Error::contract("fused decisions have no score")),
    };
    if score > max {
        return Err(Error::data(format!(
            "sample {id}: {indicator} score {score} exceeds {max}"
        )));
    }
    Ok(f64::from(score) / f64::from(max))
}

/// Converts an image to the network's input tensor.
pub fn image_input(img: &Image, cfg: &SpatialConfig) -> Result<Tensor> {
    let img = match (img.channels(), cfg.in_channels) {
        (a, b) if a == b => img.clone(),
        (3, 1) => img.to_gray(),
        (1, 3) => {
            let data = img.data().iter().flat_map(|&v| [v; 3]).collect();
            Image::new(img.width(), img.height(), 3, data)?
        }
        (a, b) => return Err(Error::contract(format!("image has {a} channels, network expects {b}"))),
    };
    let s = cfg.input_size;
    let img = if img.width() == s && img.height() == s {
        img
    } else {
        img.resize(s, s)
    };
    Ok(img.to_tensor())
}

/// Level 1: trains the spatial network on indicator scores.
pub fn train_indicator_model(
    train: &[ImageSample],
    val: &[ImageSample],
    cfg: &Level1Config,
) -> Result<(SpatialNet, TrainingCurve)> {
    let loss = match (cfg.indicator, cfg.spatial.output) {
        (Indicator::Sound, OutputKind::Sigmoid) => LossKind::Bce,
        (Indicator::Face | Indicator::Body, OutputKind::Linear) => LossKind::Mse,
        (ind, out) => {
            return Err(Error::contract(format!(
                "{ind} spatial network cannot use {out:?} output"
            )));
        }
    };
    for s in train.iter().chain(val) {
        score_target(cfg.indicator, s.score, &s.id)?;
        if s.variants.is_empty() {
            return Err(Error::data(format!("sample {}: no image", s.id)));
        }
    }
    let mut net = SpatialNet::build(&cfg.spatial, cfg.train.seed)?;
    let prepare = |s: &ImageSample, rng: Option<&mut Rng>| -> Result<(Tensor, f64)> {
        let target = score_target(cfg.indicator, s.score, &s.id)?;
        let img = match rng {
            Some(rng) => {
                let v = &s.variants[rng.gen_range(0..s.variants.len())];
                if cfg.augment_images {
                    ImageAugment::sample(rng).apply(v)
                } else {
                    v.clone()
                }
            }
            None => s.variants[0].clone(),
        };
        Ok((image_input(&img, &cfg.spatial)?, target))
    };
    let curve = fit(&mut net, train, val, prepare, loss, &cfg.train)?;
    Ok((net, curve))
}

/// A fixed-length feature sequence with its binary segment label.
#[derive(Debug, Clone)]
pub struct SequenceSample {
    pub id: String,
    /// `[steps, features]`
    pub steps: Tensor,
    pub label: PainLabel,
}

/// Level 2: trains the recurrent head on binary labels.
pub fn train_temporal_model(
    train: &[SequenceSample],
    val: &[SequenceSample],
    head: &TemporalHeadSpec,
    steps: usize,
    cfg: &TrainConfig,
) -> Result<(Sequential, TrainingCurve)> {
    let first = train.first().ok_or_else(|| Error::data("no training sequences"))?;
    let dim = *first.steps.shape().get(1).unwrap_or(&0);
    for s in train.iter().chain(val) {
        if s.steps.shape() != [steps, dim] {
            return Err(Error::contract(format!(
                "sequence {} has shape {:?}, expected [{steps}, {dim}]",
                s.id,
                s.steps.shape()
            )));
        }
    }
    let mut net = build_temporal_head_with(dim, head, cfg.seed)?;
    let prepare =
        |s: &SequenceSample, _: Option<&mut Rng>| Ok((s.steps.clone(), f64::from(u8::from(s.label.is_pain()))));
    let curve = fit(&mut net, train, val, prepare, LossKind::Bce, cfg)?;
    Ok((net, curve))
}

/// Per-feature standardisation of the spatial features before the
/// recurrent head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut n = 0usize;
        let mut sum: Vec<f64> = Vec::new();
        let mut sq: Vec<f64> = Vec::new();
        for r in rows {
            if sum.is_empty() {
                sum = vec![0.0; r.len()];
                sq = vec![0.0; r.len()];
            }
            for ((s, q), v) in sum.iter_mut().zip(&mut sq).zip(r) {
                *s += v;
                *q += v * v;
            }
            n += 1;
        }
        if n == 0 {
            return Err(Error::data("no feature rows to calibrate on"));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let scale = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| (q / n as f64 - m * m).max(0.0).sqrt().max(SCALE_FLOOR))
            .collect();
        Ok(FeatureScaler { mean, scale })
    }

    pub fn identity(dim: usize) -> Self {
        FeatureScaler {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn apply(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
            *v = (*v - m) / s;
        }
    }
}

/// What a model consumes for one segment.
#[derive(Debug, Clone)]
pub enum ModelInput {
    /// One input tensor per key frame.
    Sequence(Vec<Tensor>),
    Image(Tensor),
    /// The modality is missing for this segment.
    Absent,
}

/// A trained per-indicator pipeline.
pub struct IndicatorModel {
    pub indicator: Indicator,
    pub spatial: SpatialNet,
    /// Absent for the sound pathway.
    pub temporal: Option<Sequential>,
    pub calibration: FeatureScaler,
}

impl IndicatorModel {
    /// Standardised per-frame spatial features, `[frames, features]`.
    pub fn sequence_features(&self, frames: &[Tensor]) -> Result<Tensor> {
        let dim = self.spatial.feature_dim();
        let mut data = Vec::with_capacity(frames.len() * dim);
        for f in frames {
            let mut row = self.spatial.features(f)?.into_data();
            self.calibration.apply(&mut row);
            data.extend(row);
        }
        Tensor::new(vec![frames.len(), dim], data)
    }

    /// Pain probability, or `None` for an absent modality.
    pub fn pain_probability(&self, input: &ModelInput) -> Result<Option<f64>> {
        let p = match (input, &self.temporal) {
            (ModelInput::Absent, _) => return Ok(None),
            (ModelInput::Sequence(frames), Some(head)) => head.infer(&self.sequence_features(frames)?)?.data()[0],
            (ModelInput::Image(x), None) => self.spatial.infer(x)?.data()[0],
            (ModelInput::Sequence(_), None) => {
                return Err(Error::contract(format!(
                    "{} model has no temporal head",
                    self.indicator
                )))
            }
            (ModelInput::Image(_), Some(_)) => {
                return Err(Error::contract(format!(
                    "{} model expects a frame sequence",
                    self.indicator
                )))
            }
        };
        Ok(Some(p.clamp(0.0, 1.0)))
    }

    fn tensors(&self) -> Vec<Tensor> {
        let mut out: Vec<Tensor> = self.spatial.params().into_iter().cloned().collect();
        if let Some(t) = &self.temporal {
            out.extend(t.params().into_iter().cloned());
        }
        out.push(Tensor::vector(self.calibration.mean.clone()));
        out.push(Tensor::vector(self.calibration.scale.clone()));
        out
    }

    /// Writes every parameter followed by the calibration vectors.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let entries: Vec<CheckpointEntry> = self
            .tensors()
            .into_iter()
            .enumerate()
            .map(|(i, t)| CheckpointEntry {
                index: i as u32,
                shape: t.shape().to_vec(),
                values: t.into_data(),
            })
            .collect();
        write_checkpoint(BufWriter::new(File::create(path)?), &entries)
    }

    /// Loads weights saved by [`IndicatorModel::save`] into a model of the
    /// same architecture.
    pub fn load_weights(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let entries = read_checkpoint(BufReader::new(File::open(path.as_ref())?))?;
        let expected = self.tensors();
        if entries.len() != expected.len() {
            return Err(Error::Checkpoint(format!(
                "{}: {} tensors, model needs {}",
                path.as_ref().display(),
                entries.len(),
                expected.len()
            )));
        }
        for (e, t) in entries.iter().zip(&expected) {
            if e.shape != t.shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor {} has shape {:?}, model needs {:?}",
                    e.index,
                    e.shape,
                    t.shape()
                )));
            }
        }
        let mut it = entries.into_iter().map(|e| e.values);
        let mut params = self.spatial.params_mut();
        if let Some(t) = &mut self.temporal {
            params.extend(t.params_mut());
        }
        for p in params {
            p.data_mut().copy_from_slice(&it.next().expect("count checked"));
        }
        self.calibration.mean = it.next().expect("count checked");
        self.calibration.scale = it.next().expect("count checked");
        Ok(())
    }
}

/// Decision at the 0.5 threshold, `None` when the modality is absent.
pub fn predict_indicator(model: &IndicatorModel, input: &ModelInput) -> Result<Option<IndicatorDecision>> {
    Ok(model
        .pain_probability(input)?
        .map(|p| IndicatorDecision::new(model.indicator, p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::network::{Architecture, VggConfig};
    use rand::SeedableRng;

    fn cfg(indicator: Indicator, output: OutputKind) -> Level1Config {
        Level1Config {
            indicator,
            spatial: SpatialConfig {
                architecture: Architecture::Vgg,
                backbone: VggConfig::miniature(2),
                in_channels: 1,
                input_size: 8,
                head_units: 16,
                output,
            },
            train: TrainConfig {
                learning_rate: 1e-3,
                max_epochs: 5,
                ..TrainConfig::spatial()
            },
            augment_images: false,
        }
    }

    fn images(n: usize) -> Vec<ImageSample> {
        (0..n)
            .map(|i| {
                let pain = i % 2 == 0;
                ImageSample {
                    id: format!("s{i}"),
                    variants: vec![Image::filled(8, 8, 1, if pain { 220.0 } else { 30.0 })],
                    score: u8::from(pain),
                }
            })
            .collect()
    }

    #[test]
    fn score_range_errors_name_the_sample() {
        let mut data = images(4);
        data[1].score = 2;
        let err = train_indicator_model(&data, &[], &cfg(Indicator::Face, OutputKind::Linear))
            .err()
            .unwrap();
        assert!(err.to_string().contains("s1"));
        assert_eq!(score_target(Indicator::Sound, 2, "x").unwrap(), 1.0);
    }

    #[test]
    fn output_kind_must_match_indicator() {
        assert!(train_indicator_model(&images(4), &[], &cfg(Indicator::Sound, OutputKind::Linear)).is_err());
    }

    #[test]
    fn separable_brightness_loss_decreases() {
        let (_, curve) = train_indicator_model(&images(96), &[], &cfg(Indicator::Body, OutputKind::Linear)).unwrap();
        let l: Vec<f64> = curve.epochs.iter().map(|e| e.train_loss).collect();
        assert!(l.windows(2).all(|w| w[1] < w[0]), "{l:?}");
    }

    #[test]
    fn wrong_sequence_length_is_rejected() {
        let s = SequenceSample {
            id: "a".into(),
            steps: Tensor::zeros(&[31, 4]),
            label: PainLabel::Pain,
        };
        let r = train_temporal_model(&[s], &[], &TemporalHeadSpec::default(), 32, &TrainConfig::temporal());
        assert!(matches!(r, Err(Error::Contract(_))));
    }

    #[test]
    fn checkpoint_round_trip() {
        let c = cfg(Indicator::Face, OutputKind::Linear);
        let build = |seed| IndicatorModel {
            indicator: Indicator::Face,
            spatial: SpatialNet::build(&c.spatial, seed).unwrap(),
            temporal: Some(build_temporal_head_with(16, &TemporalHeadSpec::default(), seed).unwrap()),
            calibration: FeatureScaler {
                mean: vec![seed as f64; 16],
                scale: vec![1.0; 16],
            },
        };
        let a = build(1);
        let mut b = build(2);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ckpt");
        a.save(&p).unwrap();
        b.load_weights(&p).unwrap();
        let mut r = Rng::seed_from_u64(0);
        let frames: Vec<Tensor> = (0..32)
            .map(|_| {
                let v = (0..64).map(|_| r.gen::<f64>()).collect();
                Tensor::new(vec![1, 8, 8], v).unwrap()
            })
            .collect();
        let input = ModelInput::Sequence(frames);
        assert_eq!(a.pain_probability(&input).unwrap(), b.pain_probability(&input).unwrap());
        assert_eq!(predict_indicator(&a, &ModelInput::Absent).unwrap(), None);
    }
}
