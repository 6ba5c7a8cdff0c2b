//! Segment preparation and leave-one-subject-out training of every
//! approach of an indicator.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{augment_audio, load_audio, mfcc, render_spectrogram_image, stft, AudioSegment};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{loso_folds, FoldPlan, FusionPlan, PredictionRow, PredictionTable};
use crate::fusion::Indicator;
use crate::imaging::Image;
use crate::manifest::{Manifest, RoiSpec, SampleRecord};
use crate::models::{
    image_input, train_indicator_model, train_temporal_model, Architecture, FeatureScaler, ImageSample, IndicatorModel,
    Level1Config, ModelInput, OutputKind, SequenceSample, TrainingCurve,
};
use crate::rng::{derive_seed, stream};
use crate::scales::PainLabel;
use crate::shallow::{Classifier, GaussianNb, Knn, LabeledDataset, RandomForest, RandomForestConfig};
use crate::tensor::Tensor;
use crate::video::{crop_roi, keyframe_indices, motion_image, total_motion, RoiKind};

/// The per-indicator approaches, in reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Approach {
    FaceVgg,
    FaceBilinear,
    MotionGaussianNb,
    MotionRandomForest,
    MotionKnn,
    MotionImageVgg,
    BodyRoiVgg,
    MfccGaussianNb,
    MfccKnn,
    MfccRandomForest,
    SpectrogramVgg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FrameSource {
    Face,
    Body,
    Motion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ShallowKind {
    GaussianNb,
    Knn,
    RandomForest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ShallowFeature {
    MotionStats,
    Mfcc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Frames(Architecture, FrameSource),
    Shallow(ShallowKind, ShallowFeature),
    Spectrogram,
}

impl Approach {
    pub const ALL: [Approach; 11] = [
        Approach::FaceVgg,
        Approach::FaceBilinear,
        Approach::MotionGaussianNb,
        Approach::MotionRandomForest,
        Approach::MotionKnn,
        Approach::MotionImageVgg,
        Approach::BodyRoiVgg,
        Approach::MfccGaussianNb,
        Approach::MfccKnn,
        Approach::MfccRandomForest,
        Approach::SpectrogramVgg,
    ];

    /// Display name, also the key in prediction tables.
    pub fn name(self) -> &'static str {
        match self {
            Approach::FaceVgg => "VGG16 + LSTM",
            Approach::FaceBilinear => "Bilinear VGG16 + LSTM",
            Approach::MotionGaussianNb => "Motion + Gaussian NB",
            Approach::MotionRandomForest => "Motion + Random Forest",
            Approach::MotionKnn => "Motion + KNN",
            Approach::MotionImageVgg => "Motion Image + VGG16 + LSTM",
            Approach::BodyRoiVgg => "Body ROI Image + VGG16 + LSTM",
            Approach::MfccGaussianNb => "MFCC + Gaussian NB",
            Approach::MfccKnn => "MFCC + KNN",
            Approach::MfccRandomForest => "MFCC + Random Forest",
            Approach::SpectrogramVgg => "Spectrogram Image + VGG16",
        }
    }

    /// File-system friendly name.
    pub fn slug(self) -> &'static str {
        match self {
            Approach::FaceVgg => "face-vgg",
            Approach::FaceBilinear => "face-bilinear",
            Approach::MotionGaussianNb => "motion-gnb",
            Approach::MotionRandomForest => "motion-rf",
            Approach::MotionKnn => "motion-knn",
            Approach::MotionImageVgg => "motion-image-vgg",
            Approach::BodyRoiVgg => "body-roi-vgg",
            Approach::MfccGaussianNb => "mfcc-gnb",
            Approach::MfccKnn => "mfcc-knn",
            Approach::MfccRandomForest => "mfcc-rf",
            Approach::SpectrogramVgg => "spectrogram-vgg",
        }
    }

    pub fn indicator(self) -> Indicator {
        match self {
            Approach::FaceVgg | Approach::FaceBilinear => Indicator::Face,
            Approach::MotionGaussianNb
            | Approach::MotionRandomForest
            | Approach::MotionKnn
            | Approach::MotionImageVgg
            | Approach::BodyRoiVgg => Indicator::Body,
            _ => Indicator::Sound,
        }
    }

    pub fn for_indicator(ind: Indicator) -> Vec<Approach> {
        Approach::ALL.into_iter().filter(|a| a.indicator() == ind).collect()
    }

    pub fn from_name(name: &str) -> Option<Approach> {
        Approach::ALL.into_iter().find(|a| a.name() == name)
    }

    fn method(self) -> Method {
        let vgg = Architecture::Vgg;
        match self {
            Approach::FaceVgg => Method::Frames(vgg, FrameSource::Face),
            Approach::FaceBilinear => Method::Frames(Architecture::Bilinear { shared: false }, FrameSource::Face),
            Approach::MotionImageVgg => Method::Frames(vgg, FrameSource::Motion),
            Approach::BodyRoiVgg => Method::Frames(vgg, FrameSource::Body),
            Approach::MotionGaussianNb => Method::Shallow(ShallowKind::GaussianNb, ShallowFeature::MotionStats),
            Approach::MotionRandomForest => Method::Shallow(ShallowKind::RandomForest, ShallowFeature::MotionStats),
            Approach::MotionKnn => Method::Shallow(ShallowKind::Knn, ShallowFeature::MotionStats),
            Approach::MfccGaussianNb => Method::Shallow(ShallowKind::GaussianNb, ShallowFeature::Mfcc),
            Approach::MfccKnn => Method::Shallow(ShallowKind::Knn, ShallowFeature::Mfcc),
            Approach::MfccRandomForest => Method::Shallow(ShallowKind::RandomForest, ShallowFeature::Mfcc),
            Approach::SpectrogramVgg => Method::Spectrogram,
        }
    }
}

/// The approaches whose decisions are fused.
pub fn fusion_plan() -> FusionPlan {
    FusionPlan {
        face: Approach::FaceBilinear.name().to_string(),
        body: Approach::BodyRoiVgg.name().to_string(),
        sound: Approach::SpectrogramVgg.name().to_string(),
    }
}

/// Model-ready data of one segment. Modalities that are missing, or were
/// not requested, are `None`.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub sample_id: String,
    pub subject_id: String,
    pub label: PainLabel,
    pub face_score: Option<u8>,
    pub body_score: Option<u8>,
    pub sound_score: Option<u8>,
    /// Face crops of the key frames, at network input size.
    pub face: Option<Vec<Image>>,
    /// Body crops of the key frames, at network input size.
    pub body: Option<Vec<Image>>,
    /// Motion images between consecutive body crops, led by an all-zero
    /// image so the sequence has one entry per key frame.
    pub motion: Option<Vec<Image>>,
    /// Mean, max, standard deviation and sum of the per-frame total motion.
    pub motion_stats: Option<Vec<f64>>,
    /// The original spectrogram image followed by the 27 augmentations.
    pub spectrograms: Option<Vec<Image>>,
    pub mfcc: Option<Vec<f64>>,
}

impl PreparedSample {
    pub fn score(&self, ind: Indicator) -> Option<u8> {
        match ind {
            Indicator::Face => self.face_score,
            Indicator::Body => self.body_score,
            Indicator::Sound => self.sound_score,
            Indicator::Fused => None,
        }
    }

    pub fn has(&self, ind: Indicator) -> bool {
        match ind {
            Indicator::Face => self.face.is_some(),
            Indicator::Body => self.body.is_some(),
            Indicator::Sound => self.spectrograms.is_some(),
            Indicator::Fused => false,
        }
    }

    fn frames(&self, src: FrameSource) -> Option<&[Image]> {
        match src {
            FrameSource::Face => self.face.as_deref(),
            FrameSource::Body => self.body.as_deref(),
            FrameSource::Motion => self.motion.as_deref(),
        }
    }

    fn shallow_features(&self, f: ShallowFeature) -> Option<&[f64]> {
        match f {
            ShallowFeature::MotionStats => self.motion_stats.as_deref(),
            ShallowFeature::Mfcc => self.mfcc.as_deref(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PreparedData {
    pub samples: Vec<PreparedSample>,
    /// Ids of segments without a binary label (sedation levels).
    pub excluded: Vec<String>,
}

fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "pgm" | "ppm" | "pnm"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::data(format!("no frame images in {}", dir.display())));
    }
    Ok(paths)
}

fn crops(frames: &[Image], keys: &[usize], roi: &RoiSpec, kind: RoiKind, size: Option<usize>) -> Result<Vec<Image>> {
    keys.iter()
        .map(|&i| {
            let f = &frames[i];
            let bx = roi
                .box_for(i, f.width(), f.height(), kind)
                .ok_or_else(|| Error::data(format!("no {kind:?} ROI for frame {i}")))?;
            match size {
                Some(s) => crop_roi(f, &bx, s),
                None => f.crop(bx.x, bx.y, bx.width, bx.height),
            }
        })
        .collect()
}

fn motion_stats(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let sum: f64 = values.iter().sum();
    let mean = sum / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let max = values.iter().copied().fold(0.0, f64::max);
    vec![mean, max, var.sqrt(), sum]
}

fn prepare_sample(
    manifest: &Manifest,
    rec: &SampleRecord,
    index: usize,
    label: PainLabel,
    cfg: &RunConfig,
    wanted: &[Indicator],
) -> Result<PreparedSample> {
    let want = |i| wanted.contains(&i);
    let mut out = PreparedSample {
        sample_id: rec.sample_id.clone(),
        subject_id: rec.subject_id.clone(),
        label,
        face_score: rec.face_score,
        body_score: rec.body_score,
        sound_score: rec.sound_score,
        face: None,
        body: None,
        motion: None,
        motion_stats: None,
        spectrograms: None,
        mfcc: None,
    };
    let need_face = want(Indicator::Face) && rec.face_roi.is_present();
    let need_body = want(Indicator::Body) && rec.body_roi.is_present();
    if need_face || need_body {
        let frames = list_frames(&manifest.frames_dir(rec))?
            .iter()
            .map(Image::load)
            .collect::<Result<Vec<_>>>()?;
        let mut rng = stream(cfg.seed, "keyframes", index as u64);
        let keys = keyframe_indices(frames.len(), cfg.keyframes, &mut rng)?;
        let size = Some(cfg.input_size);
        if need_face {
            out.face = Some(crops(&frames, &keys, &rec.face_roi, RoiKind::Face, size)?);
        }
        if need_body {
            out.body = Some(crops(&frames, &keys, &rec.body_roi, RoiKind::Body, size)?);
            let native = crops(&frames, &keys, &rec.body_roi, RoiKind::Body, None)?;
            let (w, h) = (native[0].width(), native[0].height());
            if native.iter().any(|c| c.width() != w || c.height() != h) {
                return Err(Error::data("body ROI size changes between frames"));
            }
            let moves = native
                .windows(2)
                .map(|p| motion_image(&p[0], &p[1], cfg.motion_threshold))
                .collect::<Result<Vec<_>>>()?;
            let totals: Vec<f64> = moves.iter().map(total_motion).collect();
            out.motion_stats = Some(if totals.is_empty() {
                vec![0.0; 4]
            } else {
                motion_stats(&totals)
            });
            let mut images = vec![Image::filled(cfg.input_size, cfg.input_size, 1, 0.0)];
            images.extend(
                moves
                    .iter()
                    .map(|m| m.to_image().resize(cfg.input_size, cfg.input_size)),
            );
            out.motion = Some(images);
        }
    }
    if want(Indicator::Sound) {
        if let Some(path) = manifest.audio_path(rec) {
            let seg = load_audio(&path)?;
            let render = |s: &AudioSegment| -> Result<Image> {
                render_spectrogram_image(&stft(s, cfg.stft_window, cfg.stft_hop)?, cfg.input_size)
            };
            let mut images = vec![render(&seg)?];
            for v in augment_audio(&seg, derive_seed(cfg.seed, "audio-augment", index as u64)) {
                images.push(render(&v)?);
            }
            out.spectrograms = Some(images);
            out.mfcc = Some(mfcc(&seg, &cfg.mfcc)?.pooled);
        }
    }
    Ok(out)
}

/// Loads and preprocesses the modalities of `indicators` for every
/// labelled segment of the manifest.
pub fn prepare(manifest: &Manifest, cfg: &RunConfig, indicators: &[Indicator]) -> Result<PreparedData> {
    let mut labelled = Vec::new();
    let mut excluded = Vec::new();
    for (i, rec) in manifest.samples.iter().enumerate() {
        match rec.label()? {
            Some(l) => labelled.push((i, rec, l)),
            None => excluded.push(rec.sample_id.clone()),
        }
    }
    let samples = labelled
        .par_iter()
        .map(|&(i, rec, label)| {
            prepare_sample(manifest, rec, i, label, cfg, indicators)
                .map_err(|e| e.in_stage(format!("sample {}", rec.sample_id)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedData { samples, excluded })
}

/// Evenly spread key-frame positions used as level-1 training images.
pub fn level1_frames(keyframes: usize, count: usize) -> Vec<usize> {
    (0..count).map(|j| (2 * j + 1) * keyframes / (2 * count)).collect()
}

/// The subject that follows the held-out one (cyclically) provides the
/// validation data for early stopping.
pub fn validation_subject(fold: &FoldPlan) -> &str {
    fold.train_subjects
        .iter()
        .find(|s| s.as_str() > fold.held_out.as_str())
        .unwrap_or(&fold.train_subjects[0])
}

/// What one approach produced on one fold.
pub struct FoldResult {
    pub approach: Approach,
    pub held_out: String,
    /// `(sample index, pain probability)` for held-out segments.
    pub predictions: Vec<(usize, f64)>,
    pub model: Option<IndicatorModel>,
    /// `(level, curve)` pairs.
    pub curves: Vec<(usize, TrainingCurve)>,
}

struct FoldData<'a> {
    data: &'a PreparedData,
    fit: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

fn split<'a>(data: &'a PreparedData, fold: &FoldPlan, has: impl Fn(&PreparedSample) -> bool) -> FoldData<'a> {
    let val_subject = validation_subject(fold);
    let keep = |idx: &[usize]| -> Vec<usize> { idx.iter().copied().filter(|&i| has(&data.samples[i])).collect() };
    let (val, fit): (Vec<usize>, Vec<usize>) = keep(&fold.train_indices)
        .into_iter()
        .partition(|&i| data.samples[i].subject_id == val_subject);
    FoldData {
        data,
        fit,
        val,
        test: keep(&fold.test_indices),
    }
}

fn missing_score(s: &PreparedSample, ind: Indicator) -> Error {
    Error::data(format!("sample {}: missing {ind} score", s.sample_id))
}

/// Test-row predictions, the fitted model and per-level training curves.
type Trained = (Vec<(usize, f64)>, IndicatorModel, Vec<(usize, TrainingCurve)>);

fn train_frames(
    fd: &FoldData,
    approach: Approach,
    arch: Architecture,
    src: FrameSource,
    cfg: &RunConfig,
    seed: u64,
) -> Result<Trained> {
    let ind = approach.indicator();
    let samples = &fd.data.samples;
    let frames = |i: usize| samples[i].frames(src).expect("split keeps samples with frames");
    let keys = level1_frames(cfg.keyframes, cfg.level1_frames);
    let images = |idx: &[usize]| -> Result<Vec<ImageSample>> {
        let mut out = Vec::new();
        for &i in idx {
            let s = &samples[i];
            let score = s.score(ind).ok_or_else(|| missing_score(s, ind))?;
            for &k in &keys {
                out.push(ImageSample {
                    id: format!("{}#{k}", s.sample_id),
                    variants: vec![frames(i)[k].clone()],
                    score,
                });
            }
        }
        Ok(out)
    };
    let level1 = Level1Config {
        indicator: ind,
        spatial: cfg.spatial(arch, OutputKind::Linear),
        train: cfg.level1.with_seed(derive_seed(seed, "level1", 0)),
        augment_images: cfg.augment_images,
    };
    let (net, c1) = train_indicator_model(&images(&fd.fit)?, &images(&fd.val)?, &level1)?;

    let spatial_cfg = net.config.clone();
    let inputs = |i: usize| -> Result<Vec<Tensor>> { frames(i).iter().map(|f| image_input(f, &spatial_cfg)).collect() };
    let raw = |idx: &[usize]| -> Result<Vec<Vec<Vec<f64>>>> {
        idx.iter()
            .map(|&i| inputs(i)?.iter().map(|t| Ok(net.features(t)?.into_data())).collect())
            .collect()
    };
    let fit_raw = raw(&fd.fit)?;
    let val_raw = raw(&fd.val)?;
    let calibration = FeatureScaler::fit(fit_raw.iter().flatten().map(Vec::as_slice))?;
    let sequences = |idx: &[usize], rows: Vec<Vec<Vec<f64>>>| -> Result<Vec<SequenceSample>> {
        idx.iter()
            .zip(rows)
            .map(|(&i, rows)| {
                let steps = rows.len();
                let dim = net.feature_dim();
                let mut data = Vec::with_capacity(steps * dim);
                for mut r in rows {
                    calibration.apply(&mut r);
                    data.extend(r);
                }
                Ok(SequenceSample {
                    id: samples[i].sample_id.clone(),
                    steps: Tensor::new(vec![steps, dim], data)?,
                    label: samples[i].label,
                })
            })
            .collect()
    };
    let fit_seq = sequences(&fd.fit, fit_raw)?;
    let val_seq = sequences(&fd.val, val_raw)?;
    let level2 = cfg.level2.with_seed(derive_seed(seed, "level2", 0));
    let (head, c2) = train_temporal_model(&fit_seq, &val_seq, &cfg.temporal, cfg.keyframes, &level2)?;
    let model = IndicatorModel {
        indicator: ind,
        spatial: net,
        temporal: Some(head),
        calibration,
    };
    let preds = fd
        .test
        .iter()
        .map(|&i| {
            let p = model.pain_probability(&ModelInput::Sequence(inputs(i)?))?;
            Ok((i, p.expect("sequence input is present")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((preds, model, vec![(1, c1), (2, c2)]))
}

fn train_spectrogram(fd: &FoldData, cfg: &RunConfig, seed: u64) -> Result<Trained> {
    let samples = &fd.data.samples;
    let specs = |i: usize| {
        samples[i]
            .spectrograms
            .as_deref()
            .expect("split keeps samples with audio")
    };
    let images = |idx: &[usize], all_variants: bool| -> Result<Vec<ImageSample>> {
        idx.iter()
            .map(|&i| {
                let s = &samples[i];
                let score = s.sound_score.ok_or_else(|| missing_score(s, Indicator::Sound))?;
                let variants = if all_variants {
                    specs(i).to_vec()
                } else {
                    vec![specs(i)[0].clone()]
                };
                Ok(ImageSample {
                    id: s.sample_id.clone(),
                    variants,
                    score,
                })
            })
            .collect()
    };
    let level1 = Level1Config {
        indicator: Indicator::Sound,
        spatial: cfg.spatial(Architecture::Vgg, OutputKind::Sigmoid),
        train: cfg.level1.with_seed(derive_seed(seed, "level1", 0)),
        augment_images: false,
    };
    let (net, c1) = train_indicator_model(&images(&fd.fit, true)?, &images(&fd.val, false)?, &level1)?;
    let model = IndicatorModel {
        indicator: Indicator::Sound,
        calibration: FeatureScaler::identity(net.feature_dim()),
        spatial: net,
        temporal: None,
    };
    let preds = fd
        .test
        .iter()
        .map(|&i| {
            let x = image_input(&specs(i)[0], &model.spatial.config)?;
            let p = model.pain_probability(&ModelInput::Image(x))?;
            Ok((i, p.expect("image input is present")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((preds, model, vec![(1, c1)]))
}

fn train_shallow(
    fd: &FoldData,
    kind: ShallowKind,
    feature: ShallowFeature,
    cfg: &RunConfig,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    let samples = &fd.data.samples;
    let feats = |i: usize| {
        samples[i]
            .shallow_features(feature)
            .expect("split keeps samples with features")
    };
    let train: Vec<usize> = fd.fit.iter().chain(&fd.val).copied().collect();
    let data = LabeledDataset::new(
        train.iter().map(|&i| feats(i).to_vec()).collect(),
        train.iter().map(|&i| usize::from(samples[i].label.is_pain())).collect(),
    )?;
    let clf: Box<dyn Classifier> = match kind {
        ShallowKind::GaussianNb => Box::new(GaussianNb::fit(&data)?),
        ShallowKind::Knn => Box::new(Knn::fit(&data, cfg.knn_k.min(data.len()))?),
        ShallowKind::RandomForest => Box::new(RandomForest::fit(
            &data,
            &RandomForestConfig {
                n_trees: cfg.rf_trees,
                seed,
                ..RandomForestConfig::default()
            },
        )?),
    };
    fd.test
        .iter()
        .map(|&i| Ok((i, clf.predict(feats(i))?.probability_of(1))))
        .collect()
}

fn run_fold(
    data: &PreparedData,
    fold: &FoldPlan,
    fold_index: usize,
    approach: Approach,
    cfg: &RunConfig,
) -> Result<FoldResult> {
    let seed = derive_seed(cfg.seed, approach.slug(), fold_index as u64);
    let method = approach.method();
    let fd = split(data, fold, |s| match method {
        Method::Frames(_, src) => s.frames(src).is_some(),
        Method::Shallow(_, f) => s.shallow_features(f).is_some(),
        Method::Spectrogram => s.spectrograms.is_some(),
    });
    let mut out = FoldResult {
        approach,
        held_out: fold.held_out.clone(),
        predictions: Vec::new(),
        model: None,
        curves: Vec::new(),
    };
    if fd.test.is_empty() {
        return Ok(out);
    }
    if fd.fit.is_empty() {
        return Err(Error::data("no training segments for this fold"));
    }
    match method {
        Method::Frames(arch, src) => {
            let (p, m, c) = train_frames(&fd, approach, arch, src, cfg, seed)?;
            (out.predictions, out.model, out.curves) = (p, Some(m), c);
        }
        Method::Spectrogram => {
            let (p, m, c) = train_spectrogram(&fd, cfg, seed)?;
            (out.predictions, out.model, out.curves) = (p, Some(m), c);
        }
        Method::Shallow(kind, feature) => out.predictions = train_shallow(&fd, kind, feature, cfg, seed)?,
    }
    Ok(out)
}

/// Out-of-fold predictions of every approach of one indicator plus the
/// per-fold models and training curves.
pub struct IndicatorRun {
    pub indicator: Indicator,
    pub table: PredictionTable,
    pub folds: Vec<FoldResult>,
}

/// Leave-one-subject-out training and prediction for `indicator`.
pub fn train_indicator(data: &PreparedData, indicator: Indicator, cfg: &RunConfig) -> Result<IndicatorRun> {
    if indicator == Indicator::Fused {
        return Err(Error::contract("the fused decision is not trained"));
    }
    if !data.samples.iter().any(|s| s.has(indicator)) {
        return Err(Error::data(format!("no segment has {indicator} data")));
    }
    let subjects: Vec<&str> = data.samples.iter().map(|s| s.subject_id.as_str()).collect();
    let folds = loso_folds(&subjects)?;
    let jobs: Vec<(usize, Approach)> = (0..folds.len())
        .flat_map(|f| Approach::for_indicator(indicator).into_iter().map(move |a| (f, a)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(f, a)| {
            run_fold(data, &folds[f], f, a, cfg)
                .map_err(|e| e.in_stage(format!("{} fold {}", a.name(), folds[f].held_out)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut probs: BTreeMap<usize, BTreeMap<String, f64>> = BTreeMap::new();
    for r in &results {
        for &(i, p) in &r.predictions {
            probs.entry(i).or_default().insert(r.approach.name().to_string(), p);
        }
    }
    let rows = data
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| PredictionRow {
            sample_id: s.sample_id.clone(),
            subject_id: s.subject_id.clone(),
            label: s.label,
            probabilities: probs.remove(&i).unwrap_or_default(),
        })
        .collect();
    let mut table = PredictionTable::default();
    table.merge(PredictionTable { rows })?;
    Ok(IndicatorRun {
        indicator,
        table,
        folds: results,
    })
}

impl IndicatorRun {
    /// Writes `predictions.json` plus, per deep approach and fold,
    /// `model.ckpt` and `training_curve.csv` under `dir/<indicator>/`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let root = dir.as_ref().join(self.indicator.as_str());
        fs::create_dir_all(&root)?;
        fs::write(
            root.join("predictions.json"),
            serde_json::to_string_pretty(&self.table)?,
        )?;
        for f in &self.folds {
            let Some(model) = &f.model else { continue };
            let d = root.join(f.approach.slug()).join(&f.held_out);
            fs::create_dir_all(&d)?;
            model.save(d.join("model.ckpt"))?;
            let mut csv = String::from("level,epoch,train_loss,val_loss\n");
            for (level, curve) in &f.curves {
                for e in &curve.epochs {
                    writeln!(csv, "{level},{},{},{}", e.epoch, e.train_loss, e.val_loss).expect("write to string");
                }
            }
            fs::write(d.join("training_curve.csv"), csv)?;
        }
        Ok(())
    }
}

/// Merges the `predictions.json` files found under `dir/<indicator>/`.
pub fn load_predictions(dir: impl AsRef<Path>) -> Result<PredictionTable> {
    let mut table = PredictionTable::default();
    let mut found = false;
    for ind in Indicator::MODALITIES {
        let p = dir.as_ref().join(ind.as_str()).join("predictions.json");
        if p.is_file() {
            table.merge(serde_json::from_str(&fs::read_to_string(&p)?)?)?;
            found = true;
        }
    }
    if !found {
        return Err(Error::data(format!("no predictions under {}", dir.as_ref().display())));
    }
    Ok(table)
}
