//! Run configuration, loaded from a TOML file.
//!
//! Every key is optional; missing keys take the desk-scale defaults of
//! [`RunConfig::default`]. Example:
//!
//! ```toml
//! seed = 7
//! input_size = 16
//! head_units = 32
//!
//! [level1]
//! learning_rate = 1e-3
//! max_epochs = 20
//!
//! [synth]
//! subjects = 10
//! sound_separation = 1.5
//! ```
//!
//! Unknown keys are rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audio::MfccConfig;
use crate::error::{Error, Result};
use crate::models::{Architecture, OutputKind, SpatialConfig, TrainConfig, VggConfig};
use crate::synth::SynthConfig;
use crate::temporal::TemporalHeadSpec;
use crate::video::DEFAULT_MOTION_THRESHOLD;

/// Training hyperparameters for one level; the seed comes from the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_delta: f64,
}

impl TrainParams {
    pub fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            min_delta: self.min_delta,
            seed,
        }
    }
}

impl From<TrainConfig> for TrainParams {
    fn from(c: TrainConfig) -> Self {
        TrainParams {
            learning_rate: c.learning_rate,
            batch_size: c.batch_size,
            max_epochs: c.max_epochs,
            patience: c.patience,
            min_delta: c.min_delta,
        }
    }
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainConfig::spatial().into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub synth: SynthConfig,
    /// Frames per segment after key-frame normalisation.
    pub keyframes: usize,
    /// Key frames per segment used as level-1 training images.
    pub level1_frames: usize,
    /// Square network input side.
    pub input_size: usize,
    pub in_channels: usize,
    pub backbone: VggConfig,
    /// Dense width of the VGG head.
    pub head_units: usize,
    /// Dense width of the bilinear classifier.
    pub bilinear_units: usize,
    /// One backbone stream for both sides of the bilinear product.
    pub bilinear_shared: bool,
    pub augment_images: bool,
    pub level1: TrainParams,
    pub level2: TrainParams,
    pub temporal: TemporalHeadSpec,
    pub stft_window: usize,
    pub stft_hop: usize,
    pub mfcc: MfccConfig,
    pub motion_threshold: f64,
    pub knn_k: usize,
    pub rf_trees: usize,
}

impl Default for RunConfig {
    /// Desk scale: miniature backbone on 16x16 inputs, small synthetic set.
    fn default() -> Self {
        RunConfig {
            seed: 0,
            synth: SynthConfig::default(),
            keyframes: 32,
            level1_frames: 4,
            input_size: 16,
            in_channels: 1,
            backbone: VggConfig::miniature(4),
            head_units: 32,
            bilinear_units: 64,
            bilinear_shared: false,
            augment_images: true,
            level1: TrainParams {
                learning_rate: 1e-3,
                max_epochs: 30,
                ..TrainParams::default()
            },
            level2: TrainParams {
                learning_rate: 1e-3,
                max_epochs: 30,
                ..TrainConfig::temporal().into()
            },
            temporal: TemporalHeadSpec::default(),
            stft_window: 256,
            stft_hop: 128,
            mfcc: MfccConfig {
                window: 256,
                hop: 128,
                ..MfccConfig::default()
            },
            motion_threshold: DEFAULT_MOTION_THRESHOLD,
            knn_k: 3,
            rf_trees: 100,
        }
    }
}

impl RunConfig {
    /// Reference scale: full VGG16 on 224x224 RGB inputs, 512-wide head,
    /// lr 1e-4, up to 100 epochs, 9 s audio at 44.1 kHz.
    pub fn reference() -> Self {
        RunConfig {
            synth: SynthConfig {
                frame_size: 224,
                sample_rate: 44_100.0,
                audio_seconds: 9.0,
                ..SynthConfig::default()
            },
            level1_frames: 32,
            input_size: 224,
            in_channels: 3,
            backbone: VggConfig::vgg16(),
            head_units: 512,
            bilinear_units: 64,
            level1: TrainConfig::spatial().into(),
            level2: TrainConfig::temporal().into(),
            stft_window: 1024,
            stft_hop: 512,
            mfcc: MfccConfig::default(),
            ..RunConfig::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.keyframes == 0 || self.level1_frames == 0 || self.level1_frames > self.keyframes {
            return bad("need 0 < level1_frames <= keyframes");
        }
        if !matches!(self.in_channels, 1 | 3) {
            return bad("in_channels must be 1 or 3");
        }
        if self.head_units == 0 || self.bilinear_units == 0 || self.knn_k == 0 || self.rf_trees == 0 {
            return bad("head widths, knn_k and rf_trees must be positive");
        }
        if self.stft_window == 0 || self.stft_hop == 0 {
            return bad("STFT window and hop must be positive");
        }
        for p in [&self.level1, &self.level2] {
            if p.learning_rate.is_nan() || p.learning_rate <= 0.0 || p.batch_size == 0 || p.max_epochs == 0 {
                return bad("learning rate, batch size and epochs must be positive");
            }
        }
        self.backbone.output_dims(self.input_size, true)?;
        Ok(())
    }

    pub fn spatial(&self, architecture: Architecture, output: OutputKind) -> SpatialConfig {
        let head_units = match architecture {
            Architecture::Vgg => self.head_units,
            Architecture::Bilinear { .. } => self.bilinear_units,
        };
        SpatialConfig {
            architecture,
            backbone: self.backbone.clone(),
            in_channels: self.in_channels,
            input_size: self.input_size,
            head_units,
            output,
        }
    }
}
