//! Audio segments, spectrograms, MFCCs and waveform augmentation.

mod augment;
mod io;
mod mfcc;
mod render;
mod stft;

pub use augment::{
    add_uniform_noise, augment_audio, augmentation_plan, resample, AudioAugment, FREQUENCY_FACTORS, NOISE_LEVELS,
};
pub use io::{load_audio, read_raw_f32, read_wav, write_wav};
pub use mfcc::{dct_ii_ortho, hz_to_mel, mel_filterbank, mel_to_hz, mfcc, pool_coefficients, MfccConfig, MfccFeatures};
pub use render::render_spectrogram_image;
pub use stft::{hann_window, stft, Spectrogram, DEFAULT_HOP, DEFAULT_WINDOW};

use crate::error::{Error, Result};

/// Mono samples in [-1, 1] at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSegment {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl AudioSegment {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::contract(format!("invalid sample rate {sample_rate}")));
        }
        if samples.is_empty() {
            return Err(Error::contract("audio segment is empty"));
        }
        if let Some(bad) = samples.iter().find(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(Error::contract(format!("sample {bad} outside [-1, 1]")));
        }
        Ok(AudioSegment { samples, sample_rate })
    }

    pub fn silence(duration: f64, sample_rate: f64) -> Self {
        let n = (duration * sample_rate).round().max(1.0) as usize;
        AudioSegment {
            samples: vec![0.0; n],
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}
