use rand::{Rng as _, SeedableRng};
use serde::{Deserialize, Serialize};

use super::AudioSegment;
use crate::rng::Rng;

/// Sample-rate factors for the frequency variants.
pub const FREQUENCY_FACTORS: [f64; 3] = [1.0 / 3.0, 1.0 / 2.0, 2.0 / 3.0];

/// Uniform noise amplitudes.
pub const NOISE_LEVELS: [f64; 6] = [0.001, 0.003, 0.005, 0.01, 0.03, 0.05];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AudioAugment {
    Frequency(f64),
    Noise(f64),
    FrequencyAndNoise(f64, f64),
}

/// The 3 frequency, 6 noise and 18 combined variants, in that order.
pub fn augmentation_plan() -> Vec<AudioAugment> {
    let freq = FREQUENCY_FACTORS.iter().map(|&f| AudioAugment::Frequency(f));
    let noise = NOISE_LEVELS.iter().map(|&a| AudioAugment::Noise(a));
    let both = FREQUENCY_FACTORS
        .iter()
        .flat_map(|&f| NOISE_LEVELS.iter().map(move |&a| AudioAugment::FrequencyAndNoise(f, a)));
    freq.chain(noise).chain(both).collect()
}

/// Linear-interpolation resampling to `new_rate`, keeping the duration.
pub fn resample(seg: &AudioSegment, new_rate: f64) -> AudioSegment {
    let x = seg.samples();
    let n_out = ((seg.duration() * new_rate).round() as usize).max(1);
    let step = seg.sample_rate() / new_rate;
    let last = x.len() - 1;
    let samples = (0..n_out)
        .map(|i| {
            let pos = i as f64 * step;
            let i0 = (pos.floor() as usize).min(last);
            let i1 = (i0 + 1).min(last);
            let frac = (pos - i0 as f64).clamp(0.0, 1.0);
            x[i0] * (1.0 - frac) + x[i1] * frac
        })
        .collect();
    AudioSegment::new(samples, new_rate).expect("interpolation stays within [-1, 1]")
}

/// Adds uniform noise in `[-amplitude, amplitude]`, clamping to [-1, 1].
pub fn add_uniform_noise(seg: &AudioSegment, amplitude: f64, rng: &mut Rng) -> AudioSegment {
    let samples = seg
        .samples()
        .iter()
        .map(|s| (s + rng.gen_range(-amplitude..=amplitude)).clamp(-1.0, 1.0))
        .collect();
    AudioSegment::new(samples, seg.sample_rate()).expect("clamped samples are valid")
}

impl AudioAugment {
    pub fn apply(&self, seg: &AudioSegment, rng: &mut Rng) -> AudioSegment {
        match *self {
            AudioAugment::Frequency(f) => resample(seg, seg.sample_rate() * f),
            AudioAugment::Noise(a) => add_uniform_noise(seg, a, rng),
            AudioAugment::FrequencyAndNoise(f, a) => add_uniform_noise(&resample(seg, seg.sample_rate() * f), a, rng),
        }
    }
}

/// The 27 augmented variants of `seg`, reproducible from `seed`.
pub fn augment_audio(seg: &AudioSegment, seed: u64) -> Vec<AudioSegment> {
    let mut rng = Rng::seed_from_u64(seed);
    augmentation_plan().iter().map(|a| a.apply(seg, &mut rng)).collect()
}
