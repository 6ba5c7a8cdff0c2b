use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{stft, AudioSegment, DEFAULT_HOP, DEFAULT_WINDOW};
use crate::error::{Error, Result};

const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfccConfig {
    pub window: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub n_coeffs: usize,
    /// Length of the pooled vector after zero padding or truncation.
    pub pooled_len: usize,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            window: DEFAULT_WINDOW,
            hop: DEFAULT_HOP,
            n_mels: 40,
            n_coeffs: 20,
            pooled_len: 388,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfccFeatures {
    /// One row of `n_coeffs` values per frame.
    pub coefficients: Vec<Vec<f64>>,
    /// Per-coefficient mean, std, min and max, padded to `pooled_len`.
    pub pooled: Vec<f64>,
}

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters (peak 1) spaced evenly on the mel scale between 0 Hz
/// and Nyquist, evaluated at the `window / 2 + 1` FFT bin frequencies.
pub fn mel_filterbank(n_mels: usize, window: usize, sample_rate: f64) -> Vec<Vec<f64>> {
    let bins = window / 2 + 1;
    let max_mel = hz_to_mel(sample_rate / 2.0);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(max_mel * i as f64 / (n_mels + 1) as f64))
        .collect();
    (0..n_mels)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .map(|b| {
                    let f = b as f64 * sample_rate / window as f64;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= mid {
                        (f - lo) / (mid - lo)
                    } else {
                        (hi - f) / (hi - mid)
                    }
                })
                .collect()
        })
        .collect()
}

/// Orthonormal type-II DCT, first `n_out` coefficients.
pub fn dct_ii_ortho(x: &[f64], n_out: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..n_out)
        .map(|k| {
            let s: f64 = x
                .iter()
                .enumerate()
                .map(|(i, v)| v * (PI * k as f64 * (i as f64 + 0.5) / n).cos())
                .sum();
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            s * scale
        })
        .collect()
}

/// Per-frame log mel energies (power spectrum through the filterbank).
pub(crate) fn log_mel_frames(seg: &AudioSegment, cfg: &MfccConfig) -> Result<Vec<Vec<f64>>> {
    let bins = cfg.window / 2 + 1;
    if cfg.n_coeffs == 0 || cfg.n_coeffs > cfg.n_mels || cfg.n_mels > bins {
        return Err(Error::contract(format!(
            "need 0 < n_coeffs ({}) <= n_mels ({}) <= frequency bins ({bins})",
            cfg.n_coeffs, cfg.n_mels
        )));
    }
    let spec = stft(seg, cfg.window, cfg.hop)?;
    let bank = mel_filterbank(cfg.n_mels, cfg.window, seg.sample_rate());
    Ok((0..spec.frames)
        .map(|f| {
            let power: Vec<f64> = spec.frame(f).iter().map(|m| m * m).collect();
            bank.iter()
                .map(|filt| {
                    let e: f64 = filt.iter().zip(&power).map(|(w, p)| w * p).sum();
                    e.max(LOG_FLOOR).ln()
                })
                .collect()
        })
        .collect())
}

/// Mean, population std, min and max of each coefficient over frames,
/// zero padded or truncated to `len`.
pub fn pool_coefficients(coefficients: &[Vec<f64>], len: usize) -> Vec<f64> {
    let n_coeffs = coefficients.first().map_or(0, |r| r.len());
    let n = coefficients.len() as f64;
    let mut mean = vec![0.0; n_coeffs];
    let mut std = vec![0.0; n_coeffs];
    let mut min = vec![f64::INFINITY; n_coeffs];
    let mut max = vec![f64::NEG_INFINITY; n_coeffs];
    for row in coefficients {
        for (k, &v) in row.iter().enumerate() {
            mean[k] += v / n;
            min[k] = min[k].min(v);
            max[k] = max[k].max(v);
        }
    }
    for row in coefficients {
        for (k, &v) in row.iter().enumerate() {
            std[k] += (v - mean[k]).powi(2) / n;
        }
    }
    std.iter_mut().for_each(|v| *v = v.sqrt());
    let mut pooled: Vec<f64> = [mean, std, min, max].concat();
    pooled.resize(len, 0.0);
    pooled
}

/// Mel-frequency cepstral coefficients of a segment.
pub fn mfcc(seg: &AudioSegment, cfg: &MfccConfig) -> Result<MfccFeatures> {
    let coefficients: Vec<Vec<f64>> = log_mel_frames(seg, cfg)?
        .iter()
        .map(|frame| dct_ii_ortho(frame, cfg.n_coeffs))
        .collect();
    let pooled = pool_coefficients(&coefficients, cfg.pooled_len);
    Ok(MfccFeatures { coefficients, pooled })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng as _, SeedableRng};

    fn small() -> MfccConfig {
        MfccConfig {
            window: 256,
            hop: 128,
            n_mels: 26,
            n_coeffs: 20,
            pooled_len: 388,
        }
    }

    #[test]
    fn mel_scale_round_trips() {
        for hz in [0.0, 440.0, 1000.0, 8000.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
        assert!((hz_to_mel(700.0) - 2595.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn silence_leaves_only_the_dc_coefficient() {
        let seg = AudioSegment::silence(0.5, 8000.0);
        let f = mfcc(&seg, &small()).unwrap();
        for row in &f.coefficients {
            assert_eq!(row.len(), 20);
            assert!(row[0].abs() > 1.0);
            assert!(row[1..].iter().all(|c| c.abs() < 1e-9));
        }
        assert_eq!(f.pooled.len(), 388);
    }

    #[test]
    fn rejects_bad_band_ordering() {
        let seg = AudioSegment::silence(0.5, 8000.0);
        let cfg = MfccConfig { n_mels: 10, ..small() };
        assert!(matches!(mfcc(&seg, &cfg), Err(Error::Contract(_))));
        let cfg = MfccConfig { n_mels: 200, ..small() };
        assert!(mfcc(&seg, &cfg).is_err());
    }

    #[test]
    fn deterministic() {
        let mut rng = crate::rng::Rng::seed_from_u64(1);
        let s: Vec<f64> = (0..4000).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let seg = AudioSegment::new(s, 8000.0).unwrap();
        assert_eq!(mfcc(&seg, &small()).unwrap(), mfcc(&seg, &small()).unwrap());
    }

    #[test]
    fn shift_by_whole_hops_shifts_frames() {
        let rate = 8000.0;
        let tone: Vec<f64> = (0..4000)
            .map(|i| 0.4 * (2.0 * PI * 523.0 * i as f64 / rate).sin())
            .collect();
        let k = 3;
        let mut shifted = vec![0.0; k * 128];
        shifted.extend_from_slice(&tone);
        let a = mfcc(&AudioSegment::new(tone, rate).unwrap(), &small()).unwrap();
        let b = mfcc(&AudioSegment::new(shifted, rate).unwrap(), &small()).unwrap();
        for (j, row) in a.coefficients.iter().enumerate() {
            for (x, y) in row.iter().zip(&b.coefficients[j + k]) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn pooling_layout() {
        let rows = vec![vec![1.0, 10.0], vec![3.0, 10.0]];
        let p = pool_coefficients(&rows, 10);
        assert_eq!(p, vec![2.0, 10.0, 1.0, 0.0, 1.0, 10.0, 3.0, 10.0, 0.0, 0.0]);
        assert_eq!(pool_coefficients(&rows, 3), vec![2.0, 10.0, 1.0]);
    }
}
