use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::AudioSegment;
use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 1024;
pub const DEFAULT_HOP: usize = 512;

/// Magnitude spectrogram, `bins x frames`, row-major by bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub bins: usize,
    pub frames: usize,
    pub magnitudes: Vec<f64>,
    pub window: usize,
    pub hop: usize,
    pub sample_rate: f64,
}

impl Spectrogram {
    pub fn at(&self, bin: usize, frame: usize) -> f64 {
        self.magnitudes[bin * self.frames + frame]
    }

    pub fn frame(&self, frame: usize) -> Vec<f64> {
        (0..self.bins).map(|b| self.at(b, frame)).collect()
    }

    /// Centre frequency of `bin` in Hz.
    pub fn bin_hz(&self, bin: usize) -> f64 {
        bin as f64 * self.sample_rate / self.window as f64
    }
}

/// Periodic Hann window.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Hann-windowed short-time Fourier magnitudes with `window / 2 + 1` bins
/// and `1 + (len - window) / hop` frames.
pub fn stft(seg: &AudioSegment, window: usize, hop: usize) -> Result<Spectrogram> {
    if hop == 0 || window == 0 {
        return Err(Error::contract("window and hop must be positive"));
    }
    if window > seg.len() {
        return Err(Error::contract(format!(
            "window {window} longer than signal of {} samples",
            seg.len()
        )));
    }
    let frames = 1 + (seg.len() - window) / hop;
    let bins = window / 2 + 1;
    let hann = hann_window(window);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(window);
    let mut buf = vec![Complex::new(0.0, 0.0); window];
    let mut magnitudes = vec![0.0; bins * frames];
    let x = seg.samples();
    for f in 0..frames {
        let start = f * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex::new(x[start + i] * hann[i], 0.0);
        }
        fft.process(&mut buf);
        for (bin, v) in buf[..bins].iter().enumerate() {
            magnitudes[bin * frames + f] = v.norm();
        }
    }
    Ok(Spectrogram {
        bins,
        frames,
        magnitudes,
        window,
        hop,
        sample_rate: seg.sample_rate(),
    })
}
