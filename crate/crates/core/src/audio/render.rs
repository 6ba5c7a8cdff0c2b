use super::Spectrogram;
use crate::error::{Error, Result};
use crate::imaging::Image;

const LOG_FLOOR: f64 = 1e-10;

/// Log-magnitude spectrogram as a square 8-bit-range grayscale image.
///
/// Values are min-max normalised to [0, 255] (a flat spectrogram maps to
/// all zeros), low frequencies sit at the bottom and time runs left to
/// right. Resizing averages over each output pixel's footprint.
pub fn render_spectrogram_image(spec: &Spectrogram, out_size: usize) -> Result<Image> {
    if spec.bins == 0 || spec.frames == 0 || spec.magnitudes.is_empty() {
        return Err(Error::contract("empty spectrogram"));
    }
    let logs: Vec<f64> = spec.magnitudes.iter().map(|m| m.max(LOG_FLOOR).ln()).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let mut img = Image::filled(spec.frames, spec.bins, 1, 0.0);
    if range > 0.0 {
        for bin in 0..spec.bins {
            let row = spec.bins - 1 - bin;
            for f in 0..spec.frames {
                let v = (logs[bin * spec.frames + f] - lo) / range * 255.0;
                img.set(f, row, 0, v);
            }
        }
    }
    Ok(img.resize_area(out_size, out_size))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{stft, AudioSegment};

    fn spec_from(bins: usize, frames: usize, f: impl Fn(usize, usize) -> f64) -> Spectrogram {
        let mut magnitudes = vec![0.0; bins * frames];
        for b in 0..bins {
            for t in 0..frames {
                magnitudes[b * frames + t] = f(b, t);
            }
        }
        Spectrogram {
            bins,
            frames,
            magnitudes,
            window: 2 * (bins - 1),
            hop: 1,
            sample_rate: 1.0,
        }
    }

    #[test]
    fn flat_spectrogram_is_black() {
        let img = render_spectrogram_image(&spec_from(9, 7, |_, _| 3.0), 16).unwrap();
        assert!(img.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn time_ramp_brightens_left_to_right() {
        let img = render_spectrogram_image(&spec_from(9, 12, |_, t| (t + 1) as f64), 20).unwrap();
        let px = img.to_bytes();
        for row in px.chunks(20) {
            assert!(row.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn tone_is_one_bright_band() {
        let rate = 8000.0;
        let s = (0..8000)
            .map(|i| 0.5 * (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / rate).sin())
            .collect();
        let spec = stft(&AudioSegment::new(s, rate).unwrap(), 256, 128).unwrap();
        let img = render_spectrogram_image(&spec, 64).unwrap();
        // brightest row per column is the same everywhere
        let brightest: Vec<usize> = (0..64)
            .map(|x| {
                (0..64)
                    .max_by(|&a, &b| img.get(x, a, 0).total_cmp(&img.get(x, b, 0)))
                    .unwrap()
            })
            .collect();
        assert!(brightest.iter().all(|&r| r == brightest[0]));
        // 1 kHz of 4 kHz Nyquist sits three quarters of the way down
        assert!((brightest[0] as f64 - 63.0 * 0.75).abs() <= 2.0, "{}", brightest[0]);
    }
}
