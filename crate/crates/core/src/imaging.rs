//! A small float image type plus PNG / PNM file I/O.

use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Row-major, interleaved-channel image with intensities on a 0-255 scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::contract("image dimensions must be positive"));
        }
        if data.len() != width * height * channels {
            return Err(Error::Shape {
                op: "Image::new",
                expected: format!("{} values", width * height * channels),
                actual: vec![data.len()],
            });
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        Image {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    pub fn same_dims(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Luminance with weights 0.299 / 0.587 / 0.114; single-channel images
    /// are returned unchanged.
    pub fn to_gray(&self) -> Image {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| match px {
                [r, g, b, ..] => 0.299 * r + 0.587 * g + 0.114 * b,
                [v, ..] => *v,
                [] => 0.0,
            })
            .collect();
        Image {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// `[channels, height, width]` tensor scaled to `[0, 1]`.
    pub fn to_tensor(&self) -> Tensor {
        let (w, h, c) = (self.width, self.height, self.channels);
        let mut out = vec![0.0; w * h * c];
        for y in 0..h {
            for x in 0..w {
                for ch in 0..c {
                    out[ch * h * w + y * w + x] = self.get(x, y, ch) / 255.0;
                }
            }
        }
        Tensor::new(vec![c, h, w], out).expect("image dims are positive")
    }

    /// Bilinear sample at a fractional position, clamped to the border.
    pub fn sample(&self, fx: f64, fy: f64, c: usize) -> f64 {
        let fx = fx.clamp(0.0, (self.width - 1) as f64);
        let fy = fy.clamp(0.0, (self.height - 1) as f64);
        let x0 = fx.floor() as usize;
        let y0 = fy.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let ax = fx - x0 as f64;
        let ay = fy - y0 as f64;
        let top = self.get(x0, y0, c) * (1.0 - ax) + self.get(x1, y0, c) * ax;
        let bottom = self.get(x0, y1, c) * (1.0 - ax) + self.get(x1, y1, c) * ax;
        top * (1.0 - ay) + bottom * ay
    }

    /// Bilinear resize with corner-aligned sampling, so the four corner
    /// pixels of the output equal those of the input.
    pub fn resize(&self, out_w: usize, out_h: usize) -> Image {
        let sx = if out_w > 1 {
            (self.width - 1) as f64 / (out_w - 1) as f64
        } else {
            0.0
        };
        let sy = if out_h > 1 {
            (self.height - 1) as f64 / (out_h - 1) as f64
        } else {
            0.0
        };
        let mut out = Image::filled(out_w, out_h, self.channels, 0.0);
        for y in 0..out_h {
            for x in 0..out_w {
                for c in 0..self.channels {
                    out.set(x, y, c, self.sample(x as f64 * sx, y as f64 * sy, c));
                }
            }
        }
        out
    }

    /// Box-filter resize: every output pixel is the area-weighted mean of
    /// the input pixels under its footprint, so thin features survive
    /// strong downscaling.
    pub fn resize_area(&self, out_w: usize, out_h: usize) -> Image {
        let weights = |n_in: usize, n_out: usize| -> Vec<Vec<(usize, f64)>> {
            let scale = n_in as f64 / n_out as f64;
            (0..n_out)
                .map(|o| {
                    let (lo, hi) = (o as f64 * scale, (o + 1) as f64 * scale);
                    let mut w = Vec::new();
                    let mut i = lo.floor() as usize;
                    while (i as f64) < hi && i < n_in {
                        let overlap = (hi.min((i + 1) as f64) - lo.max(i as f64)).max(0.0);
                        if overlap > 0.0 {
                            w.push((i, overlap / scale));
                        }
                        i += 1;
                    }
                    w
                })
                .collect()
        };
        let wx = weights(self.width, out_w);
        let wy = weights(self.height, out_h);
        let mut out = Image::filled(out_w, out_h, self.channels, 0.0);
        for (y, ry) in wy.iter().enumerate() {
            for (x, rx) in wx.iter().enumerate() {
                for c in 0..self.channels {
                    let mut acc = 0.0;
                    for &(iy, a) in ry {
                        for &(ix, b) in rx {
                            acc += a * b * self.get(ix, iy, c);
                        }
                    }
                    out.set(x, y, c, acc);
                }
            }
        }
        out
    }

    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Image> {
        if w == 0 || h == 0 || x + w > self.width || y + h > self.height {
            return Err(Error::contract(format!(
                "crop {w}x{h}+{x}+{y} outside {}x{} image",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h * self.channels);
        for row in y..y + h {
            let start = (row * self.width + x) * self.channels;
            data.extend_from_slice(&self.data[start..start + w * self.channels]);
        }
        Image::new(w, h, self.channels, data)
    }

    pub fn flip_horizontal(&self) -> Image {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                for c in 0..self.channels {
                    out.set(x, y, c, self.get(self.width - 1 - x, y, c));
                }
            }
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Image> {
        let img = image::open(path.as_ref())?;
        let (data, w, h, c) = match img.color().channel_count() {
            1 | 2 => {
                let g = img.to_luma8();
                let (w, h) = g.dimensions();
                (g.into_raw(), w, h, 1)
            }
            _ => {
                let rgb = img.to_rgb8();
                let (w, h) = rgb.dimensions();
                (rgb.into_raw(), w, h, 3)
            }
        };
        Image::new(w as usize, h as usize, c, data.into_iter().map(f64::from).collect())
    }

    /// Quantised 8-bit pixels (rounded, clamped to 0-255).
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect()
    }

    /// Writes PNG, or binary PGM/PPM when the extension is `pgm`/`ppm`/`pnm`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let color = match self.channels {
            1 => image::ExtendedColorType::L8,
            3 => image::ExtendedColorType::Rgb8,
            n => return Err(Error::contract(format!("cannot save {n}-channel image"))),
        };
        image::save_buffer(
            path.as_ref(),
            &self.to_bytes(),
            self.width as u32,
            self.height as u32,
            color,
        )?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resize_preserves_corners_and_constants() {
        let img = Image::new(2, 2, 1, vec![0.0, 255.0, 255.0, 0.0]).unwrap();
        let up = img.resize(5, 5);
        assert_eq!(up.get(0, 0, 0), 0.0);
        assert_eq!(up.get(4, 0, 0), 255.0);
        assert_eq!(up.get(0, 4, 0), 255.0);
        assert_eq!(up.get(4, 4, 0), 0.0);
        let flat = Image::filled(8, 6, 3, 77.0).resize(4, 3);
        assert!(flat.data().iter().all(|&v| (v - 77.0).abs() < 1e-12));
    }

    #[test]
    fn area_resize_keeps_means_and_thin_lines() {
        let mut img = Image::filled(10, 129, 1, 0.0);
        for x in 0..10 {
            img.set(x, 60, 0, 255.0);
        }
        let small = img.resize_area(5, 16);
        let total: f64 = small.data().iter().sum::<f64>() * (10.0 * 129.0) / (5.0 * 16.0);
        assert!((total - 2550.0).abs() < 1e-6);
        assert!(small.data().iter().any(|&v| v > 20.0));
        let flat = Image::filled(7, 9, 2, 31.0).resize_area(3, 20);
        assert!(flat.data().iter().all(|&v| (v - 31.0).abs() < 1e-9));
    }

    #[test]
    fn luminance_weights() {
        let img = Image::new(1, 1, 3, vec![100.0, 50.0, 200.0]).unwrap();
        let g = img.to_gray();
        assert!((g.data()[0] - (29.9 + 29.35 + 22.8)).abs() < 1e-9);
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image::new(3, 2, 3, (0..18).map(|v| (v * 13) as f64).collect()).unwrap();
        for name in ["a.png", "a.ppm"] {
            let p = dir.path().join(name);
            img.save(&p).unwrap();
            assert_eq!(Image::load(&p).unwrap(), img);
        }
    }
}
