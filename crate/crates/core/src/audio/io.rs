use std::fs;
use std::path::{Path, PathBuf};

use super::AudioSegment;
use crate::error::{Error, Result};

/// Reads a mono WAV file (16-bit PCM or 32-bit float).
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSegment> {
    let mut reader = hound::WavReader::open(path.as_ref())?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::data(format!(
            "{}: expected mono audio, found {} channels",
            path.as_ref().display(),
            spec.channels
        )));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| f64::from(v).clamp(-1.0, 1.0)))
            .collect::<std::result::Result<_, _>>()?,
        (fmt, bits) => {
            return Err(Error::data(format!(
                "{}: unsupported WAV encoding {fmt:?} {bits}-bit",
                path.as_ref().display()
            )))
        }
    };
    AudioSegment::new(samples, f64::from(spec.sample_rate))
}

/// Writes 16-bit PCM mono; the sample rate is rounded to whole Hz.
pub fn write_wav(path: impl AsRef<Path>, seg: &AudioSegment) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: seg.sample_rate().round() as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path.as_ref(), spec)?;
    for s in seg.samples() {
        w.write_sample((s * 32767.0).round() as i16)?;
    }
    w.finalize()?;
    Ok(())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".rate");
    PathBuf::from(p)
}

/// Headerless little-endian `f32` samples; the rate is read from a text
/// sidecar named `<path>.rate`.
pub fn read_raw_f32(path: impl AsRef<Path>) -> Result<AudioSegment> {
    let path = path.as_ref();
    let rate_file = sidecar(path);
    let rate: f64 = fs::read_to_string(&rate_file)?
        .trim()
        .parse()
        .map_err(|_| Error::data(format!("{}: not a sample rate", rate_file.display())))?;
    let bytes = fs::read(path)?;
    if bytes.len() % 4 != 0 {
        return Err(Error::data(format!(
            "{}: length is not a multiple of 4",
            path.display()
        )));
    }
    let samples = bytes
        .chunks_exact(4)
        .map(|b| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])))
        .collect();
    AudioSegment::new(samples, rate)
}

/// WAV by extension, otherwise raw `f32` with a rate sidecar.
pub fn load_audio(path: impl AsRef<Path>) -> Result<AudioSegment> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("wav") => read_wav(path),
        _ => read_raw_f32(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wav_round_trip_within_quantisation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let seg = AudioSegment::new((0..100).map(|i| (i as f64 / 50.0) - 1.0).collect(), 8000.0).unwrap();
        write_wav(&p, &seg).unwrap();
        let back = load_audio(&p).unwrap();
        assert_eq!(back.sample_rate(), 8000.0);
        for (a, b) in back.samples().iter().zip(seg.samples()) {
            assert!((a - b).abs() < 1.0 / 16000.0);
        }
    }

    #[test]
    fn raw_float_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.f32");
        let vals = [0.25f32, -0.5, 1.0];
        fs::write(&p, vals.iter().flat_map(|v| v.to_le_bytes()).collect::<Vec<_>>()).unwrap();
        fs::write(dir.path().join("a.f32.rate"), "16000\n").unwrap();
        let seg = load_audio(&p).unwrap();
        assert_eq!(seg.samples(), &[0.25, -0.5, 1.0]);
        assert_eq!(seg.sample_rate(), 16000.0);
    }
}
