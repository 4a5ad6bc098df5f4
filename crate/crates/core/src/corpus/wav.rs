use std::path::Path;

use crate::error::{Error, Result};

pub const MIN_SAMPLE_RATE: u32 = 8000;

/// Mono audio with samples in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("audio buffer is empty"));
        }
        if sample_rate_hz < MIN_SAMPLE_RATE {
            return Err(Error::invalid(format!(
                "sample rate {sample_rate_hz} Hz below {MIN_SAMPLE_RATE} Hz"
            )));
        }
        if let Some(i) = samples
            .iter()
            .position(|s| !s.is_finite() || s.abs() > 1.0)
        {
            return Err(Error::invalid(format!(
                "sample {i} = {} is not a finite value in [-1, 1]",
                samples[i]
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Reads 16-bit integer or 32-bit float PCM WAV, averaging channels to mono.
pub fn read_wav(path: &Path) -> Result<AudioBuffer> {
    let wav_err = |message: String| Error::Wav {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = hound::WavReader::open(path).map_err(|e| wav_err(e.to_string()))?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels);
    if channels == 0 {
        return Err(wav_err("zero channels".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_err(format!("truncated or corrupt data: {e}")))?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_err(format!("truncated or corrupt data: {e}")))?,
        (format, bits) => {
            return Err(wav_err(format!(
                "unsupported encoding: {bits}-bit {format:?}"
            )))
        }
    };
    if !interleaved.len().is_multiple_of(channels) {
        return Err(wav_err("truncated final frame".into()));
    }
    let mono: Vec<f64> = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    AudioBuffer::new(mono, spec.sample_rate).map_err(|e| wav_err(e.to_string()))
}

/// Writes mono 16-bit PCM, quantizing by `round(x * 32768)` clamped to the i16 range.
pub fn write_wav(audio: &AudioBuffer, path: &Path) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let wav_err = |e: hound::Error| Error::Wav {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    for &s in &audio.samples {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(q).map_err(wav_err)?;
    }
    writer.finalize().map_err(wav_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_raw<T: hound::Sample + Copy>(path: &Path, spec: hound::WavSpec, data: &[T]) {
        let mut w = hound::WavWriter::create(path, spec).unwrap();
        for &d in data {
            w.write_sample(d).unwrap();
        }
        w.finalize().unwrap();
    }

    fn spec(channels: u16, bits: u16, fmt: hound::SampleFormat) -> hound::WavSpec {
        hound::WavSpec {
            channels,
            sample_rate: 16000,
            bits_per_sample: bits,
            sample_format: fmt,
        }
    }

    #[test]
    fn mono_16_bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let data: Vec<i16> = (0..16000).map(|i| ((i % 200) as i16 - 100) * 100).collect();
        write_raw(&path, spec(1, 16, hound::SampleFormat::Int), &data);
        let a = read_wav(&path).unwrap();
        assert_eq!(a.len(), 16000);
        assert_eq!(a.sample_rate_hz(), 16000);
        assert!(a.samples().iter().all(|s| s.abs() <= 1.0));
    }

    #[test]
    fn min_sample_maps_to_minus_one() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        write_raw(&path, spec(1, 16, hound::SampleFormat::Int), &[i16::MIN, 0, i16::MAX]);
        let a = read_wav(&path).unwrap();
        assert_eq!(a.samples()[0], -1.0);
        assert_eq!(a.samples()[2], 32767.0 / 32768.0);
    }

    #[test]
    fn antiphase_stereo_downmixes_to_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.wav");
        let data: Vec<i16> = (0..400)
            .flat_map(|i| {
                let x = ((i * 37) % 20000) as i16 - 10000;
                [x, -x]
            })
            .collect();
        write_raw(&path, spec(2, 16, hound::SampleFormat::Int), &data);
        let a = read_wav(&path).unwrap();
        assert_eq!(a.len(), 400);
        assert!(a.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn float_wav() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.wav");
        write_raw(&path, spec(1, 32, hound::SampleFormat::Float), &[0.5f32, -0.25]);
        let a = read_wav(&path).unwrap();
        assert_eq!(a.samples(), &[0.5, -0.25]);
    }

    #[test]
    fn unsupported_encoding() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        write_raw(&path, spec(1, 8, hound::SampleFormat::Int), &[1i8, 2, 3]);
        let err = read_wav(&path).unwrap_err().to_string();
        assert!(err.contains("unsupported"), "{err}");
    }

    #[test]
    fn truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.wav");
        let data = vec![100i16; 1000];
        write_raw(&path, spec(1, 16, hound::SampleFormat::Int), &data);
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 301]).unwrap();
        assert!(read_wav(&path).is_err());
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.wav");
        let a = AudioBuffer::new(vec![0.5, -1.0, 0.0, 0.25], 16000).unwrap();
        write_wav(&a, &path).unwrap();
        assert_eq!(read_wav(&path).unwrap(), a);
    }

    #[test]
    fn buffer_invariants() {
        assert!(AudioBuffer::new(vec![], 16000).is_err());
        assert!(AudioBuffer::new(vec![0.0], 4000).is_err());
        assert!(AudioBuffer::new(vec![f64::NAN], 16000).is_err());
        assert!(AudioBuffer::new(vec![1.5], 16000).is_err());
    }
}
