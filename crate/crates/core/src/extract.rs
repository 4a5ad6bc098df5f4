//! Feature extraction from audio.
//!
//! The neural extractors live outside this crate and hand over XPGF files. For
//! experiments that must re-extract features from modified audio (the noise
//! sweep), [`SpectralExtractor`] is a deterministic stand-in: band-energy
//! posteriors play the role of the PPG and the long-term log spectrum plays
//! the role of the x-vector.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::corpus::{AudioBuffer, FeatureBundle, FeatureMatrix};
use crate::error::{Error, Result};

pub trait FeatureExtractor: Send + Sync {
    fn extract(&self, audio: &AudioBuffer) -> Result<FeatureBundle>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    /// PPG columns.
    pub units: usize,
    /// x-vector length.
    pub xvec_bands: usize,
    pub frame_s: f64,
    pub hop_s: f64,
    pub f_lo_hz: f64,
    pub f_hi_hz: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            units: 12,
            xvec_bands: 24,
            frame_s: 0.025,
            hop_s: 0.01,
            f_lo_hz: 100.0,
            f_hi_hz: 7000.0,
        }
    }
}

pub struct SpectralExtractor {
    cfg: SpectralConfig,
}

impl SpectralExtractor {
    pub fn new(cfg: SpectralConfig) -> Result<Self> {
        if cfg.units < 2 || cfg.xvec_bands < 2 {
            return Err(Error::invalid("need at least 2 bands"));
        }
        if !(cfg.frame_s > 0.0 && cfg.hop_s > 0.0 && cfg.f_lo_hz > 0.0 && cfg.f_lo_hz < cfg.f_hi_hz) {
            return Err(Error::invalid("invalid spectral extractor framing"));
        }
        Ok(Self { cfg })
    }

    pub fn config(&self) -> SpectralConfig {
        self.cfg
    }
}

/// Log-spaced band edges as FFT bin indices, each band at least one bin wide.
fn band_edges(bands: usize, lo: f64, hi: f64, nfft: usize, sr: f64) -> Vec<usize> {
    let nyq_bin = nfft / 2;
    let hi = hi.min(sr / 2.0);
    let mut edges: Vec<usize> = (0..=bands)
        .map(|i| {
            let f = lo * (hi / lo).powf(i as f64 / bands as f64);
            ((f / sr * nfft as f64).round() as usize).min(nyq_bin)
        })
        .collect();
    for i in 1..edges.len() {
        if edges[i] <= edges[i - 1] {
            edges[i] = edges[i - 1] + 1;
        }
    }
    edges
}

struct Spectrogram {
    /// Power per frame and bin `0..=nfft/2`.
    frames: Vec<Vec<f64>>,
    nfft: usize,
}

fn power_spectrogram(audio: &AudioBuffer, frame: usize, hop: usize) -> Spectrogram {
    let x = audio.samples();
    let nfft = frame.next_power_of_two();
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(nfft);
    let window: Vec<f64> = (0..frame)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / frame as f64).cos())
        .collect();
    let count = if x.len() >= frame { (x.len() - frame) / hop + 1 } else { 1 };
    let mut buf = vec![Complex::new(0.0, 0.0); nfft];
    let frames = (0..count)
        .map(|f| {
            buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            for (i, w) in window.iter().enumerate() {
                let v = x.get(f * hop + i).copied().unwrap_or(0.0);
                buf[i] = Complex::new(v * w, 0.0);
            }
            fft.process(&mut buf);
            buf[..=nfft / 2].iter().map(|c| c.norm_sqr()).collect()
        })
        .collect();
    Spectrogram { frames, nfft }
}

fn band_energies(power: &[f64], edges: &[usize]) -> Vec<f64> {
    edges.windows(2).map(|w| power[w[0]..w[1]].iter().sum()).collect()
}

impl FeatureExtractor for SpectralExtractor {
    fn extract(&self, audio: &AudioBuffer) -> Result<FeatureBundle> {
        let sr = f64::from(audio.sample_rate_hz());
        let frame = ((self.cfg.frame_s * sr).round() as usize).max(2);
        let hop = ((self.cfg.hop_s * sr).round() as usize).max(1);
        let spec = power_spectrogram(audio, frame, hop);
        let ppg_edges = band_edges(self.cfg.units, self.cfg.f_lo_hz, self.cfg.f_hi_hz, spec.nfft, sr);
        let xv_edges = band_edges(self.cfg.xvec_bands, self.cfg.f_lo_hz, self.cfg.f_hi_hz, spec.nfft, sr);
        if *ppg_edges.last().unwrap() > spec.nfft / 2 + 1 || *xv_edges.last().unwrap() > spec.nfft / 2 + 1 {
            return Err(Error::invalid("too many bands for the frame length"));
        }

        let energy: Vec<f64> = spec.frames.iter().map(|p| p.iter().sum()).collect();
        let top = energy.iter().cloned().fold(0.0, f64::max);
        if top == 0.0 {
            return Err(Error::Degenerate("audio is silent".into()));
        }
        // a floor relative to the loudest frame keeps the features level-invariant
        let eps = 1e-9 * top;

        let rows: Vec<Vec<f64>> = spec
            .frames
            .iter()
            .map(|p| {
                let e = band_energies(p, &ppg_edges);
                let total: f64 = e.iter().sum::<f64>() + eps * e.len() as f64;
                e.iter().map(|v| (v + eps) / total).collect()
            })
            .collect();

        let active: Vec<usize> = (0..energy.len()).filter(|&i| energy[i] >= 1e-3 * top).collect();
        let mut ltas = vec![0.0; self.cfg.xvec_bands];
        for &i in &active {
            for (acc, e) in ltas.iter_mut().zip(band_energies(&spec.frames[i], &xv_edges)) {
                *acc += (e + eps).ln();
            }
        }
        let n = active.len() as f64;
        ltas.iter_mut().for_each(|v| *v /= n);
        let centre = ltas.iter().sum::<f64>() / ltas.len() as f64;
        let xvec: Vec<f32> = ltas.iter().map(|v| (v - centre) as f32).collect();

        FeatureBundle::new(FeatureMatrix::row_vector(xvec)?, FeatureMatrix::from_rows_f64(&rows)?)
    }
}
