//! Cepstral peak prominence.
//!
//! Per frame: Hann window, zero-padded FFT, natural-log magnitude spectrum,
//! inverse FFT to the real cepstrum. The power cepstrum `c(q)^2` is averaged
//! over a 1 ms quefrency window and expressed in dB. A least-squares line is
//! fitted to the dB cepstrum over quefrencies `[1 ms, 1/f0_min]`; CPP is the
//! height of the largest cepstral value in `[1/f0_max, 1/f0_min]` above that
//! line.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{frame_count, AcousticConfig};
use crate::corpus::AudioBuffer;
use crate::error::{Error, Result};

const TREND_START_S: f64 = 0.001;
const LOG_FLOOR: f64 = 1e-12;
const SMOOTH_HALF_WIDTH_S: f64 = 0.0005;

pub(crate) struct Cepstrum {
    frame: usize,
    window: Vec<f64>,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    ifft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    buf: Vec<Complex<f64>>,
}

impl Cepstrum {
    pub(crate) fn new(frame: usize) -> Self {
        let nfft = (2 * frame).next_power_of_two();
        let mut planner = FftPlanner::new();
        let window = (0..frame)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (frame - 1).max(1) as f64).cos())
            .collect();
        Self {
            frame,
            window,
            fft: planner.plan_fft_forward(nfft),
            ifft: planner.plan_fft_inverse(nfft),
            buf: vec![Complex::new(0.0, 0.0); nfft],
        }
    }

    pub(crate) fn nfft(&self) -> usize {
        self.buf.len()
    }

    /// Quefrency-smoothed dB power cepstrum for bins `0..=max_bin`, plus the raw power.
    pub(crate) fn db(&mut self, x: &[f64], max_bin: usize, half_width: usize) -> (Vec<f64>, Vec<f64>) {
        let nfft = self.buf.len();
        for ((b, &s), w) in self.buf.iter_mut().zip(x).zip(&self.window) {
            *b = Complex::new(s * w, 0.0);
        }
        self.buf[self.frame..].fill(Complex::new(0.0, 0.0));
        self.fft.process(&mut self.buf);
        for b in &mut self.buf {
            *b = Complex::new(b.norm().max(LOG_FLOOR).ln(), 0.0);
        }
        self.ifft.process(&mut self.buf);
        let top = (max_bin + half_width).min(nfft / 2);
        let power: Vec<f64> = self.buf[..=top]
            .iter()
            .map(|c| (c.re / nfft as f64).powi(2))
            .collect();
        let smoothed = (0..=max_bin.min(top))
            .map(|q| {
                let lo = q.saturating_sub(half_width);
                let hi = (q + half_width).min(top);
                let avg = power[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
                10.0 * avg.max(LOG_FLOOR * LOG_FLOOR).log10()
            })
            .collect();
        (smoothed, power)
    }
}

/// Least-squares line through `(xs[i], ys[i])`, returned as `(slope, intercept)`.
fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Prominence of one frame's cepstral peak, with the peak quefrency in seconds.
/// `None` for an all-zero frame.
pub fn frame_cpp_db(frame: &[f64], sample_rate: u32, cfg: &AcousticConfig) -> Option<(f64, f64)> {
    let mut c = Cepstrum::new(frame.len());
    prominence(&mut c, frame, sample_rate, cfg)
}

fn prominence(
    c: &mut Cepstrum,
    frame: &[f64],
    sample_rate: u32,
    cfg: &AcousticConfig,
) -> Option<(f64, f64)> {
    if frame.iter().all(|&s| s == 0.0) {
        return None;
    }
    let fs = f64::from(sample_rate);
    let q_lo = (fs / cfg.f0_max_hz).floor() as usize;
    let q_hi = ((fs / cfg.f0_min_hz).ceil() as usize).min(c.nfft() / 2);
    let trend_lo = (TREND_START_S * fs).round() as usize;
    let half_width = (SMOOTH_HALF_WIDTH_S * fs).round() as usize;
    let (ceps, power) = c.db(frame, q_hi, half_width);

    let xs: Vec<f64> = (trend_lo..=q_hi).map(|q| q as f64).collect();
    let (slope, intercept) = fit_line(&xs, &ceps[trend_lo..=q_hi]);
    let mut best = q_lo;
    for q in q_lo..=q_hi {
        if ceps[q] > ceps[best] {
            best = q;
        }
    }
    let height = ceps[best] - (slope * best as f64 + intercept);
    // smoothing flattens the peak; locate it on the raw power inside the window
    let lo = best.saturating_sub(half_width).max(q_lo);
    let hi = (best + half_width).min(q_hi);
    let mut at = lo;
    for q in lo..=hi {
        if power[q] > power[at] {
            at = q;
        }
    }
    Some((height, at as f64 / fs))
}

/// Mean CPP over frames; silent frames are skipped.
pub fn cpp_db(a: &AudioBuffer, cfg: &AcousticConfig) -> Result<f64> {
    cfg.validate()?;
    let sr = a.sample_rate_hz();
    let frame = cfg.frame_len(sr);
    let hop = cfg.hop_len(sr);
    let n = frame_count(a.len(), frame, hop).ok_or_else(|| {
        Error::invalid(format!(
            "audio of {} samples shorter than one {frame}-sample analysis window",
            a.len()
        ))
    })?;
    let mut c = Cepstrum::new(frame);
    let mut sum = 0.0;
    let mut used = 0usize;
    for i in 0..n {
        let seg = &a.samples()[i * hop..i * hop + frame];
        if let Some((h, _)) = prominence(&mut c, seg, sr, cfg) {
            sum += h;
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::Degenerate("CPP: every frame is silent".into()));
    }
    Ok(sum / used as f64)
}
