//! Frame-wise autocorrelation pitch tracking.
//!
//! Each frame is mean-removed and correlated with itself. The lag curve is
//! normalized per lag by the energies of the two overlapping segments, so a
//! perfectly periodic frame peaks at 1 regardless of window position. The
//! first local maximum within 90% of the best maximum in the lag range
//! `[fs/f0_max, fs/f0_min]` wins, which avoids octave-down errors on strongly
//! periodic input. The peak is refined by parabolic interpolation.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{frame_count, AcousticConfig};
use crate::corpus::AudioBuffer;
use crate::error::{Error, Result};

const OCTAVE_TOLERANCE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct PitchTrack {
    frame_times: Vec<f64>,
    f0_hz: Vec<Option<f64>>,
    voicing_strength: Vec<f64>,
    hop_samples: usize,
    frame_samples: usize,
    sample_rate_hz: u32,
}

impl PitchTrack {
    /// Assembles a track from per-frame values; lengths must agree and strengths lie in [0, 1].
    pub fn from_frames(
        frame_times: Vec<f64>,
        f0_hz: Vec<Option<f64>>,
        voicing_strength: Vec<f64>,
    ) -> Result<Self> {
        if frame_times.len() != f0_hz.len() || f0_hz.len() != voicing_strength.len() {
            return Err(Error::invalid("pitch track columns differ in length"));
        }
        if voicing_strength.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::invalid("voicing strength outside [0, 1]"));
        }
        if f0_hz.iter().flatten().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::invalid("voiced f0 must be positive and finite"));
        }
        Ok(Self {
            frame_times,
            f0_hz,
            voicing_strength,
            hop_samples: 0,
            frame_samples: 0,
            sample_rate_hz: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.f0_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0_hz.is_empty()
    }

    pub fn frame_times(&self) -> &[f64] {
        &self.frame_times
    }

    pub fn f0_hz(&self) -> &[Option<f64>] {
        &self.f0_hz
    }

    pub fn voicing_strength(&self) -> &[f64] {
        &self.voicing_strength
    }

    pub fn voiced_f0(&self) -> impl Iterator<Item = f64> + '_ {
        self.f0_hz.iter().flatten().copied()
    }

    pub fn voiced_count(&self) -> usize {
        self.f0_hz.iter().filter(|f| f.is_some()).count()
    }

    /// Correlation peaks of the voiced frames.
    pub fn voiced_strengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.f0_hz
            .iter()
            .zip(&self.voicing_strength)
            .filter_map(|(f, s)| f.map(|_| *s))
    }

    pub(crate) fn framing(&self) -> (usize, usize, u32) {
        (self.frame_samples, self.hop_samples, self.sample_rate_hz)
    }
}

pub(crate) struct LagCorrelator {
    frame: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex<f64>>,
    prefix: Vec<f64>,
}

impl LagCorrelator {
    pub(crate) fn new(frame: usize) -> Self {
        let nfft = (2 * frame).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            frame,
            fft: planner.plan_fft_forward(nfft),
            ifft: planner.plan_fft_inverse(nfft),
            buf: vec![Complex::new(0.0, 0.0); nfft],
            prefix: vec![0.0; frame + 1],
        }
    }

    /// Normalized correlation `r[lag]` for `lag in 0..=max_lag`.
    pub(crate) fn normalized(&mut self, x: &[f64], max_lag: usize) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.frame);
        let n = self.frame;
        let nfft = self.buf.len();
        for (b, &v) in self.buf.iter_mut().zip(x) {
            *b = Complex::new(v, 0.0);
        }
        self.buf[n..].fill(Complex::new(0.0, 0.0));
        self.fft.process(&mut self.buf);
        for b in &mut self.buf {
            *b = Complex::new(b.norm_sqr(), 0.0);
        }
        self.ifft.process(&mut self.buf);
        self.prefix[0] = 0.0;
        for (i, &v) in x.iter().enumerate() {
            self.prefix[i + 1] = self.prefix[i] + v * v;
        }
        let total = self.prefix[n];
        (0..=max_lag.min(n - 1))
            .map(|lag| {
                let raw = self.buf[lag].re / nfft as f64;
                let head = self.prefix[n - lag];
                let tail = total - self.prefix[lag];
                let denom = (head * tail).sqrt();
                if denom > 0.0 {
                    (raw / denom).clamp(-1.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

pub(crate) struct FramePeak {
    pub lag: f64,
    pub strength: f64,
}

pub(crate) fn pick_peak(r: &[f64], lag_min: usize, lag_max: usize) -> Option<FramePeak> {
    let lo = lag_min.max(1);
    let hi = lag_max.min(r.len().saturating_sub(2));
    if lo > hi {
        return None;
    }
    let maxima: Vec<usize> = (lo..=hi)
        .filter(|&t| r[t] > 0.0 && r[t] >= r[t - 1] && r[t] > r[t + 1])
        .collect();
    let best = maxima.iter().map(|&t| r[t]).fold(f64::NEG_INFINITY, f64::max);
    let chosen = *maxima.iter().find(|&&t| r[t] >= OCTAVE_TOLERANCE * best)?;
    let (a, b, c) = (r[chosen - 1], r[chosen], r[chosen + 1]);
    let curvature = a - 2.0 * b + c;
    let (offset, value) = if curvature < 0.0 {
        let d = 0.5 * (a - c) / curvature;
        (d, b - 0.25 * (a - c) * d)
    } else {
        (0.0, b)
    };
    Some(FramePeak {
        lag: chosen as f64 + offset,
        strength: value.clamp(0.0, 1.0),
    })
}

pub fn track_pitch(a: &AudioBuffer, cfg: &AcousticConfig) -> Result<PitchTrack> {
    cfg.validate()?;
    let sr = a.sample_rate_hz();
    let frame = cfg.frame_len(sr);
    let hop = cfg.hop_len(sr);
    let n_frames = frame_count(a.len(), frame, hop).ok_or_else(|| {
        Error::invalid(format!(
            "audio of {} samples shorter than one {frame}-sample frame",
            a.len()
        ))
    })?;
    let fs = f64::from(sr);
    let lag_min = (fs / cfg.f0_max_hz).floor() as usize;
    let lag_max = (fs / cfg.f0_min_hz).ceil() as usize;
    if lag_max + 2 > frame {
        return Err(Error::invalid("frame too short for the f0 range"));
    }
    let global_peak = a.samples().iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let silence = cfg.silence_threshold * global_peak;

    let mut corr = LagCorrelator::new(frame);
    let mut buf = vec![0.0; frame];
    let mut times = Vec::with_capacity(n_frames);
    let mut f0 = Vec::with_capacity(n_frames);
    let mut strength = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        let start = i * hop;
        let seg = &a.samples()[start..start + frame];
        times.push((start as f64 + frame as f64 / 2.0) / fs);
        let peak = seg.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        if global_peak == 0.0 || peak < silence {
            f0.push(None);
            strength.push(0.0);
            continue;
        }
        let mean = seg.iter().sum::<f64>() / frame as f64;
        for (b, s) in buf.iter_mut().zip(seg) {
            *b = s - mean;
        }
        let r = corr.normalized(&buf, lag_max + 1);
        match pick_peak(&r, lag_min, lag_max) {
            Some(p) => {
                let hz = fs / p.lag;
                let voiced = p.strength >= cfg.voicing_threshold
                    && (cfg.f0_min_hz..=cfg.f0_max_hz).contains(&hz);
                f0.push(voiced.then_some(hz));
                strength.push(p.strength);
            }
            None => {
                f0.push(None);
                strength.push(0.0);
            }
        }
    }
    Ok(PitchTrack {
        frame_times: times,
        f0_hz: f0,
        voicing_strength: strength,
        hop_samples: hop,
        frame_samples: frame,
        sample_rate_hz: sr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::testsignals::{sine, white};

    #[test]
    fn sine_150_hz() {
        let a = sine(150.0, 1.0, 0.5);
        let t = track_pitch(&a, &AcousticConfig::default()).unwrap();
        let interior = &t.f0_hz()[1..t.len() - 1];
        let good = interior
            .iter()
            .filter(|f| f.is_some_and(|hz| (hz - 150.0).abs() <= 2.0))
            .count();
        assert!(good as f64 >= 0.9 * interior.len() as f64, "{good}/{}", interior.len());
    }

    #[test]
    fn white_noise_is_mostly_unvoiced() {
        let a = white(1.0, 0.2, 17);
        let t = track_pitch(&a, &AcousticConfig::default()).unwrap();
        assert!((t.voiced_count() as f64) < 0.2 * t.len() as f64);
    }

    #[test]
    fn silence_is_unvoiced() {
        let a = AudioBuffer::new(vec![0.0; 8000], 16000).unwrap();
        let t = track_pitch(&a, &AcousticConfig::default()).unwrap();
        assert_eq!(t.voiced_count(), 0);
    }

    #[test]
    fn frame_count_formula() {
        let cfg = AcousticConfig::default();
        for len in [640, 641, 799, 800, 1000, 16000, 16123] {
            let a = AudioBuffer::new(vec![0.0; len], 16000).unwrap();
            let t = track_pitch(&a, &cfg).unwrap();
            assert_eq!(t.len(), (len - 640) / 160 + 1, "len {len}");
        }
        let short = AudioBuffer::new(vec![0.0; 639], 16000).unwrap();
        assert!(track_pitch(&short, &cfg).is_err());
    }

    #[test]
    fn correlator_matches_direct_sum() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let mut c = LagCorrelator::new(50);
        let r = c.normalized(&x, 30);
        for lag in [0usize, 1, 5, 17, 30] {
            let num: f64 = (0..50 - lag).map(|n| x[n] * x[n + lag]).sum();
            let e0: f64 = (0..50 - lag).map(|n| x[n] * x[n]).sum();
            let e1: f64 = (lag..50).map(|n| x[n] * x[n]).sum();
            assert!((r[lag] - num / (e0 * e1).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn from_frames_checks_lengths() {
        assert!(PitchTrack::from_frames(vec![0.0], vec![], vec![0.0]).is_err());
        assert!(PitchTrack::from_frames(vec![0.0], vec![Some(-1.0)], vec![0.5]).is_err());
        assert!(PitchTrack::from_frames(vec![0.0], vec![Some(100.0)], vec![0.5]).is_ok());
    }
}
