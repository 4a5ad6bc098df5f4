//! Source-filter speech-like audio whose voice quality degrades with severity.

use std::f64::consts::{PI, TAU};

use crate::corpus::AudioBuffer;
use crate::error::Result;
use crate::rng::SeededRng;

/// Vowel formants (F1, F2, F3) in Hz.
const VOWELS: [[f64; 3]; 6] = [
    [730.0, 1090.0, 2440.0],
    [270.0, 2290.0, 3010.0],
    [300.0, 870.0, 2240.0],
    [530.0, 1840.0, 2480.0],
    [570.0, 840.0, 2410.0],
    [660.0, 1720.0, 2410.0],
];
const NEUTRAL: [f64; 3] = [500.0, 1500.0, 2500.0];
const BANDWIDTHS: [f64; 3] = [80.0, 100.0, 140.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoiceParams {
    pub f0_hz: f64,
    /// Multiplies all formant frequencies.
    pub tract_scale: f64,
    /// 0 is typical speech, 1 is severely impaired.
    pub severity: f64,
    /// Output peak amplitude.
    pub level: f64,
}

struct Resonator {
    a1: f64,
    a2: f64,
    gain: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bw: f64, sr: f64) -> Self {
        let r = (-PI * bw / sr).exp();
        Self {
            a1: 2.0 * r * (TAU * freq / sr).cos(),
            a2: -r * r,
            gain: 1.0 - r,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.gain * x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Duration of one syllable in seconds; impaired speech is slower.
pub fn syllable_seconds(severity: f64, rng: &mut SeededRng) -> f64 {
    rng.uniform_range(0.12, 0.18) * (1.0 + 0.8 * severity)
}

/// `syllables` voiced segments separated by short pauses, with a leading and trailing pause.
pub fn synthesize(voice: &VoiceParams, syllables: usize, sample_rate_hz: u32, rng: &mut SeededRng) -> Result<AudioBuffer> {
    let sr = f64::from(sample_rate_hz);
    let s = voice.severity.clamp(0.0, 1.0);
    let jitter_sd = 0.003 + 0.03 * s;
    let shimmer_sd = 0.02 + 0.25 * s;
    let breath = 0.05 + 1.2 * s;
    let tilt = 0.80 + 0.17 * s;
    let reduction = 0.7 * s;

    let mut out = Vec::new();
    let pause = |rng: &mut SeededRng| (rng.uniform_range(0.04, 0.09) * sr) as usize;
    out.resize(pause(rng), 0.0);
    for _ in 0..syllables.max(1) {
        let len = (syllable_seconds(s, rng) * sr) as usize;
        let vowel = VOWELS[rng.below(VOWELS.len() as u64) as usize];
        let mut formants: Vec<Resonator> = (0..3)
            .map(|i| {
                let f = (vowel[i] * (1.0 - reduction) + NEUTRAL[i] * reduction) * voice.tract_scale;
                Resonator::new(f, BANDWIDTHS[i] * (1.0 + s), sr)
            })
            .collect();
        let contour = rng.uniform_range(-0.1, 0.1);

        // glottal pulse train with cycle-level perturbation
        let mut source = vec![0.0; len];
        let mut at = 0.0f64;
        while (at as usize) < len {
            let frac = at / len as f64;
            let f0 = voice.f0_hz * (1.0 + contour * (frac - 0.5));
            let amp = (1.0 + shimmer_sd * rng.normal()).max(0.05);
            source[at as usize] = amp;
            at += (sr / f0) * (1.0 + jitter_sd * rng.normal()).max(0.5);
        }
        let mut lp = 0.0;
        for v in &mut source {
            lp = *v + tilt * lp;
            *v = lp * (1.0 - tilt);
        }
        let rms = (source.iter().map(|v| v * v).sum::<f64>() / len as f64).sqrt();
        for v in &mut source {
            *v += breath * rms * rng.normal();
        }

        let ramp = (0.02 * sr) as usize;
        for (i, x) in source.into_iter().enumerate() {
            let mut y = x;
            for f in formants.iter_mut() {
                y = f.step(y);
            }
            let edge = i.min(len - 1 - i);
            let env = if edge < ramp {
                0.5 - 0.5 * (PI * edge as f64 / ramp as f64).cos()
            } else {
                1.0
            };
            out.push(y * env);
        }
        out.resize(out.len() + pause(rng), 0.0);
    }

    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gain = if peak > 0.0 { voice.level / peak } else { 0.0 };
    for v in &mut out {
        // a recording-like floor, well above one 16-bit step, keeps pauses from being digitally silent
        *v = *v * gain + 1e-3 * voice.level * rng.normal();
    }
    AudioBuffer::new(out, sample_rate_hz)
}
