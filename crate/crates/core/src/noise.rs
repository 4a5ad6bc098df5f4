//! Additive noise at a controlled signal-to-noise ratio.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::corpus::{read_wav, AudioBuffer};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub const SNR_MIN_DB: f64 = -20.0;
pub const SNR_MAX_DB: f64 = 40.0;

/// Built-in noise generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SyntheticNoise {
    White,
    Pink,
    Babble,
}

impl fmt::Display for SyntheticNoise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyntheticNoise::White => "white",
            SyntheticNoise::Pink => "pink",
            SyntheticNoise::Babble => "babble",
        })
    }
}

impl FromStr for SyntheticNoise {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "white" => Ok(SyntheticNoise::White),
            "pink" => Ok(SyntheticNoise::Pink),
            "babble" => Ok(SyntheticNoise::Babble),
            other => Err(Error::invalid(format!(
                "unknown synthetic noise `{other}` (expected white, pink or babble)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSource {
    /// Directory of noise WAVs; one file is drawn per utterance.
    Dir(PathBuf),
    Synthetic(SyntheticNoise),
}

impl fmt::Display for NoiseSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSource::Dir(p) => write!(f, "dir:{}", p.display()),
            NoiseSource::Synthetic(k) => write!(f, "synthetic:{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixSpec {
    pub snr_db: f64,
    pub seed: u64,
}

impl MixSpec {
    pub fn new(snr_db: f64, seed: u64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::invalid("SNR must be finite"));
        }
        if !(SNR_MIN_DB..=SNR_MAX_DB).contains(&snr_db) {
            return Err(Error::invalid(format!(
                "SNR {snr_db} dB outside [{SNR_MIN_DB}, {SNR_MAX_DB}]"
            )));
        }
        Ok(Self { snr_db, seed })
    }
}

/// Mixed audio plus the scaled components it was summed from.
#[derive(Debug, Clone)]
pub struct MixResult {
    pub mixed: AudioBuffer,
    /// Speech after the output normalization gain.
    pub speech: Vec<f64>,
    /// Noise after both the SNR gain and the output normalization gain.
    pub noise: Vec<f64>,
    /// SNR gain `g` applied to the raw noise segment.
    pub noise_gain: f64,
    /// Gain applied to the sum to keep the peak at or below 1.
    pub output_gain: f64,
    /// First noise sample used; the segment wraps when the noise is shorter.
    pub noise_offset: usize,
}

impl MixResult {
    /// SNR recomputed from the stored components.
    pub fn component_snr_db(&self) -> f64 {
        10.0 * (mean_square(&self.speech) / mean_square(&self.noise)).log10()
    }
}

pub fn mean_square(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Noise segment covering `len` samples starting at `offset`, wrapping around.
fn segment(noise: &[f64], offset: usize, len: usize) -> Vec<f64> {
    (0..len).map(|i| noise[(offset + i) % noise.len()]).collect()
}

pub fn mix_at_snr(speech: &AudioBuffer, noise: &AudioBuffer, spec: MixSpec) -> Result<MixResult> {
    if speech.sample_rate_hz() != noise.sample_rate_hz() {
        return Err(Error::invalid(format!(
            "sample rates differ: speech {} Hz, noise {} Hz",
            speech.sample_rate_hz(),
            noise.sample_rate_hz()
        )));
    }
    let s = speech.samples();
    let p_s = mean_square(s);
    if p_s == 0.0 {
        return Err(Error::Degenerate("speech is silent".into()));
    }
    let mut rng = SeededRng::new(spec.seed);
    let span = if noise.len() > s.len() {
        noise.len() - s.len() + 1
    } else {
        noise.len()
    };
    let offset = rng.below(span as u64) as usize;
    let seg = segment(noise.samples(), offset, s.len());
    let p_n = mean_square(&seg);
    if p_n == 0.0 {
        return Err(Error::Degenerate("noise segment is silent".into()));
    }
    let g = (p_s / (p_n * 10f64.powf(spec.snr_db / 10.0))).sqrt();
    let raw: Vec<f64> = s.iter().zip(&seg).map(|(a, b)| a + g * b).collect();
    let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let output_gain = if peak > 1.0 { 1.0 / peak } else { 1.0 };
    let speech_c: Vec<f64> = s.iter().map(|v| v * output_gain).collect();
    let noise_c: Vec<f64> = seg.iter().map(|v| g * v * output_gain).collect();
    let mixed: Vec<f64> = speech_c
        .iter()
        .zip(&noise_c)
        .map(|(a, b)| (a + b).clamp(-1.0, 1.0))
        .collect();
    Ok(MixResult {
        mixed: AudioBuffer::new(mixed, speech.sample_rate_hz())?,
        speech: speech_c,
        noise: noise_c,
        noise_gain: g,
        output_gain,
        noise_offset: offset,
    })
}

/// White, pink or babble noise of `len` samples, peak-scaled to 0.9.
pub fn generate(kind: SyntheticNoise, len: usize, sample_rate_hz: u32, seed: u64) -> Result<AudioBuffer> {
    if len == 0 {
        return Err(Error::invalid("noise length must be positive"));
    }
    let mut rng = SeededRng::new(seed);
    let raw = match kind {
        SyntheticNoise::White => (0..len).map(|_| rng.normal()).collect(),
        SyntheticNoise::Pink => pink(&mut rng, len),
        SyntheticNoise::Babble => babble(&mut rng, len, f64::from(sample_rate_hz)),
    };
    AudioBuffer::new(peak_scale(raw, 0.9), sample_rate_hz)
}

fn peak_scale(mut x: Vec<f64>, target: f64) -> Vec<f64> {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        for v in &mut x {
            *v *= target / peak;
        }
    }
    x
}

/// Paul Kellett's economy 1/f filter over white noise.
fn pink(rng: &mut SeededRng, len: usize) -> Vec<f64> {
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    (0..len)
        .map(|_| {
            let w = rng.normal();
            b0 = 0.99765 * b0 + w * 0.0990460;
            b1 = 0.96300 * b1 + w * 0.2965164;
            b2 = 0.57000 * b2 + w * 1.0526913;
            b0 + b1 + b2 + w * 0.1848
        })
        .collect()
}

/// Several talker-like sources: pink noise through a random resonance, gated by a syllabic envelope.
fn babble(rng: &mut SeededRng, len: usize, sr: f64) -> Vec<f64> {
    const TALKERS: usize = 6;
    let mut out = vec![0.0; len];
    for _ in 0..TALKERS {
        let src = pink(rng, len);
        let centre = rng.uniform_range(300.0, 2500.0);
        let bw = rng.uniform_range(150.0, 400.0);
        let rate = rng.uniform_range(3.0, 6.0);
        let phase = rng.uniform_range(0.0, std::f64::consts::TAU);
        let r = (-std::f64::consts::PI * bw / sr).exp();
        let a1 = 2.0 * r * (std::f64::consts::TAU * centre / sr).cos();
        let a2 = -r * r;
        let (mut y1, mut y2) = (0.0, 0.0);
        for (i, (o, x)) in out.iter_mut().zip(&src).enumerate() {
            let y = (1.0 - r) * x + a1 * y1 + a2 * y2;
            y2 = y1;
            y1 = y;
            let t = i as f64 / sr;
            let env = (0.5 + 0.5 * (std::f64::consts::TAU * rate * t + phase).sin()).powi(2);
            *o += y * env;
        }
    }
    out
}

/// Noise for one utterance: a seeded pick from `source`, at least 1 sample long.
pub fn noise_for(source: &NoiseSource, len: usize, sample_rate_hz: u32, seed: u64) -> Result<AudioBuffer> {
    match source {
        NoiseSource::Synthetic(kind) => generate(*kind, len, sample_rate_hz, seed),
        NoiseSource::Dir(dir) => {
            let files = list_wavs(dir)?;
            let pick = SeededRng::new(seed).below(files.len() as u64) as usize;
            read_wav(&files[pick])
        }
    }
}

const NOISE_STREAM: u64 = 0x6e6f_6973_6500_0001;
const OFFSET_STREAM: u64 = 0x6e6f_6973_6500_0002;

/// Mixes utterance `index` of a corpus at `snr_db`. The noise signal and its
/// offset depend only on `(seed, index)`, so two SNR conditions of the same
/// utterance differ only in the noise gain.
pub fn mix_utterance(speech: &AudioBuffer, index: usize, snr_db: f64, source: &NoiseSource, seed: u64) -> Result<MixResult> {
    let noise_seed = SeededRng::derive(seed ^ NOISE_STREAM, index as u64).next_u64();
    let mix_seed = SeededRng::derive(seed ^ OFFSET_STREAM, index as u64).next_u64();
    let noise = noise_for(source, speech.len(), speech.sample_rate_hz(), noise_seed)?;
    mix_at_snr(speech, &noise, MixSpec::new(snr_db, mix_seed)?)
}

/// `.wav` files in `dir`, sorted by name.
pub fn list_wavs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .is_some_and(|x| x.eq_ignore_ascii_case("wav"))
        })
        .collect();
    if files.is_empty() {
        return Err(Error::invalid(format!("no .wav files in {}", dir.display())));
    }
    files.sort();
    Ok(files)
}
