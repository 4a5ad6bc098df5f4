//! Feature bundles with a planted severity direction.

use crate::corpus::{FeatureBundle, FeatureMatrix};
use crate::error::Result;
use crate::rng::SeededRng;

/// Strengths of the planted effect and of the nuisance variation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedEffects {
    pub xvec_effect: f64,
    pub ppg_effect: f64,
    pub xvec_noise: f64,
    pub ppg_noise: f64,
    pub speaker_noise: f64,
}

impl Default for PlantedEffects {
    fn default() -> Self {
        Self {
            xvec_effect: 2.0,
            ppg_effect: 1.5,
            xvec_noise: 0.3,
            ppg_noise: 0.2,
            speaker_noise: 0.1,
        }
    }
}

/// Shared corpus geometry: base points and unit severity directions for both blocks.
#[derive(Debug, Clone)]
pub struct PlantedSpace {
    xvec_base: Vec<f64>,
    xvec_dir: Vec<f64>,
    logit_base: Vec<f64>,
    logit_dir: Vec<f64>,
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= n;
    }
    v
}

impl PlantedSpace {
    pub fn new(xvec_dim: usize, units: usize, rng: &mut SeededRng) -> Self {
        let xvec_base = (0..xvec_dim).map(|_| 0.7 * rng.normal()).collect();
        let xvec_dir = unit((0..xvec_dim).map(|_| rng.normal()).collect());
        let logit_base = (0..units).map(|_| 0.5 * rng.normal()).collect();
        let logit_dir = unit((0..units).map(|_| rng.normal()).collect());
        Self {
            xvec_base,
            xvec_dir,
            logit_base,
            logit_dir,
        }
    }

    pub fn xvec_dim(&self) -> usize {
        self.xvec_base.len()
    }

    pub fn units(&self) -> usize {
        self.logit_base.len()
    }
}

/// Per-speaker nuisance offsets for both blocks.
#[derive(Debug, Clone)]
pub struct SpeakerOffset {
    xvec: Vec<f64>,
    logits: Vec<f64>,
}

impl SpeakerOffset {
    pub fn draw(space: &PlantedSpace, effects: &PlantedEffects, rng: &mut SeededRng) -> Self {
        let sd = effects.speaker_noise;
        Self {
            xvec: (0..space.xvec_dim()).map(|_| sd * rng.normal()).collect(),
            logits: (0..space.units()).map(|_| sd * rng.normal()).collect(),
        }
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// PPG whose rows average exactly to `q`: antithetic zero-sum perturbations in shuffled frame order.
pub fn ppg_with_mean(q: &[f64], frames: usize, rng: &mut SeededRng) -> Result<FeatureMatrix> {
    let k = q.len();
    let pairs = frames.div_ceil(2).max(1);
    let floor = q.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut rows = Vec::with_capacity(2 * pairs);
    for _ in 0..pairs {
        let raw: Vec<f64> = (0..k).map(|_| rng.normal()).collect();
        let centre = raw.iter().sum::<f64>() / k as f64;
        let delta: Vec<f64> = raw.iter().map(|v| v - centre).collect();
        let peak = delta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lambda = if peak > 0.0 { 0.9 * floor / peak } else { 0.0 };
        rows.push(q.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect::<Vec<f64>>());
        rows.push(q.iter().zip(&delta).map(|(a, d)| a - lambda * d).collect::<Vec<f64>>());
    }
    rng.shuffle(&mut rows);
    FeatureMatrix::from_rows_f64(&rows)
}

/// One utterance's bundle at `severity`.
pub fn planted_bundle(
    space: &PlantedSpace,
    speaker: &SpeakerOffset,
    effects: &PlantedEffects,
    severity: f64,
    frames: usize,
    rng: &mut SeededRng,
) -> Result<FeatureBundle> {
    let xvec: Vec<f32> = (0..space.xvec_dim())
        .map(|i| {
            (space.xvec_base[i]
                + speaker.xvec[i]
                + severity * effects.xvec_effect * space.xvec_dir[i]
                + effects.xvec_noise * rng.normal()) as f32
        })
        .collect();
    let logits: Vec<f64> = (0..space.units())
        .map(|k| {
            space.logit_base[k]
                + speaker.logits[k]
                + severity * effects.ppg_effect * space.logit_dir[k]
                + effects.ppg_noise * rng.normal()
        })
        .collect();
    let ppg = ppg_with_mean(&softmax(&logits), frames, rng)?;
    FeatureBundle::new(FeatureMatrix::row_vector(xvec)?, ppg)
}
