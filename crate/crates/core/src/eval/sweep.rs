//! Robustness to additive noise: rescore every SNR condition and compare with clean.

use rayon::prelude::*;

use super::scorers::AudioScorer;
use super::stats::{rmse, Correlation};
use super::table::{aggregate, correlate_groups, GroupScore};
use crate::corpus::{AudioBuffer, Manifest};
use crate::error::{Error, Result};
use crate::noise::{mix_utterance, MixSpec, NoiseSource};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub snr_grid: Vec<f64>,
    pub noise: NoiseSource,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: String,
    /// `None` for the clean condition.
    pub snr_db: Option<f64>,
    /// Group-level correlation with ratings; `None` if undefined (e.g. constant scores).
    pub correlation: Option<Correlation>,
    /// Group-level RMSE against the clean condition, after the method's divisor.
    pub rmse_vs_clean: Option<f64>,
    pub groups: usize,
}

fn condition_audio(audio: &[AudioBuffer], snr_db: f64, cfg: &SweepConfig) -> Result<Vec<AudioBuffer>> {
    audio
        .par_iter()
        .enumerate()
        .map(|(i, a)| Ok(mix_utterance(a, i, snr_db, &cfg.noise, cfg.seed)?.mixed))
        .collect()
}

fn score_all(
    manifest: &Manifest,
    audio: &[AudioBuffer],
    methods: &[&dyn AudioScorer],
) -> Result<Vec<Vec<GroupScore>>> {
    let per_utt: Vec<Vec<Option<f64>>> = manifest
        .records()
        .par_iter()
        .zip(audio.par_iter())
        .map(|(rec, a)| {
            methods
                .iter()
                .map(|m| {
                    m.score(rec, a)
                        .map_err(|e| Error::invalid(format!("utterance `{}`: {}: {e}", rec.utterance_id, m.id())))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    (0..methods.len())
        .map(|j| {
            let col: Vec<(String, f64)> = manifest
                .records()
                .iter()
                .zip(&per_utt)
                .filter_map(|(r, row)| row[j].map(|v| (r.utterance_id.clone(), v)))
                .collect();
            aggregate(&col, manifest)
        })
        .collect()
}

fn group_rmse(clean: &[GroupScore], noisy: &[GroupScore], divisor: f64) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = clean
        .iter()
        .filter_map(|c| {
            noisy
                .iter()
                .find(|n| n.speaker_id == c.speaker_id && n.timepoint_id == c.timepoint_id)
                .map(|n| (c.score / divisor, n.score / divisor))
        })
        .unzip();
    rmse(&x, &y).ok()
}

/// Clean condition first, then one block per SNR in grid order; methods in input order.
pub fn run_noise_sweep(
    manifest: &Manifest,
    clean_audio: &[AudioBuffer],
    methods: &[&dyn AudioScorer],
    cfg: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    if clean_audio.len() != manifest.len() {
        return Err(Error::DimensionMismatch {
            expected: manifest.len(),
            got: clean_audio.len(),
        });
    }
    if methods.is_empty() {
        return Err(Error::invalid("noise sweep needs at least one method"));
    }
    for &snr in &cfg.snr_grid {
        MixSpec::new(snr, 0)?;
    }
    let clean = score_all(manifest, clean_audio, methods)?;
    let mut rows = Vec::new();
    let mut emit = |snr: Option<f64>, groups: &[Vec<GroupScore>]| {
        for (j, m) in methods.iter().enumerate() {
            rows.push(SweepRow {
                method: m.id().to_string(),
                snr_db: snr,
                correlation: correlate_groups(&groups[j]).ok(),
                rmse_vs_clean: group_rmse(&clean[j], &groups[j], m.rmse_divisor()),
                groups: groups[j].len(),
            });
        }
    };
    emit(None, &clean);
    for &snr in &cfg.snr_grid {
        let noisy_audio = condition_audio(clean_audio, snr, cfg)?;
        let noisy = score_all(manifest, &noisy_audio, methods)?;
        emit(Some(snr), &noisy);
    }
    Ok(rows)
}
