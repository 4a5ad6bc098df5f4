//! Handcrafted reference-free baselines computed from the waveform.

mod cepstrum;
mod cycles;
mod measures;
mod pitch;
mod timing;
mod wada;

pub use cepstrum::{cpp_db, frame_cpp_db};
pub use cycles::{extract_cycles, CycleSeries};
pub use measures::{
    hnr_db, hnr_from_r, jitter, semitone_spread, shimmer, vfo_semitones, voicing_ratio,
};
pub use pitch::{track_pitch, PitchTrack};
pub use timing::{duration_s, speech_rate_wpm, word_count};
pub use wada::{wada_snr_db, WADA_DB_MAX, WADA_DB_MIN};

use crate::error::{Error, Result};

/// Analysis constants shared by the pitch, HNR and CPP measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcousticConfig {
    pub f0_min_hz: f64,
    pub f0_max_hz: f64,
    pub frame_s: f64,
    pub hop_s: f64,
    pub voicing_threshold: f64,
    /// Frames whose peak is below this fraction of the global peak are unvoiced.
    pub silence_threshold: f64,
}

impl Default for AcousticConfig {
    fn default() -> Self {
        Self {
            f0_min_hz: 60.0,
            f0_max_hz: 400.0,
            frame_s: 0.04,
            hop_s: 0.01,
            voicing_threshold: 0.45,
            silence_threshold: 0.03,
        }
    }
}

impl AcousticConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.f0_min_hz,
            self.f0_max_hz,
            self.frame_s,
            self.hop_s,
            self.voicing_threshold,
            self.silence_threshold,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("acoustic config has non-finite values"));
        }
        if !(self.f0_min_hz > 0.0 && self.f0_min_hz < self.f0_max_hz) {
            return Err(Error::invalid(format!(
                "need 0 < f0_min ({}) < f0_max ({})",
                self.f0_min_hz, self.f0_max_hz
            )));
        }
        if self.hop_s <= 0.0 {
            return Err(Error::invalid("hop must be positive"));
        }
        // the longest lag plus an interpolation neighbour must fit well inside the frame
        if self.frame_s < 2.0 / self.f0_min_hz {
            return Err(Error::invalid(format!(
                "frame {} s shorter than two periods of f0_min ({} s)",
                self.frame_s,
                2.0 / self.f0_min_hz
            )));
        }
        if !(0.0..1.0).contains(&self.voicing_threshold) {
            return Err(Error::invalid("voicing threshold must be in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.silence_threshold) {
            return Err(Error::invalid("silence threshold must be in [0, 1)"));
        }
        Ok(())
    }

    pub(crate) fn frame_len(&self, sample_rate: u32) -> usize {
        (self.frame_s * f64::from(sample_rate)).round() as usize
    }

    pub(crate) fn hop_len(&self, sample_rate: u32) -> usize {
        ((self.hop_s * f64::from(sample_rate)).round() as usize).max(1)
    }
}

pub(crate) fn frame_count(len: usize, frame: usize, hop: usize) -> Option<usize> {
    (len >= frame && frame > 0).then(|| (len - frame) / hop + 1)
}
