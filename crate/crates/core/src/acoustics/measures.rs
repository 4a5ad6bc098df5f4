use super::{track_pitch, AcousticConfig, CycleSeries, PitchTrack};
use crate::corpus::AudioBuffer;
use crate::error::{Error, Result};

const R_CLAMP: f64 = 1e-6;

fn mean_relative_step(values: &[f64], what: &str) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::Degenerate(format!(
            "{what} needs at least 2 cycles, got {}",
            values.len()
        )));
    }
    let sum: f64 = values
        .windows(2)
        .map(|w| ((w[1] - w[0]) / w[0]).abs())
        .sum();
    Ok(sum / (values.len() - 1) as f64)
}

/// Mean absolute relative change between consecutive periods.
pub fn jitter(c: &CycleSeries) -> Result<f64> {
    mean_relative_step(c.periods(), "jitter")
}

/// Mean absolute relative change between consecutive peak-to-peak amplitudes.
pub fn shimmer(c: &CycleSeries) -> Result<f64> {
    mean_relative_step(c.amplitudes(), "shimmer")
}

/// `39.86 * log10((mean + sd) / mean)`: an f0 spread in semitones.
pub fn semitone_spread(mean_hz: f64, sd_hz: f64) -> f64 {
    39.86 * ((mean_hz + sd_hz) / mean_hz).log10()
}

/// V_fo over voiced frames, using the population standard deviation.
pub fn vfo_semitones(track: &PitchTrack) -> Result<f64> {
    let f0: Vec<f64> = track.voiced_f0().collect();
    if f0.len() < 2 {
        return Err(Error::Degenerate(format!(
            "V_fo needs at least 2 voiced frames, got {}",
            f0.len()
        )));
    }
    let n = f0.len() as f64;
    let mean = f0.iter().sum::<f64>() / n;
    let var = f0.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / n;
    Ok(semitone_spread(mean, var.sqrt()))
}

pub fn voicing_ratio(track: &PitchTrack) -> Result<f64> {
    if track.is_empty() {
        return Err(Error::invalid("empty pitch track"));
    }
    Ok(track.voiced_count() as f64 / track.len() as f64)
}

/// `10 * log10(r / (1 - r))` with `r` clamped to `[1e-6, 1 - 1e-6]`.
pub fn hnr_from_r(r: f64) -> f64 {
    let r = r.clamp(R_CLAMP, 1.0 - R_CLAMP);
    10.0 * (r / (1.0 - r)).log10()
}

/// Mean frame HNR over voiced frames.
pub fn hnr_db(a: &AudioBuffer, cfg: &AcousticConfig) -> Result<f64> {
    let track = track_pitch(a, cfg)?;
    let values: Vec<f64> = track.voiced_strengths().map(hnr_from_r).collect();
    if values.is_empty() {
        return Err(Error::Degenerate("HNR: no voiced frames".into()));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}
