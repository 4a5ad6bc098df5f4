use super::PitchTrack;
use crate::corpus::AudioBuffer;
use crate::error::{Error, Result};

/// Glottal cycle periods (seconds) and peak-to-peak amplitudes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CycleSeries {
    periods: Vec<f64>,
    amplitudes: Vec<f64>,
}

impl CycleSeries {
    pub fn new(periods: Vec<f64>, amplitudes: Vec<f64>) -> Result<Self> {
        if periods.len() != amplitudes.len() {
            return Err(Error::invalid("periods and amplitudes differ in length"));
        }
        if periods
            .iter()
            .chain(&amplitudes)
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(Error::invalid("cycle values must be positive and finite"));
        }
        Ok(Self {
            periods,
            amplitudes,
        })
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }
}

/// Sub-sample position of the maximum of `x[lo..hi]`.
fn peak_in(x: &[f64], lo: usize, hi: usize) -> Option<(f64, usize)> {
    if lo >= hi {
        return None;
    }
    let mut best = lo;
    for i in lo..hi {
        if x[i] > x[best] {
            best = i;
        }
    }
    if x[best] <= 0.0 {
        return None;
    }
    let pos = if best > 0 && best + 1 < x.len() {
        let (a, b, c) = (x[best - 1], x[best], x[best + 1]);
        let curvature = a - 2.0 * b + c;
        // only a true local maximum keeps the vertex within half a sample
        if curvature < 0.0 && b >= a && b >= c {
            best as f64 + 0.5 * (a - c) / curvature
        } else {
            best as f64
        }
    } else {
        best as f64
    };
    Some((pos, best))
}

/// Peak-picks one positive peak per glottal cycle inside each voiced region.
///
/// The expected spacing comes from the pitch track; each next peak is searched
/// within 0.75..1.25 of the local period after the previous one. Cycles never
/// span two regions.
pub fn extract_cycles(a: &AudioBuffer, track: &PitchTrack) -> Result<CycleSeries> {
    let (frame, hop, sr) = track.framing();
    if sr == 0 || sr != a.sample_rate_hz() {
        return Err(Error::invalid(
            "pitch track was not computed from this audio",
        ));
    }
    let x = a.samples();
    let fs = f64::from(sr);
    let f0 = track.f0_hz();
    let mut periods = Vec::new();
    let mut amplitudes = Vec::new();

    let mut i = 0;
    while i < f0.len() {
        if f0[i].is_none() {
            i += 1;
            continue;
        }
        let first = i;
        while i < f0.len() && f0[i].is_some() {
            i += 1;
        }
        let last = i - 1;
        let start = first * hop;
        let end = (last * hop + frame).min(x.len());
        let local_period = |pos: f64| {
            let centre = (pos - frame as f64 / 2.0) / hop as f64;
            let idx = (centre.round().max(first as f64) as usize).min(last);
            fs / f0[idx].expect("voiced frame")
        };

        let p0 = local_period(start as f64);
        let Some((mut pos, mut at)) = peak_in(x, start, (start + p0.ceil() as usize).min(end)) else {
            continue;
        };
        loop {
            let p = local_period(pos);
            let lo = (pos + 0.75 * p).ceil() as usize;
            let hi = (pos + 1.25 * p).floor() as usize + 1;
            if hi > end {
                break;
            }
            let Some((next, next_at)) = peak_in(x, lo, hi) else {
                break;
            };
            // anchored at this cycle's own peak so the rising edge of the next
            // cycle cannot leak into the amplitude
            let min = x[at..next_at].iter().copied().fold(f64::INFINITY, f64::min);
            let amp = x[at] - min;
            if amp > 0.0 && next > pos {
                periods.push((next - pos) / fs);
                amplitudes.push(amp);
            }
            pos = next;
            at = next_at;
        }
    }
    CycleSeries::new(periods, amplitudes)
}
