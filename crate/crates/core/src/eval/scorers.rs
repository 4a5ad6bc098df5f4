//! Per-utterance scoring methods that work from audio.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::acoustics::{
    cpp_db, duration_s, extract_cycles, hnr_db, jitter, shimmer, speech_rate_wpm, track_pitch,
    vfo_semitones, voicing_ratio, wada_snr_db, AcousticConfig,
};
use crate::corpus::{AudioBuffer, UtteranceRecord};
use crate::error::{Error, Result};
use crate::extract::FeatureExtractor;
use crate::fusion::{fuse, FusionMode, MomentConfig};
use crate::pca::{PcaModel, PcaOptions};
use crate::refmetrics::{per, subset_error_rate, PhonemeSeq};

pub const XPPG_METHOD: &str = "xppg-pca";

pub trait AudioScorer: Send + Sync {
    fn id(&self) -> &str;

    /// `Ok(None)` when the measure is undefined for this audio (e.g. no voiced frames).
    fn score(&self, record: &UtteranceRecord, audio: &AudioBuffer) -> Result<Option<f64>>;

    /// Scores are divided by this before RMSE; the PER family reports percent.
    fn rmse_divisor(&self) -> f64 {
        1.0
    }
}

/// Maps errors that only say "undefined for this signal" to a missing value.
pub fn undefined_as_missing(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Degenerate(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AcousticMeasure {
    Jitter,
    Shimmer,
    Vfo,
    VoicingRatio,
    Hnr,
    Cpp,
    WadaSnr,
    Duration,
    SpeechRate,
}

impl AcousticMeasure {
    pub const ALL: [AcousticMeasure; 9] = [
        AcousticMeasure::Jitter,
        AcousticMeasure::Shimmer,
        AcousticMeasure::Vfo,
        AcousticMeasure::VoicingRatio,
        AcousticMeasure::Hnr,
        AcousticMeasure::Cpp,
        AcousticMeasure::WadaSnr,
        AcousticMeasure::Duration,
        AcousticMeasure::SpeechRate,
    ];

    pub fn id(self) -> &'static str {
        match self {
            AcousticMeasure::Jitter => "jitter",
            AcousticMeasure::Shimmer => "shimmer",
            AcousticMeasure::Vfo => "vfo",
            AcousticMeasure::VoicingRatio => "voicing-ratio",
            AcousticMeasure::Hnr => "hnr",
            AcousticMeasure::Cpp => "cpp",
            AcousticMeasure::WadaSnr => "wada-snr",
            AcousticMeasure::Duration => "duration",
            AcousticMeasure::SpeechRate => "speech-rate",
        }
    }

    fn needs_pitch(self) -> bool {
        matches!(
            self,
            AcousticMeasure::Jitter
                | AcousticMeasure::Shimmer
                | AcousticMeasure::Vfo
                | AcousticMeasure::VoicingRatio
        )
    }
}

impl fmt::Display for AcousticMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for AcousticMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|m| m.id() == s).ok_or_else(|| {
            let known: Vec<&str> = Self::ALL.iter().map(|m| m.id()).collect();
            Error::invalid(format!("unknown measure `{s}` (known: {})", known.join(", ")))
        })
    }
}

/// Computes several acoustic measures on one utterance, tracking pitch at most once.
pub fn acoustic_measures(
    measures: &[AcousticMeasure],
    record: &UtteranceRecord,
    audio: &AudioBuffer,
    cfg: &AcousticConfig,
) -> Result<Vec<Option<f64>>> {
    let track = if measures.iter().any(|m| m.needs_pitch()) {
        Some(track_pitch(audio, cfg)?)
    } else {
        None
    };
    measures
        .iter()
        .map(|m| {
            let value = match m {
                AcousticMeasure::Jitter => track
                    .as_ref()
                    .map(|t| extract_cycles(audio, t).and_then(|c| jitter(&c)))
                    .expect("pitch tracked"),
                AcousticMeasure::Shimmer => track
                    .as_ref()
                    .map(|t| extract_cycles(audio, t).and_then(|c| shimmer(&c)))
                    .expect("pitch tracked"),
                AcousticMeasure::Vfo => vfo_semitones(track.as_ref().expect("pitch tracked")),
                AcousticMeasure::VoicingRatio => voicing_ratio(track.as_ref().expect("pitch tracked")),
                AcousticMeasure::Hnr => hnr_db(audio, cfg),
                AcousticMeasure::Cpp => cpp_db(audio, cfg),
                AcousticMeasure::WadaSnr => wada_snr_db(audio),
                AcousticMeasure::Duration => duration_s(audio),
                AcousticMeasure::SpeechRate => {
                    if record.transcript.trim().is_empty() {
                        return Ok(None);
                    }
                    speech_rate_wpm(&record.transcript, audio)
                }
            };
            undefined_as_missing(value)
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct AcousticScorer {
    pub measure: AcousticMeasure,
    pub config: AcousticConfig,
}

impl AudioScorer for AcousticScorer {
    fn id(&self) -> &str {
        self.measure.id()
    }

    fn score(&self, record: &UtteranceRecord, audio: &AudioBuffer) -> Result<Option<f64>> {
        Ok(acoustic_measures(&[self.measure], record, audio, &self.config)?[0])
    }
}

pub trait PhonemeRecognizer: Send + Sync {
    fn recognize(&self, record: &UtteranceRecord, audio: &AudioBuffer) -> Result<PhonemeSeq>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum RefMetric {
    Per,
    Subset { id: String, symbols: BTreeSet<String> },
}

impl RefMetric {
    pub fn id(&self) -> &str {
        match self {
            RefMetric::Per => "per",
            RefMetric::Subset { id, .. } => id,
        }
    }

    /// Rate in percent; `None` when a subset rate has no subset symbols in the reference.
    pub fn percent(&self, reference: &PhonemeSeq, hyp: &PhonemeSeq) -> Result<Option<f64>> {
        match self {
            RefMetric::Per => per(reference, hyp).map(|v| Some(100.0 * v)),
            RefMetric::Subset { symbols, .. } => {
                if !reference.symbols().iter().any(|s| symbols.contains(s)) {
                    return Ok(None);
                }
                subset_error_rate(reference, hyp, symbols).map(|v| Some(100.0 * v))
            }
        }
    }
}

pub struct RecognizerScorer<R> {
    pub recognizer: R,
    pub metric: RefMetric,
}

impl<R: PhonemeRecognizer> AudioScorer for RecognizerScorer<R> {
    fn id(&self) -> &str {
        self.metric.id()
    }

    fn score(&self, record: &UtteranceRecord, audio: &AudioBuffer) -> Result<Option<f64>> {
        let reference = PhonemeSeq::new(record.phoneme_ref.clone())?;
        if reference.is_empty() {
            return Err(Error::invalid(format!(
                "utterance `{}`: empty phoneme reference",
                record.utterance_id
            )));
        }
        let hyp = self.recognizer.recognize(record, audio)?;
        self.metric.percent(&reference, &hyp)
    }

    fn rmse_divisor(&self) -> f64 {
        100.0
    }
}

/// Fusion layout applied before PCA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionSettings {
    pub mode: FusionMode,
    pub moments: MomentConfig,
}

impl Default for FusionSettings {
    fn default() -> Self {
        Self {
            mode: FusionMode::Both,
            moments: MomentConfig::new(1).expect("order 1 is valid"),
        }
    }
}

/// Extract, fuse and project onto a model fitted on clean audio.
pub struct XppgScorer<E> {
    extractor: E,
    settings: FusionSettings,
    model: PcaModel,
}

impl<E: FeatureExtractor> XppgScorer<E> {
    /// Fits the projection on features extracted from `audios`.
    pub fn train(extractor: E, settings: FusionSettings, opts: PcaOptions, audios: &[AudioBuffer]) -> Result<Self> {
        let bundles = audios
            .par_iter()
            .map(|a| extractor.extract(a))
            .collect::<Result<Vec<_>>>()?;
        let pcafit = crate::pipeline::fit_bundles(&bundles, settings.mode, settings.moments, opts)?;
        Ok(Self {
            extractor,
            settings,
            model: pcafit.model,
        })
    }

    pub fn model(&self) -> &PcaModel {
        &self.model
    }
}

impl<E: FeatureExtractor> AudioScorer for XppgScorer<E> {
    fn id(&self) -> &str {
        XPPG_METHOD
    }

    fn score(&self, _record: &UtteranceRecord, audio: &AudioBuffer) -> Result<Option<f64>> {
        let bundle = self.extractor.extract(audio)?;
        let v = fuse(&bundle, self.settings.moments, self.settings.mode)?;
        self.model.score(&v).map(Some)
    }
}
