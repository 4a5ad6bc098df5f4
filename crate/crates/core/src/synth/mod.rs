//! Hermetic synthetic corpus with a known severity per speaker.
//!
//! Every utterance carries three views of the same latent severity: a planted
//! feature bundle, speech-like audio whose voice quality degrades with
//! severity, and a phoneme hypothesis whose error rate grows with it.

mod features;
mod speech;

pub use features::{planted_bundle, ppg_with_mean, PlantedEffects, PlantedSpace, SpeakerOffset};
pub use speech::{synthesize, VoiceParams};

use std::fs;
use std::path::{Path, PathBuf};

use crate::corpus::{
    save_bundle, write_manifest, write_wav, AudioBuffer, FeatureBundle, Manifest, UtteranceRecord,
};
use crate::error::{Error, Result};
use crate::refmetrics::{write_phoneme_file, PhonemeSeq};
use crate::rng::SeededRng;

pub const VOWELS: [&str; 6] = ["a", "e", "i", "o", "u", "@"];
pub const CONSONANTS: [&str; 16] = [
    "p", "t", "k", "b", "d", "g", "s", "z", "f", "v", "m", "n", "l", "r", "h", "j",
];
pub const SKT: [&str; 3] = ["s", "k", "t"];

const UTTERANCE_STREAM: u64 = 0x7574_7465_7261_6e63;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub speakers: usize,
    pub utterances: usize,
    pub timepoints: usize,
    pub xvec_dim: usize,
    pub units: usize,
    pub min_frames: usize,
    pub max_frames: usize,
    pub sample_rate_hz: u32,
    pub effects: PlantedEffects,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            speakers: 20,
            utterances: 40,
            timepoints: 1,
            xvec_dim: 32,
            units: 12,
            min_frames: 40,
            max_frames: 80,
            sample_rate_hz: 16000,
            effects: PlantedEffects::default(),
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.speakers < 3 {
            return Err(Error::invalid("need at least 3 speakers"));
        }
        if self.utterances == 0 || self.timepoints == 0 {
            return Err(Error::invalid("utterances and timepoints must be positive"));
        }
        if self.utterances < self.timepoints {
            return Err(Error::invalid("fewer utterances than timepoints per speaker"));
        }
        if self.xvec_dim == 0 || self.units < 2 {
            return Err(Error::invalid("need xvec_dim >= 1 and units >= 2"));
        }
        if self.min_frames == 0 || self.min_frames > self.max_frames {
            return Err(Error::invalid("need 1 <= min_frames <= max_frames"));
        }
        Ok(())
    }
}

/// Latent severity of one speaker-timepoint group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSeverity {
    pub speaker_id: String,
    pub timepoint_id: String,
    pub severity: f64,
}

#[derive(Debug, Clone)]
pub struct SynthUtterance {
    /// `wav_path` is relative (`wav/<id>.wav`) until the corpus is written.
    pub record: UtteranceRecord,
    pub bundle: FeatureBundle,
    pub audio: AudioBuffer,
    pub hypothesis: PhonemeSeq,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub utterances: Vec<SynthUtterance>,
    pub groups: Vec<GroupSeverity>,
}

/// Severity on the 1..7 rating scale.
pub fn rating_for(severity: f64) -> f64 {
    1.0 + 6.0 * severity
}

fn word(rng: &mut SeededRng) -> Vec<String> {
    let syllables = 2;
    let mut out = Vec::new();
    for _ in 0..syllables {
        out.push(CONSONANTS[rng.below(CONSONANTS.len() as u64) as usize].to_string());
        out.push(VOWELS[rng.below(VOWELS.len() as u64) as usize].to_string());
    }
    out
}

fn any_symbol(rng: &mut SeededRng) -> &'static str {
    let n = (VOWELS.len() + CONSONANTS.len()) as u64;
    let i = rng.below(n) as usize;
    if i < VOWELS.len() {
        VOWELS[i]
    } else {
        CONSONANTS[i - VOWELS.len()]
    }
}

/// A recognizer-like corruption of `reference` with error probability rising in `severity`.
pub fn corrupt(reference: &[String], severity: f64, rng: &mut SeededRng) -> PhonemeSeq {
    let p = 0.05 + 0.45 * severity.clamp(0.0, 1.0);
    let mut out: Vec<String> = Vec::with_capacity(reference.len());
    for sym in reference {
        let u = rng.uniform();
        if u < 0.5 * p {
            let mut other = any_symbol(rng);
            while other == sym {
                other = any_symbol(rng);
            }
            out.push(other.to_string());
        } else if u >= 0.8 * p {
            out.push(sym.clone());
        }
        if rng.uniform() < 0.2 * p {
            out.push(any_symbol(rng).to_string());
        }
    }
    out.into_iter().collect()
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut root = SeededRng::new(cfg.seed);
    let space = PlantedSpace::new(cfg.xvec_dim, cfg.units, &mut root);
    let mut utterances = Vec::with_capacity(cfg.speakers * cfg.utterances);
    let mut groups = Vec::new();
    for spk in 0..cfg.speakers {
        let mut srng = SeededRng::derive(cfg.seed, spk as u64);
        let speaker_id = format!("spk{spk:03}");
        let base = srng.uniform();
        let offset = SpeakerOffset::draw(&space, &cfg.effects, &mut srng);
        let f0 = srng.uniform_range(90.0, 220.0);
        let tract = srng.uniform_range(0.9, 1.1);
        for tp in 0..cfg.timepoints {
            let severity = if tp == 0 {
                base
            } else {
                (base + 0.15 * srng.normal()).clamp(0.0, 1.0)
            };
            let timepoint_id = format!("t{tp}");
            groups.push(GroupSeverity {
                speaker_id: speaker_id.clone(),
                timepoint_id: timepoint_id.clone(),
                severity,
            });
            // utterances are split as evenly as possible over timepoints
            let count = cfg.utterances / cfg.timepoints + usize::from(tp < cfg.utterances % cfg.timepoints);
            for u in 0..count {
                let mut rng = SeededRng::derive(cfg.seed ^ UTTERANCE_STREAM, utterances.len() as u64);
                let utterance_id = format!("{speaker_id}_{timepoint_id}_u{u:03}");
                let frames = cfg.min_frames + rng.below((cfg.max_frames - cfg.min_frames + 1) as u64) as usize;
                let bundle = planted_bundle(&space, &offset, &cfg.effects, severity, frames, &mut rng)?;
                let words: Vec<Vec<String>> = (0..3 + rng.below(4) as usize).map(|_| word(&mut rng)).collect();
                let transcript = words.iter().map(|w| w.concat()).collect::<Vec<_>>().join(" ");
                let phoneme_ref: Vec<String> = words.concat();
                let hypothesis = corrupt(&phoneme_ref, severity, &mut rng);
                let voice = VoiceParams {
                    f0_hz: f0,
                    tract_scale: tract,
                    severity,
                    level: rng.uniform_range(0.3, 0.8),
                };
                let audio = synthesize(&voice, 2 * words.len(), cfg.sample_rate_hz, &mut rng)?;
                utterances.push(SynthUtterance {
                    record: UtteranceRecord {
                        utterance_id: utterance_id.clone(),
                        speaker_id: speaker_id.clone(),
                        timepoint_id: timepoint_id.clone(),
                        wav_path: PathBuf::from("wav").join(format!("{utterance_id}.wav")),
                        transcript,
                        phoneme_ref,
                        rating: Some(rating_for(severity)),
                    },
                    bundle,
                    audio,
                    hypothesis,
                });
            }
        }
    }
    Ok(SynthCorpus { utterances, groups })
}

impl SynthCorpus {
    /// Writes `manifest.csv`, `wav/`, `features/`, `hyp.phn`, `consonants.txt`, `skt.txt` and `severity.csv`.
    pub fn write(&self, out: &Path) -> Result<Manifest> {
        let wav_dir = out.join("wav");
        let feat_dir = out.join("features");
        for d in [&wav_dir, &feat_dir] {
            fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        let mut records = Vec::with_capacity(self.utterances.len());
        let mut hyps = Vec::with_capacity(self.utterances.len());
        for u in &self.utterances {
            let mut rec = u.record.clone();
            rec.wav_path = out.join(&u.record.wav_path);
            write_wav(&u.audio, &rec.wav_path)?;
            save_bundle(&feat_dir, &rec.utterance_id, &u.bundle)?;
            hyps.push((rec.utterance_id.clone(), u.hypothesis.clone()));
            records.push(rec);
        }
        let manifest = Manifest::new(records)?;
        write_manifest(&manifest, &out.join("manifest.csv"))?;
        write_phoneme_file(&hyps, &out.join("hyp.phn"))?;
        write_lines(&out.join("consonants.txt"), &CONSONANTS)?;
        write_lines(&out.join("skt.txt"), &SKT)?;
        let mut sev = String::from("speaker_id,timepoint_id,severity\n");
        for g in &self.groups {
            sev.push_str(&format!("{},{},{}\n", g.speaker_id, g.timepoint_id, g.severity));
        }
        let path = out.join("severity.csv");
        fs::write(&path, sev).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }

    pub fn severity_of(&self, speaker_id: &str, timepoint_id: &str) -> Option<f64> {
        self.groups
            .iter()
            .find(|g| g.speaker_id == speaker_id && g.timepoint_id == timepoint_id)
            .map(|g| g.severity)
    }
}

fn write_lines(path: &Path, lines: &[&str]) -> Result<()> {
    let mut text = lines.join("\n");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            speakers: 4,
            utterances: 3,
            ..SynthConfig::new(seed)
        }
    }

    #[test]
    fn counts_and_determinism() {
        let a = generate(&small(1)).unwrap();
        let b = generate(&small(1)).unwrap();
        assert_eq!(a.utterances.len(), 12);
        assert_eq!(a.groups.len(), 4);
        for (x, y) in a.utterances.iter().zip(&b.utterances) {
            assert_eq!(x.record, y.record);
            assert_eq!(x.bundle, y.bundle);
            assert_eq!(x.audio, y.audio);
        }
    }

    #[test]
    fn timepoints_split_utterances() {
        let cfg = SynthConfig {
            timepoints: 2,
            utterances: 5,
            ..small(2)
        };
        let c = generate(&cfg).unwrap();
        assert_eq!(c.utterances.len(), 20);
        assert_eq!(c.groups.len(), 8);
        let t0 = c.utterances.iter().filter(|u| u.record.timepoint_id == "t0").count();
        assert_eq!(t0, 12);
    }

    #[test]
    fn write_produces_loadable_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let c = generate(&small(3)).unwrap();
        let m = c.write(dir.path()).unwrap();
        let loaded = crate::corpus::load_manifest(&dir.path().join("manifest.csv")).unwrap();
        assert_eq!(loaded.len(), m.len());
        let bundles = crate::corpus::load_corpus_bundles(&loaded, &dir.path().join("features")).unwrap();
        assert_eq!(bundles.len(), 12);
        assert!(dir.path().join("hyp.phn").exists());
    }

    #[test]
    fn corruption_rate_grows_with_severity() {
        let mut rng = SeededRng::new(8);
        let reference: Vec<String> = (0..2000).map(|i| CONSONANTS[i % 16].to_string()).collect();
        let r = PhonemeSeq::new(reference.clone()).unwrap();
        let low = crate::refmetrics::per(&r, &corrupt(&reference, 0.0, &mut rng)).unwrap();
        let high = crate::refmetrics::per(&r, &corrupt(&reference, 1.0, &mut rng)).unwrap();
        assert!(low < 0.1 && high > 0.4, "{low} {high}");
    }
}
