use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const MANIFEST_HEADER: [&str; 7] = [
    "utterance_id",
    "speaker_id",
    "timepoint_id",
    "wav_path",
    "transcript",
    "phoneme_ref",
    "rating",
];

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceRecord {
    pub utterance_id: String,
    pub speaker_id: String,
    pub timepoint_id: String,
    /// Resolved against the manifest's directory when relative.
    pub wav_path: PathBuf,
    pub transcript: String,
    pub phoneme_ref: Vec<String>,
    pub rating: Option<f64>,
}

/// Ordered utterance records with unique ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    records: Vec<UtteranceRecord>,
    index: HashMap<String, usize>,
}

impl Manifest {
    pub fn new(records: Vec<UtteranceRecord>) -> Result<Self> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if index.insert(r.utterance_id.clone(), i).is_some() {
                return Err(Error::DuplicateUtterance(r.utterance_id.clone()));
            }
            if let Some(rating) = r.rating {
                if !rating.is_finite() {
                    return Err(Error::invalid(format!(
                        "utterance `{}`: non-finite rating",
                        r.utterance_id
                    )));
                }
            }
        }
        Ok(Self { records, index })
    }

    pub fn records(&self) -> &[UtteranceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, utterance_id: &str) -> Option<&UtteranceRecord> {
        self.index.get(utterance_id).map(|&i| &self.records[i])
    }

    pub fn position(&self, utterance_id: &str) -> Option<usize> {
        self.index.get(utterance_id).copied()
    }
}

fn split_phonemes(cell: &str) -> Vec<String> {
    cell.split_whitespace().map(str::to_string).collect()
}

/// Parses the manifest CSV. Relative wav paths resolve against the manifest's directory
/// and must exist.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(file);

    let manifest_err = |row: u64, column: &str, message: String| Error::Manifest {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        message,
    };

    let headers = reader
        .headers()
        .map_err(|e| manifest_err(0, "header", e.to_string()))?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != MANIFEST_HEADER {
        return Err(manifest_err(
            0,
            "header",
            format!("expected `{}`, found `{}`", MANIFEST_HEADER.join(","), got.join(",")),
        ));
    }

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i as u64 + 1;
        let row = row.map_err(|e| {
            let column = match e.kind() {
                csv::ErrorKind::UnequalLengths { len, .. } => {
                    format!("field count {len}")
                }
                _ => "-".to_string(),
            };
            manifest_err(row_no, &column, e.to_string())
        })?;
        let cell = |c: usize| row.get(c).unwrap_or("").trim();
        let utterance_id = cell(0).to_string();
        if utterance_id.is_empty() {
            return Err(manifest_err(row_no, "utterance_id", "empty".into()));
        }
        if cell(1).is_empty() {
            return Err(manifest_err(row_no, "speaker_id", "empty".into()));
        }
        if cell(3).is_empty() {
            return Err(manifest_err(row_no, "wav_path", "empty".into()));
        }
        let rating = match cell(6) {
            "" => None,
            s => {
                let v: f64 = s
                    .parse()
                    .map_err(|_| manifest_err(row_no, "rating", format!("`{s}` is not a number")))?;
                if !v.is_finite() {
                    return Err(manifest_err(row_no, "rating", format!("`{s}` is not finite")));
                }
                Some(v)
            }
        };
        let raw_path = PathBuf::from(cell(3));
        let wav_path = if raw_path.is_absolute() {
            raw_path
        } else {
            base.join(raw_path)
        };
        if !wav_path.exists() {
            return Err(Error::MissingWav {
                utterance_id,
                path: wav_path,
            });
        }
        records.push(UtteranceRecord {
            utterance_id,
            speaker_id: cell(1).to_string(),
            timepoint_id: cell(2).to_string(),
            wav_path,
            transcript: cell(4).to_string(),
            phoneme_ref: split_phonemes(cell(5)),
            rating,
        });
    }
    Manifest::new(records)
}

/// Writes `manifest` to `path`. Wav paths under `path`'s directory are written relative to it.
pub fn write_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::invalid(e.to_string()))?;
    let csv_err = |e: csv::Error| Error::invalid(format!("{}: {e}", path.display()));
    writer.write_record(MANIFEST_HEADER).map_err(csv_err)?;
    for r in manifest.records() {
        let wav = r
            .wav_path
            .strip_prefix(&base)
            .unwrap_or(&r.wav_path)
            .to_string_lossy()
            .into_owned();
        let rating = r.rating.map(|v| format!("{v}")).unwrap_or_default();
        writer
            .write_record([
                r.utterance_id.as_str(),
                r.speaker_id.as_str(),
                r.timepoint_id.as_str(),
                wav.as_str(),
                r.transcript.as_str(),
                r.phoneme_ref.join(" ").as_str(),
                rating.as_str(),
            ])
            .map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}
