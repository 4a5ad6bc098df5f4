//! Utterance-level score tables and speaker-timepoint aggregation.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use super::stats::{pearson, Correlation};
use crate::corpus::Manifest;
use crate::error::{Error, Result};

/// Wide table: one row per utterance, one column per method. Cells may be missing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UtteranceScores {
    methods: Vec<String>,
    ids: Vec<String>,
    cells: Vec<Vec<Option<f64>>>,
}

impl UtteranceScores {
    pub fn new(methods: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for m in &methods {
            if m.is_empty() || !seen.insert(m.as_str()) {
                return Err(Error::invalid(format!("invalid or repeated method id `{m}`")));
            }
        }
        Ok(Self {
            methods,
            ..Self::default()
        })
    }

    pub fn push(&mut self, utterance_id: String, row: Vec<Option<f64>>) -> Result<()> {
        if row.len() != self.methods.len() {
            return Err(Error::DimensionMismatch {
                expected: self.methods.len(),
                got: row.len(),
            });
        }
        if row.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("utterance `{utterance_id}`: non-finite score")));
        }
        self.ids.push(utterance_id);
        self.cells.push(row);
        Ok(())
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn method_index(&self, method: &str) -> Result<usize> {
        self.methods
            .iter()
            .position(|m| m == method)
            .ok_or_else(|| Error::invalid(format!("no scores for method `{method}`")))
    }

    /// Present scores of one method as `(utterance_id, score)`.
    pub fn column(&self, method: &str) -> Result<Vec<(String, f64)>> {
        let j = self.method_index(method)?;
        Ok(self
            .ids
            .iter()
            .zip(&self.cells)
            .filter_map(|(id, row)| row[j].map(|v| (id.clone(), v)))
            .collect())
    }

    /// Column-wise union; utterance order follows `self`, then new ids from `other`.
    pub fn merge(&self, other: &UtteranceScores) -> Result<Self> {
        let mut methods = self.methods.clone();
        methods.extend(other.methods.iter().cloned());
        let mut out = UtteranceScores::new(methods)?;
        let other_pos: HashMap<&str, usize> =
            other.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let own: HashSet<&str> = self.ids.iter().map(String::as_str).collect();
        for (id, row) in self.ids.iter().zip(&self.cells) {
            let mut r = row.clone();
            match other_pos.get(id.as_str()) {
                Some(&i) => r.extend(other.cells[i].iter().copied()),
                None => r.extend(std::iter::repeat_n(None, other.methods.len())),
            }
            out.push(id.clone(), r)?;
        }
        for (id, row) in other.ids.iter().zip(&other.cells) {
            if !own.contains(id.as_str()) {
                let mut r = vec![None; self.methods.len()];
                r.extend(row.iter().copied());
                out.push(id.clone(), r)?;
            }
        }
        Ok(out)
    }
}

/// Formats a score so that parsing it back gives the same value.
pub fn format_score(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_scores_csv(scores: &UtteranceScores, path: &Path) -> Result<()> {
    let csv_err = |e: csv::Error| Error::invalid(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["utterance_id".to_string()];
    header.extend(scores.methods.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (id, row) in scores.ids.iter().zip(&scores.cells) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(|c| c.map(format_score).unwrap_or_default()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_scores_csv(path: &Path) -> Result<UtteranceScores> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    let header = rdr
        .headers()
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?
        .clone();
    if header.get(0) != Some("utterance_id") || header.len() < 2 {
        return Err(Error::invalid(format!(
            "{}: header must be `utterance_id,<method>...`",
            path.display()
        )));
    }
    let mut out = UtteranceScores::new(header.iter().skip(1).map(str::to_string).collect())?;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(j, cell)| {
                if cell.trim().is_empty() {
                    return Ok(None);
                }
                cell.trim().parse::<f64>().map(Some).map_err(|_| {
                    Error::invalid(format!(
                        "{}: row {}, column {}: `{cell}` is not a number",
                        path.display(),
                        i + 1,
                        &header[j + 1]
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(rec[0].to_string(), row)?;
    }
    Ok(out)
}

/// Mean score of one speaker-timepoint group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupScore {
    pub speaker_id: String,
    pub timepoint_id: String,
    pub score: f64,
    /// Mean of the group's utterance ratings, when any are present.
    pub rating: Option<f64>,
    pub utterances: usize,
}

/// Speaker-timepoint groups in first-appearance order of the manifest.
fn groups(manifest: &Manifest) -> (Vec<(String, String)>, Vec<usize>) {
    let mut keys: Vec<(String, String)> = Vec::new();
    let mut index: HashMap<(&str, &str), usize> = HashMap::new();
    let mut of_record = Vec::with_capacity(manifest.len());
    for r in manifest.records() {
        let key = (r.speaker_id.as_str(), r.timepoint_id.as_str());
        let g = *index.entry(key).or_insert_with(|| {
            keys.push((r.speaker_id.clone(), r.timepoint_id.clone()));
            keys.len() - 1
        });
        of_record.push(g);
    }
    (keys, of_record)
}

/// Per-group arithmetic means. Sums run in manifest order, so the result does not
/// depend on the order of `scores`. Groups without a score are omitted.
pub fn aggregate(scores: &[(String, f64)], manifest: &Manifest) -> Result<Vec<GroupScore>> {
    let mut by_id: HashMap<&str, f64> = HashMap::with_capacity(scores.len());
    for (id, v) in scores {
        if manifest.get(id).is_none() {
            return Err(Error::UnknownUtterance(id.clone()));
        }
        if by_id.insert(id.as_str(), *v).is_some() {
            return Err(Error::DuplicateUtterance(id.clone()));
        }
    }
    let (keys, of_record) = groups(manifest);
    let mut sum = vec![0.0; keys.len()];
    let mut count = vec![0usize; keys.len()];
    let mut rating_sum = vec![0.0; keys.len()];
    let mut rating_count = vec![0usize; keys.len()];
    for (r, &g) in manifest.records().iter().zip(&of_record) {
        if let Some(v) = by_id.get(r.utterance_id.as_str()) {
            sum[g] += v;
            count[g] += 1;
        }
        if let Some(rt) = r.rating {
            rating_sum[g] += rt;
            rating_count[g] += 1;
        }
    }
    Ok(keys
        .into_iter()
        .enumerate()
        .filter(|(g, _)| count[*g] > 0)
        .map(|(g, (speaker_id, timepoint_id))| GroupScore {
            speaker_id,
            timepoint_id,
            score: sum[g] / count[g] as f64,
            rating: (rating_count[g] > 0).then(|| rating_sum[g] / rating_count[g] as f64),
            utterances: count[g],
        })
        .collect())
}

/// Pearson correlation between group scores and group ratings, over rated groups.
pub fn correlate_groups(groups: &[GroupScore]) -> Result<Correlation> {
    let (x, y): (Vec<f64>, Vec<f64>) = groups
        .iter()
        .filter_map(|g| g.rating.map(|r| (g.score, r)))
        .unzip();
    pearson(&x, &y)
}

/// One row per (speaker, timepoint, method) with a score and a rating.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub speaker_id: String,
    pub timepoint_id: String,
    pub method_id: String,
    pub score: f64,
    pub rating: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable {
    rows: Vec<ScoreRow>,
    methods: Vec<String>,
}

impl ScoreTable {
    /// Aggregates every method; groups without a rating are left out.
    pub fn build(scores: &UtteranceScores, manifest: &Manifest) -> Result<Self> {
        let mut rows = Vec::new();
        for m in scores.methods() {
            for g in aggregate(&scores.column(m)?, manifest)? {
                if let Some(rating) = g.rating {
                    rows.push(ScoreRow {
                        speaker_id: g.speaker_id,
                        timepoint_id: g.timepoint_id,
                        method_id: m.clone(),
                        score: g.score,
                        rating,
                    });
                }
            }
        }
        Ok(Self {
            rows,
            methods: scores.methods().to_vec(),
        })
    }

    pub fn rows(&self) -> &[ScoreRow] {
        &self.rows
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn correlation(&self, method: &str) -> Result<Correlation> {
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .rows
            .iter()
            .filter(|r| r.method_id == method)
            .map(|r| (r.score, r.rating))
            .unzip();
        pearson(&x, &y).map_err(|e| Error::invalid(format!("method `{method}`: {e}")))
    }
}
