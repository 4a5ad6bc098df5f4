//! Reference-based baselines: Levenshtein alignment and phoneme error rates.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// A sequence of phoneme tokens. Tokens are non-empty and contain no whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PhonemeSeq {
    symbols: Vec<String>,
}

impl PhonemeSeq {
    pub fn new(symbols: Vec<String>) -> Result<Self> {
        if let Some(bad) = symbols
            .iter()
            .find(|s| s.is_empty() || s.chars().any(char::is_whitespace))
        {
            return Err(Error::invalid(format!("invalid phoneme symbol {bad:?}")));
        }
        Ok(Self { symbols })
    }

    /// Splits on whitespace.
    pub fn parse(text: &str) -> Self {
        Self {
            symbols: text.split_whitespace().map(str::to_string).collect(),
        }
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

impl<S: AsRef<str>> FromIterator<S> for PhonemeSeq {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self::parse(
            &iter
                .into_iter()
                .map(|s| s.as_ref().to_string())
                .collect::<Vec<_>>()
                .join(" "),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Match { ref_idx: usize, hyp_idx: usize },
    Substitute { ref_idx: usize, hyp_idx: usize },
    Delete { ref_idx: usize },
    Insert { hyp_idx: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EditCounts {
    pub matches: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
}

impl EditCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Edit script from reference to hypothesis, in sequence order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    ops: Vec<EditOp>,
}

impl Alignment {
    pub fn ops(&self) -> &[EditOp] {
        &self.ops
    }

    pub fn cost(&self) -> usize {
        self.counts().errors()
    }

    pub fn counts(&self) -> EditCounts {
        let mut c = EditCounts::default();
        for op in &self.ops {
            match op {
                EditOp::Match { .. } => c.matches += 1,
                EditOp::Substitute { .. } => c.substitutions += 1,
                EditOp::Delete { .. } => c.deletions += 1,
                EditOp::Insert { .. } => c.insertions += 1,
            }
        }
        c
    }
}

fn distance_table(a: &[String], b: &[String]) -> Vec<Vec<usize>> {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let diag = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = diag.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d
}

/// Unit-cost edit distance. Either side may be empty.
pub fn edit_distance(a: &PhonemeSeq, b: &PhonemeSeq) -> usize {
    distance_table(&a.symbols, &b.symbols)[a.len()][b.len()]
}

/// Minimal-cost alignment. The backtrace prefers match, then substitution, deletion, insertion.
pub fn align(reference: &PhonemeSeq, hyp: &PhonemeSeq) -> Result<Alignment> {
    if reference.is_empty() {
        return Err(Error::invalid("empty reference phoneme sequence"));
    }
    let (a, b) = (&reference.symbols, &hyp.symbols);
    let d = distance_table(a, b);
    let (mut i, mut j) = (a.len(), b.len());
    let mut ops = Vec::with_capacity(i.max(j));
    while i > 0 || j > 0 {
        let here = d[i][j];
        if i > 0 && j > 0 && a[i - 1] == b[j - 1] && d[i - 1][j - 1] == here {
            ops.push(EditOp::Match { ref_idx: i - 1, hyp_idx: j - 1 });
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && a[i - 1] != b[j - 1] && d[i - 1][j - 1] + 1 == here {
            ops.push(EditOp::Substitute { ref_idx: i - 1, hyp_idx: j - 1 });
            i -= 1;
            j -= 1;
        } else if i > 0 && d[i - 1][j] + 1 == here {
            ops.push(EditOp::Delete { ref_idx: i - 1 });
            i -= 1;
        } else {
            ops.push(EditOp::Insert { hyp_idx: j - 1 });
            j -= 1;
        }
    }
    ops.reverse();
    Ok(Alignment { ops })
}

/// (S + I + D) / |ref|. May exceed 1.
pub fn per(reference: &PhonemeSeq, hyp: &PhonemeSeq) -> Result<f64> {
    let al = align(reference, hyp)?;
    Ok(al.cost() as f64 / reference.len() as f64)
}

/// Error counts restricted to `subset`, from the full-sequence alignment.
///
/// Substitutions and deletions count when the reference symbol is in the subset;
/// insertions count when the inserted hypothesis symbol is.
pub fn subset_errors(al: &Alignment, reference: &PhonemeSeq, hyp: &PhonemeSeq, subset: &BTreeSet<String>) -> usize {
    al.ops
        .iter()
        .filter(|op| match **op {
            EditOp::Match { .. } => false,
            EditOp::Substitute { ref_idx, .. } | EditOp::Delete { ref_idx } => {
                subset.contains(&reference.symbols[ref_idx])
            }
            EditOp::Insert { hyp_idx } => subset.contains(&hyp.symbols[hyp_idx]),
        })
        .count()
}

pub fn subset_error_rate(
    reference: &PhonemeSeq,
    hyp: &PhonemeSeq,
    subset: &BTreeSet<String>,
) -> Result<f64> {
    let denom = reference
        .symbols
        .iter()
        .filter(|s| subset.contains(*s))
        .count();
    if denom == 0 {
        return Err(Error::invalid("reference contains no symbols from the subset"));
    }
    let al = align(reference, hyp)?;
    Ok(subset_errors(&al, reference, hyp, subset) as f64 / denom as f64)
}

/// Reads `utterance_id<TAB>symbols` lines. Blank lines are skipped; ids must be unique.
pub fn read_phoneme_file(path: &Path) -> Result<Vec<(String, PhonemeSeq)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (id, symbols) = line.split_once('\t').unwrap_or((line, ""));
        let id = id.trim();
        if id.is_empty() {
            return Err(Error::invalid(format!(
                "{}: line {}: missing utterance id",
                path.display(),
                lineno + 1
            )));
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::DuplicateUtterance(id.to_string()));
        }
        out.push((id.to_string(), PhonemeSeq::parse(symbols)));
    }
    Ok(out)
}

pub fn write_phoneme_file(entries: &[(String, PhonemeSeq)], path: &Path) -> Result<()> {
    let mut text = String::new();
    for (id, seq) in entries {
        text.push_str(id);
        text.push('\t');
        text.push_str(&seq.symbols.join(" "));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One symbol per line; blank lines and `#` comments ignored.
pub fn read_subset_file(path: &Path) -> Result<BTreeSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let set: BTreeSet<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect();
    if set.is_empty() {
        return Err(Error::invalid(format!("{}: empty symbol set", path.display())));
    }
    Ok(set)
}
