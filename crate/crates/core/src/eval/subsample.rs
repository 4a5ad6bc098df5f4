//! How many utterances per speaker are needed: correlations from random subsets.

use std::collections::HashMap;

use rayon::prelude::*;

use super::stats::pearson;
use crate::corpus::Manifest;
use crate::error::{Error, Result};
use crate::rng::{mix64, SeededRng};

#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleRow {
    pub n: usize,
    pub mean_r: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub repeats: usize,
}

struct Group {
    /// Scores in manifest order.
    scores: Vec<f64>,
    rating: f64,
}

fn rated_groups(scores: &[(String, f64)], manifest: &Manifest) -> Result<Vec<Group>> {
    let mut by_id: HashMap<&str, f64> = HashMap::with_capacity(scores.len());
    for (id, v) in scores {
        if manifest.get(id).is_none() {
            return Err(Error::UnknownUtterance(id.clone()));
        }
        by_id.insert(id.as_str(), *v);
    }
    let mut order: Vec<(&str, &str)> = Vec::new();
    let mut acc: HashMap<(&str, &str), (Vec<f64>, f64, usize)> = HashMap::new();
    for r in manifest.records() {
        let key = (r.speaker_id.as_str(), r.timepoint_id.as_str());
        let entry = acc.entry(key).or_insert_with(|| {
            order.push(key);
            (Vec::new(), 0.0, 0)
        });
        if let Some(v) = by_id.get(r.utterance_id.as_str()) {
            entry.0.push(*v);
        }
        if let Some(rt) = r.rating {
            entry.1 += rt;
            entry.2 += 1;
        }
    }
    Ok(order
        .into_iter()
        .filter_map(|k| {
            let (s, rsum, rn) = acc.remove(&k).expect("key recorded");
            (rn > 0 && !s.is_empty()).then(|| Group {
                scores: s,
                rating: rsum / rn as f64,
            })
        })
        .collect())
}

fn one_repeat(groups: &[Group], n: usize, rng: &mut SeededRng) -> Result<f64> {
    let mut x = Vec::with_capacity(groups.len());
    let mut y = Vec::with_capacity(groups.len());
    for g in groups {
        let mut idx = rng.sample_indices(g.scores.len(), n);
        // a fixed summation order makes the n = all case exactly repeatable
        idx.sort_unstable();
        x.push(idx.iter().map(|&i| g.scores[i]).sum::<f64>() / n as f64);
        y.push(g.rating);
    }
    Ok(pearson(&x, &y)?.r)
}

/// For each `n`, `repeats` draws of `n` utterances per speaker-timepoint group.
/// CI is the normal approximation `mean +- 1.96 sd / sqrt(repeats)`.
pub fn run_subsample_curve(
    scores: &[(String, f64)],
    manifest: &Manifest,
    n_grid: &[usize],
    repeats: usize,
    seed: u64,
) -> Result<Vec<SubsampleRow>> {
    if repeats < 2 {
        return Err(Error::invalid("subsampling needs at least 2 repeats"));
    }
    let groups = rated_groups(scores, manifest)?;
    let smallest = groups.iter().map(|g| g.scores.len()).min().unwrap_or(0);
    for &n in n_grid {
        if n == 0 || n > smallest {
            return Err(Error::invalid(format!(
                "n = {n} outside 1..={smallest} (smallest scored group)"
            )));
        }
    }
    let jobs: Vec<(usize, usize)> = n_grid
        .iter()
        .flat_map(|&n| (0..repeats).map(move |r| (n, r)))
        .collect();
    let rs: Vec<f64> = jobs
        .par_iter()
        .map(|&(n, rep)| {
            let mut rng = SeededRng::derive(mix64(seed ^ n as u64), rep as u64);
            one_repeat(&groups, n, &mut rng)
        })
        .collect::<Result<_>>()?;
    Ok(n_grid
        .iter()
        .zip(rs.chunks(repeats))
        .map(|(&n, chunk)| {
            let k = chunk.len() as f64;
            // shifted by the first draw, so identical draws give exactly zero spread
            let shift = chunk[0];
            let mean = shift + chunk.iter().map(|r| r - shift).sum::<f64>() / k;
            let var = chunk.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1.0);
            let half = 1.96 * var.sqrt() / k.sqrt();
            SubsampleRow {
                n,
                mean_r: mean,
                ci_low: mean - half,
                ci_high: mean + half,
                repeats,
            }
        })
        .collect())
}
