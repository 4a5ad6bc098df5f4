//! Train on one corpus, score another.

use std::path::PathBuf;

use super::scorers::FusionSettings;
use super::stats::Correlation;
use super::table::{aggregate, correlate_groups};
use crate::corpus::{load_corpus_bundles, FeatureBundle, Manifest};
use crate::error::{Error, Result};
use crate::pca::{PcaModel, PcaOptions};
use crate::pipeline::{fit_bundles, fuse_all};

#[derive(Debug, Clone)]
pub struct CorpusSpec {
    pub name: String,
    pub manifest: Manifest,
    pub feature_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCell {
    pub train: String,
    pub test: String,
    pub correlation: Correlation,
}

fn load(spec: &CorpusSpec) -> Result<Vec<FeatureBundle>> {
    load_corpus_bundles(&spec.manifest, &spec.feature_dir).map_err(|e| Error::in_corpus(&spec.name, e))
}

fn score_corpus(model: &PcaModel, spec: &CorpusSpec, bundles: &[FeatureBundle], settings: FusionSettings) -> Result<Correlation> {
    let fused = fuse_all(bundles, settings.mode, settings.moments)?;
    let scores = spec
        .manifest
        .records()
        .iter()
        .zip(&fused)
        .map(|(r, v)| Ok((r.utterance_id.clone(), model.score(v)?)))
        .collect::<Result<Vec<_>>>()?;
    correlate_groups(&aggregate(&scores, &spec.manifest)?)
}

/// Row-major: for each training corpus, one cell per test corpus.
pub fn run_cross_matrix(
    train: &[CorpusSpec],
    test: &[CorpusSpec],
    settings: FusionSettings,
    opts: PcaOptions,
) -> Result<Vec<CrossCell>> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::invalid("need at least one training and one test corpus"));
    }
    let test_bundles = test.iter().map(load).collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::with_capacity(train.len() * test.len());
    for tr in train {
        let bundles = match test.iter().position(|t| t.name == tr.name) {
            Some(i) => test_bundles[i].clone(),
            None => load(tr)?,
        };
        let model = fit_bundles(&bundles, settings.mode, settings.moments, opts)
            .map_err(|e| Error::in_corpus(&tr.name, e))?
            .model;
        for (te, tb) in test.iter().zip(&test_bundles) {
            let correlation = score_corpus(&model, te, tb, settings)
                .map_err(|e| Error::in_corpus(&te.name, e))?;
            cells.push(CrossCell {
                train: tr.name.clone(),
                test: te.name.clone(),
                correlation,
            });
        }
    }
    Ok(cells)
}
