//! Data model and on-disk formats shared with the external feature extractors.

mod manifest;
mod wav;
mod xpgf;

pub use manifest::{load_manifest, write_manifest, Manifest, UtteranceRecord, MANIFEST_HEADER};
pub use wav::{read_wav, write_wav, AudioBuffer, MIN_SAMPLE_RATE};
pub use xpgf::{
    decode_matrix, decode_matrix_f64, encode_matrix, encode_matrix_f64, read_feature_file,
    write_feature_file, FeatureMatrix, XPGF_MAGIC, XPGF_VERSION_F32, XPGF_VERSION_F64,
};

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Per-utterance inputs to the fusion stage.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    pub xvec: FeatureMatrix,
    pub ppg: FeatureMatrix,
}

impl FeatureBundle {
    pub fn new(xvec: FeatureMatrix, ppg: FeatureMatrix) -> Result<Self> {
        if xvec.rows() != 1 {
            return Err(Error::invalid(format!(
                "x-vector must be 1xD, got {}x{}",
                xvec.rows(),
                xvec.cols()
            )));
        }
        ppg.check_probability_like()?;
        Ok(Self { xvec, ppg })
    }

    pub fn xvec_dim(&self) -> usize {
        self.xvec.cols()
    }

    pub fn ppg_units(&self) -> usize {
        self.ppg.cols()
    }
}

pub fn xvec_path(feature_dir: &Path, utterance_id: &str) -> PathBuf {
    feature_dir.join(format!("{utterance_id}.xvec.xpgf"))
}

pub fn ppg_path(feature_dir: &Path, utterance_id: &str) -> PathBuf {
    feature_dir.join(format!("{utterance_id}.ppg.xpgf"))
}

/// Loads `<id>.xvec.xpgf` and `<id>.ppg.xpgf` for one utterance.
pub fn load_bundle(feature_dir: &Path, utterance_id: &str) -> Result<FeatureBundle> {
    let load = |path: PathBuf| {
        if !path.exists() {
            return Err(Error::MissingFeature {
                utterance_id: utterance_id.to_string(),
                path,
            });
        }
        read_feature_file(&path)
    };
    let xvec = load(xvec_path(feature_dir, utterance_id))?;
    let ppg = load(ppg_path(feature_dir, utterance_id))?;
    FeatureBundle::new(xvec, ppg)
        .map_err(|e| Error::invalid(format!("utterance `{utterance_id}`: {e}")))
}

pub fn save_bundle(feature_dir: &Path, utterance_id: &str, bundle: &FeatureBundle) -> Result<()> {
    write_feature_file(&bundle.xvec, &xvec_path(feature_dir, utterance_id))?;
    write_feature_file(&bundle.ppg, &ppg_path(feature_dir, utterance_id))
}

/// Loads bundles for every record and checks that D_x and K agree across the corpus.
pub fn load_corpus_bundles(manifest: &Manifest, feature_dir: &Path) -> Result<Vec<FeatureBundle>> {
    let bundles: Vec<FeatureBundle> = manifest
        .records()
        .par_iter()
        .map(|r| load_bundle(feature_dir, &r.utterance_id))
        .collect::<Result<_>>()?;
    check_consistent_dims(manifest, &bundles)?;
    Ok(bundles)
}

pub(crate) fn check_consistent_dims(manifest: &Manifest, bundles: &[FeatureBundle]) -> Result<()> {
    let Some(first) = bundles.first() else {
        return Ok(());
    };
    let (dx, k) = (first.xvec_dim(), first.ppg_units());
    for (rec, b) in manifest.records().iter().zip(bundles) {
        if b.xvec_dim() != dx {
            return Err(Error::invalid(format!(
                "utterance `{}`: x-vector dimension {} differs from corpus dimension {dx}",
                rec.utterance_id,
                b.xvec_dim()
            )));
        }
        if b.ppg_units() != k {
            return Err(Error::invalid(format!(
                "utterance `{}`: PPG has {} units, corpus has {k}",
                rec.utterance_id,
                b.ppg_units()
            )));
        }
    }
    Ok(())
}
