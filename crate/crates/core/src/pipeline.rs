//! Corpus-level fusion and model fitting.

use rayon::prelude::*;

use crate::corpus::FeatureBundle;
use crate::error::{Error, Result};
use crate::fusion::{fuse, FusedVector, FusionMode, MomentConfig};
use crate::pca::{fit, PcaFit, PcaMeta, PcaOptions};

/// Fuses every bundle; output order matches input order.
pub fn fuse_all(bundles: &[FeatureBundle], mode: FusionMode, moments: MomentConfig) -> Result<Vec<FusedVector>> {
    bundles
        .par_iter()
        .map(|b| fuse(b, moments, mode))
        .collect()
}

pub fn meta_for(bundles: &[FeatureBundle], mode: FusionMode, moments: MomentConfig) -> Result<PcaMeta> {
    let first = bundles
        .first()
        .ok_or_else(|| Error::invalid("no feature bundles"))?;
    Ok(PcaMeta {
        mode,
        moment_order: moments.max_order(),
        xvec_dim: first.xvec_dim(),
        ppg_units: first.ppg_units(),
    })
}

pub fn fit_bundles(
    bundles: &[FeatureBundle],
    mode: FusionMode,
    moments: MomentConfig,
    opts: PcaOptions,
) -> Result<PcaFit> {
    let meta = meta_for(bundles, mode, moments)?;
    let rows: Vec<Vec<f64>> = fuse_all(bundles, mode, moments)?
        .into_iter()
        .map(FusedVector::into_values)
        .collect();
    fit(&rows, opts, meta)
}
