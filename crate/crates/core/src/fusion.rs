//! Reduction of a [`FeatureBundle`] to one static vector per utterance.
//!
//! The PPG is summarized per phonetic stream by its moments up to order M,
//! laid out stream-major (`[m1_k1, .., mM_k1, .., m1_kK, .., mM_kK]`). Order 1
//! is the stream mean; orders 2..=M are central moments `(1/T) sum (p - mean)^m`,
//! not standardized. Each feature family is L2-normalized on its own before
//! concatenation so neither dominates by scale.

use std::fmt;
use std::str::FromStr;

use crate::corpus::{FeatureBundle, FeatureMatrix};
use crate::error::{Error, Result};

pub const MAX_MOMENT_ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MomentConfig {
    max_order: usize,
}

impl MomentConfig {
    pub fn new(max_order: usize) -> Result<Self> {
        if !(1..=MAX_MOMENT_ORDER).contains(&max_order) {
            return Err(Error::invalid(format!(
                "moment order {max_order} outside 1..={MAX_MOMENT_ORDER}"
            )));
        }
        Ok(Self { max_order })
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }
}

impl Default for MomentConfig {
    fn default() -> Self {
        Self { max_order: 1 }
    }
}

/// Which feature families enter the fused vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FusionMode {
    #[default]
    Both,
    XvecOnly,
    PpgOnly,
}

impl FusionMode {
    pub fn code(self) -> u32 {
        match self {
            FusionMode::Both => 0,
            FusionMode::XvecOnly => 1,
            FusionMode::PpgOnly => 2,
        }
    }

    pub fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(FusionMode::Both),
            1 => Ok(FusionMode::XvecOnly),
            2 => Ok(FusionMode::PpgOnly),
            other => Err(Error::Format(format!("unknown fusion mode code {other}"))),
        }
    }

    /// Length of the fused vector for x-vector dimension `dx`, `k` PPG units and order `m`.
    pub fn fused_dim(self, dx: usize, k: usize, m: usize) -> usize {
        match self {
            FusionMode::Both => dx + m * k,
            FusionMode::XvecOnly => dx,
            FusionMode::PpgOnly => m * k,
        }
    }
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FusionMode::Both => "both",
            FusionMode::XvecOnly => "xvec_only",
            FusionMode::PpgOnly => "ppg_only",
        })
    }
}

impl FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(FusionMode::Both),
            "xvec_only" | "xvec-only" => Ok(FusionMode::XvecOnly),
            "ppg_only" | "ppg-only" => Ok(FusionMode::PpgOnly),
            other => Err(Error::invalid(format!(
                "unknown fusion mode `{other}` (expected both, xvec_only, ppg_only)"
            ))),
        }
    }
}

/// Fused static feature `[l2(xvec) | l2(moments)]` (or one segment, per mode).
#[derive(Debug, Clone, PartialEq)]
pub struct FusedVector {
    values: Vec<f64>,
}

impl FusedVector {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("fused vector has non-finite entries"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Moment vector of length `M * K`, stream-major.
pub fn ppg_moments(ppg: &FeatureMatrix, cfg: MomentConfig) -> Result<Vec<f64>> {
    let (t, k) = (ppg.rows(), ppg.cols());
    if t == 0 || k == 0 {
        return Err(Error::invalid("PPG matrix is empty"));
    }
    let m = cfg.max_order();
    let mut out = vec![0.0; m * k];
    // one pass for the means, one for the central powers
    let mut means = vec![0.0; k];
    for row in 0..t {
        for (mean, &p) in means.iter_mut().zip(ppg.row(row)) {
            *mean += f64::from(p);
        }
    }
    for mean in &mut means {
        *mean /= t as f64;
    }
    for row in 0..t {
        for (col, &p) in ppg.row(row).iter().enumerate() {
            let d = f64::from(p) - means[col];
            let mut power = d;
            for order in 2..=m {
                power *= d;
                out[col * m + order - 1] += power;
            }
        }
    }
    for col in 0..k {
        out[col * m] = means[col];
        for order in 2..=m {
            out[col * m + order - 1] /= t as f64;
        }
    }
    Ok(out)
}

/// Unit-norm copy of `v`; the all-zero vector is returned unchanged.
pub fn l2_normalize(v: &[f64]) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("cannot normalize a non-finite vector"));
    }
    // scale first so very large or small entries do not overflow the square sum
    let max_abs = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if max_abs == 0.0 {
        return Ok(v.to_vec());
    }
    let norm = v.iter().map(|x| (x / max_abs).powi(2)).sum::<f64>().sqrt() * max_abs;
    Ok(v.iter().map(|x| x / norm).collect())
}

pub fn fuse(bundle: &FeatureBundle, cfg: MomentConfig, mode: FusionMode) -> Result<FusedVector> {
    let mut values = Vec::with_capacity(mode.fused_dim(
        bundle.xvec_dim(),
        bundle.ppg_units(),
        cfg.max_order(),
    ));
    if mode != FusionMode::PpgOnly {
        values.extend(l2_normalize(&bundle.xvec.to_f64())?);
    }
    if mode != FusionMode::XvecOnly {
        values.extend(l2_normalize(&ppg_moments(&bundle.ppg, cfg)?)?);
    }
    FusedVector::from_values(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use proptest::prelude::*;

    /// Direct evaluation of the moment definition, no shared code with `ppg_moments`.
    fn naive_moments(rows: &[Vec<f64>], m: usize) -> Vec<f64> {
        let t = rows.len();
        let k = rows[0].len();
        let mut out = Vec::new();
        for col in 0..k {
            let mut mean = 0.0;
            for r in rows {
                mean += r[col];
            }
            mean /= t as f64;
            out.push(mean);
            for order in 2..=m {
                let mut acc = 0.0;
                for r in rows {
                    acc += (r[col] - mean).powi(order as i32);
                }
                out.push(acc / t as f64);
            }
        }
        out
    }

    fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
        FeatureMatrix::from_rows_f64(rows).unwrap()
    }

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn constant_stream_has_zero_variance() {
        let rows = vec![vec![0.3f32 as f64]; 7];
        let mom = ppg_moments(&matrix(&rows), MomentConfig::new(2).unwrap()).unwrap();
        assert_eq!(mom[0], f64::from(0.3f32));
        assert_eq!(mom[1], 0.0);
    }

    #[test]
    fn two_frame_stream() {
        let rows = vec![vec![0.0], vec![1.0]];
        let mom = ppg_moments(&matrix(&rows), MomentConfig::new(2).unwrap()).unwrap();
        assert_eq!(mom, vec![0.5, 0.25]);
    }

    #[test]
    fn three_frame_third_order() {
        let rows = vec![vec![0.0], vec![0.0], vec![1.0]];
        let mom = ppg_moments(&matrix(&rows), MomentConfig::new(3).unwrap()).unwrap();
        let oracle = naive_moments(&rows, 3);
        // mean 1/3, var 2/9, third central moment 2/27
        assert!((oracle[1] - 2.0 / 9.0).abs() < 1e-15);
        assert!((oracle[2] - 2.0 / 27.0).abs() < 1e-15);
        for (a, b) in mom.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn layout_is_stream_major() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 1.0]];
        let mom = ppg_moments(&matrix(&rows), MomentConfig::new(2).unwrap()).unwrap();
        assert_eq!(mom, vec![0.5, 0.25, 1.0, 0.0]);
    }

    #[test]
    fn moment_config_range() {
        assert!(MomentConfig::new(0).is_err());
        assert!(MomentConfig::new(6).is_err());
        assert!(MomentConfig::new(5).is_ok());
    }

    #[test]
    fn normalize_cases() {
        assert_eq!(l2_normalize(&[3.0, 4.0]).unwrap(), vec![0.6, 0.8]);
        assert_eq!(l2_normalize(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(l2_normalize(&[0.0, 1.0, 0.0]).unwrap(), vec![0.0, 1.0, 0.0]);
        assert!(l2_normalize(&[1.0, f64::NAN]).is_err());
        let huge = l2_normalize(&[1e300, 1e300]).unwrap();
        assert!((norm(&huge) - 1.0).abs() < 1e-12);
    }

    fn random_bundle(rng: &mut SeededRng, dx: usize, k: usize, t: usize) -> FeatureBundle {
        let xvec = FeatureMatrix::row_vector((0..dx).map(|_| rng.normal() as f32).collect()).unwrap();
        let ppg = FeatureMatrix::new(t, k, (0..t * k).map(|_| rng.uniform() as f32).collect()).unwrap();
        FeatureBundle::new(xvec, ppg).unwrap()
    }

    #[test]
    fn fuse_modes() {
        let mut rng = SeededRng::new(11);
        let b = random_bundle(&mut rng, 192, 5, 30);
        let cfg = MomentConfig::new(1).unwrap();
        let both = fuse(&b, cfg, FusionMode::Both).unwrap();
        assert_eq!(both.len(), 197);
        assert!((norm(&both.values()[..192]) - 1.0).abs() < 1e-12);
        assert!((norm(&both.values()[192..]) - 1.0).abs() < 1e-12);

        let x = fuse(&b, cfg, FusionMode::XvecOnly).unwrap();
        assert_eq!(x.values(), l2_normalize(&b.xvec.to_f64()).unwrap().as_slice());
        let p = fuse(&b, MomentConfig::new(3).unwrap(), FusionMode::PpgOnly).unwrap();
        assert_eq!(p.len(), 15);
    }

    #[test]
    fn mode_parsing() {
        for m in [FusionMode::Both, FusionMode::XvecOnly, FusionMode::PpgOnly] {
            assert_eq!(m.to_string().parse::<FusionMode>().unwrap(), m);
            assert_eq!(FusionMode::from_code(m.code()).unwrap(), m);
        }
        assert!("all".parse::<FusionMode>().is_err());
    }

    proptest! {
        #[test]
        fn moments_match_naive_loop(t in 1usize..=20, k in 1usize..=8, m in 1usize..=5, seed in any::<u64>()) {
            let mut rng = SeededRng::new(seed);
            let rows: Vec<Vec<f64>> = (0..t)
                .map(|_| (0..k).map(|_| f64::from(rng.uniform() as f32)).collect())
                .collect();
            let got = ppg_moments(&matrix(&rows), MomentConfig::new(m).unwrap()).unwrap();
            let want = naive_moments(&rows, m);
            for (a, b) in got.iter().zip(&want) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn frame_permutation_invariance(t in 2usize..=15, k in 1usize..=4, seed in any::<u64>()) {
            let mut rng = SeededRng::new(seed);
            let mut rows: Vec<Vec<f64>> = (0..t)
                .map(|_| (0..k).map(|_| f64::from(rng.uniform() as f32)).collect())
                .collect();
            let cfg = MomentConfig::new(4).unwrap();
            let a = ppg_moments(&matrix(&rows), cfg).unwrap();
            rng.shuffle(&mut rows);
            let b = ppg_moments(&matrix(&rows), cfg).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn normalize_is_scale_invariant(v in proptest::collection::vec(-100.0f64..100.0, 1..20), c in 1e-3f64..1e3) {
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            let a = l2_normalize(&v).unwrap();
            let b = l2_normalize(&scaled).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
