//! Principal component model over fused vectors and severity scoring.
//!
//! Components are the leading eigenvectors of the scatter matrix of the
//! (optionally mean-centered) data, i.e. its right singular vectors. Each component is sign-fixed so that its largest-magnitude entry is
//! positive (first index wins ties). Only the first component scores.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::corpus::{decode_matrix_f64, encode_matrix_f64};
use crate::error::{Error, Result};
use crate::fusion::{FusedVector, FusionMode};

pub const MODEL_MAGIC: &[u8; 8] = b"XPGPCA01";
const MAGIC_STEM: &[u8; 6] = b"XPGPCA";
const ORTHONORMAL_TOL: f64 = 1e-8;

/// Provenance of the vectors a model was fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PcaMeta {
    pub mode: FusionMode,
    pub moment_order: usize,
    pub xvec_dim: usize,
    pub ppg_units: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PcaOptions {
    /// Number of components kept; `None` keeps `min(N, D)`.
    pub rank: Option<usize>,
    /// Subtract the column mean before decomposition.
    pub centered: bool,
}

impl Default for PcaOptions {
    fn default() -> Self {
        Self {
            rank: None,
            centered: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// R x D, row-major, orthonormal rows.
    components: Vec<f64>,
    singular_values: Vec<f64>,
    meta: PcaMeta,
}

/// A fitted model together with the training data's coordinates on the first component.
#[derive(Debug, Clone)]
pub struct PcaFit {
    pub model: PcaModel,
    /// `U[:, 0] * s_0`, sign-matched to the stored component.
    pub train_projections: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeverityScore {
    pub utterance_id: String,
    pub score: f64,
}

fn apply_sign_convention(v: &mut [f64]) -> bool {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
        true
    } else {
        false
    }
}

/// Fits on `rows` (N vectors of length D).
pub fn fit(rows: &[Vec<f64>], opts: PcaOptions, meta: PcaMeta) -> Result<PcaFit> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::invalid(format!("PCA needs at least 2 rows, got {n}")));
    }
    let d = rows[0].len();
    if d == 0 {
        return Err(Error::invalid("PCA input has zero columns"));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rows[bad].len(),
        });
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("PCA input has non-finite values"));
    }
    let full = n.min(d);
    let rank = opts.rank.unwrap_or(full);
    if rank == 0 || rank > full {
        return Err(Error::invalid(format!(
            "rank {rank} outside 1..={full} for {n}x{d} input"
        )));
    }

    let mut mean = vec![0.0; d];
    if opts.centered {
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
    }
    let centered = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
    // nalgebra's SVD loses accuracy on rank-deficient input, which centering
    // always produces, so decompose the scatter matrix instead
    let scatter = centered.tr_mul(&centered);
    let eig = scatter.symmetric_eigen();
    let lambda = eig.eigenvalues;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| lambda[b].total_cmp(&lambda[a]).then(a.cmp(&b)));
    let top = lambda[order[0]].max(0.0);
    let floor = top * f64::EPSILON * (n.max(d) as f64);

    let mut components = Vec::with_capacity(rank * d);
    let mut singular_values = Vec::with_capacity(rank);
    for &idx in order.iter().take(rank) {
        let mut row: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        apply_sign_convention(&mut row);
        components.extend(row);
        let l = lambda[idx];
        singular_values.push(if l > floor { l.sqrt() } else { 0.0 });
    }
    let lead = DVector::from_column_slice(&components[..d]);
    let train_projections = (&centered * lead).iter().copied().collect();

    let model = PcaModel {
        mean,
        components,
        singular_values,
        meta,
    };
    Ok(PcaFit {
        model,
        train_projections,
    })
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn component(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.components[i * d..(i + 1) * d]
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn meta(&self) -> PcaMeta {
        self.meta
    }

    /// Projection of `v - mean` onto the first component.
    pub fn score_values(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let s: f64 = v
            .iter()
            .zip(&self.mean)
            .zip(self.component(0))
            .map(|((x, m), c)| (x - m) * c)
            .sum();
        if !s.is_finite() {
            return Err(Error::Numerical("non-finite score".into()));
        }
        Ok(s)
    }

    pub fn score(&self, v: &FusedVector) -> Result<f64> {
        self.score_values(v.values())
    }

    /// Coordinates of `v - mean` on every retained component.
    pub fn transform(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok((0..self.rank())
            .map(|i| {
                v.iter()
                    .zip(&self.mean)
                    .zip(self.component(i))
                    .map(|((x, m), c)| (x - m) * c)
                    .sum()
            })
            .collect())
    }

    fn check_invariants(&self) -> Result<()> {
        let r = self.rank();
        for i in 0..r {
            for j in i..r {
                let dot: f64 = self
                    .component(i)
                    .iter()
                    .zip(self.component(j))
                    .map(|(a, b)| a * b)
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > ORTHONORMAL_TOL {
                    return Err(Error::Format(format!(
                        "components {i} and {j} not orthonormal (dot {dot})"
                    )));
                }
            }
        }
        if self.singular_values.iter().any(|&s| s < 0.0)
            || self.singular_values.windows(2).any(|w| w[0] < w[1])
        {
            return Err(Error::Format("singular values not sorted non-negative".into()));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        let header = [
            self.dim(),
            self.rank(),
            self.meta.mode.code() as usize,
            self.meta.moment_order,
            self.meta.xvec_dim,
            self.meta.ppg_units,
        ];
        for h in header {
            let v = u32::try_from(h).map_err(|_| Error::Format(format!("header value {h} exceeds u32")))?;
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend(encode_matrix_f64(1, self.dim(), &self.mean)?);
        out.extend(encode_matrix_f64(1, self.rank(), &self.singular_values)?);
        out.extend(encode_matrix_f64(self.rank(), self.dim(), &self.components)?);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 + 24 {
            return Err(Error::Format("model file truncated".into()));
        }
        if &bytes[..8] != MODEL_MAGIC {
            if &bytes[..6] == MAGIC_STEM {
                return Err(Error::Format(format!(
                    "model version `{}` unsupported, expected `01`",
                    String::from_utf8_lossy(&bytes[6..8])
                )));
            }
            return Err(Error::Format("bad model magic".into()));
        }
        let field = |i: usize| {
            u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().expect("4 bytes")) as usize
        };
        let (d, r) = (field(0), field(1));
        let meta = PcaMeta {
            mode: FusionMode::from_code(field(2) as u32)?,
            moment_order: field(3),
            xvec_dim: field(4),
            ppg_units: field(5),
        };
        let mut at = 32;
        let mut block = |want_rows: usize, want_cols: usize, name: &str| -> Result<Vec<f64>> {
            let (rows, cols, values, used) = decode_matrix_f64(&bytes[at..])
                .map_err(|e| Error::Format(format!("model {name}: {e}")))?;
            if (rows, cols) != (want_rows, want_cols) {
                return Err(Error::Format(format!(
                    "model {name} is {rows}x{cols}, header implies {want_rows}x{want_cols}"
                )));
            }
            at += used;
            Ok(values)
        };
        let mean = block(1, d, "mean")?;
        let singular_values = block(1, r, "singular values")?;
        let components = block(r, d, "components")?;
        if at != bytes.len() {
            return Err(Error::Format("trailing bytes after model payload".into()));
        }
        let model = PcaModel {
            mean,
            components,
            singular_values,
            meta,
        };
        model.check_invariants()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}
