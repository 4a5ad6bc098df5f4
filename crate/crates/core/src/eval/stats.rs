//! Correlation, error and reliability statistics.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided p-value from the t-transform with n - 2 degrees of freedom.
    pub p: f64,
    pub n: usize,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::invalid(format!("pearson needs at least 3 pairs, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("pearson input has non-finite values"));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("pearson input has zero variance".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(Correlation {
        r,
        p: r_p_value(r, n),
        n,
    })
}

/// Two-sided p-value of correlation `r` over `n` pairs.
pub fn r_p_value(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

pub fn rmse(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::invalid("rmse of empty sequences"));
    }
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((ss / x.len() as f64).sqrt())
}

/// Complete subjects x raters matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsMatrix {
    rows: Vec<Vec<f64>>,
}

impl RatingsMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::invalid("need at least 2 subjects"));
        }
        let k = rows[0].len();
        if k < 2 {
            return Err(Error::invalid("need at least 2 raters"));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: bad.len(),
            });
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("ratings must be finite"));
        }
        Ok(Self { rows })
    }

    pub fn subjects(&self) -> usize {
        self.rows.len()
    }

    pub fn raters(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Two-way mean squares: (rows, columns, residual).
pub fn mean_squares(m: &RatingsMatrix) -> (f64, f64, f64) {
    let (n, k) = (m.subjects(), m.raters());
    let nk = (n * k) as f64;
    let grand = m.rows.iter().flatten().sum::<f64>() / nk;
    let row_means: Vec<f64> = m.rows.iter().map(|r| mean(r)).collect();
    let col_means: Vec<f64> = (0..k)
        .map(|j| m.rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let ssr = k as f64 * row_means.iter().map(|v| (v - grand).powi(2)).sum::<f64>();
    let ssc = n as f64 * col_means.iter().map(|v| (v - grand).powi(2)).sum::<f64>();
    let sst: f64 = m.rows.iter().flatten().map(|v| (v - grand).powi(2)).sum();
    let sse = (sst - ssr - ssc).max(0.0);
    (
        ssr / (n - 1) as f64,
        ssc / (k - 1) as f64,
        sse / ((n - 1) * (k - 1)) as f64,
    )
}

/// ICC(2,k): two-way random effects, average of k raters.
pub fn icc_2k(m: &RatingsMatrix) -> Result<f64> {
    let (msr, msc, mse) = mean_squares(m);
    if msr == 0.0 {
        return Err(Error::Degenerate("no between-subject variance".into()));
    }
    let denom = msr + (msc - mse) / m.subjects() as f64;
    if denom == 0.0 {
        return Err(Error::Degenerate("ICC denominator is zero".into()));
    }
    Ok((msr - mse) / denom)
}

/// Significance marker: `***` below 0.001, `**` below 0.01, `*` below 0.05.
pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}
