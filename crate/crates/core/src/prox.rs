//! Proximal operators on unfolded matrices and tensors.
//!
//! All singular-value rules share one shape: decompose `Z = U diag(s) Vᵀ`,
//! replace `s` elementwise and recompose. They differ only in the rule:
//!
//! | kind          | output singular value                       |
//! |---------------|---------------------------------------------|
//! | log-weighted  | `max(s_i - tau / (s_prev_i + eps), 0)`      |
//! | plain         | `max(s_i - tau, 0)`                         |
//! | truncated     | `s_i` for `i < r`, else `max(s_i - tau, 0)` |
//!
//! The log-weighted rule is the proximal step of the linearised surrogate
//! `sum_i log(s_i + eps)`; the weights grow as singular values shrink, so
//! small (noise) directions are removed first while dominant directions are
//! barely touched.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// Thin singular value decomposition with singular values sorted descending.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub vt: DMatrix<f64>,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.recompose(&self.sigma)
    }

    /// `U diag(sigma) Vᵀ` with replacement singular values; zero entries are skipped.
    pub fn recompose(&self, sigma: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(sigma.len(), self.sigma.len());
        let keep: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] != 0.0).collect();
        if keep.is_empty() {
            return DMatrix::zeros(self.u.nrows(), self.vt.ncols());
        }
        let mut us = self.u.select_columns(&keep);
        for (c, &i) in keep.iter().enumerate() {
            us.column_mut(c).scale_mut(sigma[i]);
        }
        us * self.vt.select_rows(&keep)
    }
}

pub fn svd(m: &DMatrix<f64>) -> Result<SvdFactors> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("svd input contains non-finite values".into()));
    }
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    let dec = faer::MatRef::from_column_major_slice(m.as_slice(), rows, cols)
        .thin_svd()
        .map_err(|e| Error::Numeric(format!("svd of {rows}x{cols} failed: {e:?}")))?;
    let (u, s, v) = (dec.U(), dec.S().column_vector(), dec.V());

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    Ok(SvdFactors {
        u: DMatrix::from_fn(rows, k, |i, c| u[(i, order[c])]),
        sigma: order.iter().map(|&i| s[i].max(0.0)).collect(),
        vt: DMatrix::from_fn(k, cols, |c, j| v[(j, order[c])]),
    })
}

/// Which singular-value rule to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShrinkageKind {
    LogWeighted,
    Plain,
    Truncated,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShrinkageSpec {
    pub kind: ShrinkageKind,
    pub tau: f64,
    pub epsilon: f64,
    pub truncation_r: usize,
}

impl ShrinkageSpec {
    pub fn log_weighted(tau: f64, epsilon: f64) -> Self {
        ShrinkageSpec {
            kind: ShrinkageKind::LogWeighted,
            tau,
            epsilon,
            truncation_r: 0,
        }
    }

    pub fn plain(tau: f64) -> Self {
        ShrinkageSpec {
            kind: ShrinkageKind::Plain,
            tau,
            epsilon: 1e-6,
            truncation_r: 0,
        }
    }

    pub fn truncated(tau: f64, r: usize) -> Self {
        ShrinkageSpec {
            kind: ShrinkageKind::Truncated,
            tau,
            epsilon: 1e-6,
            truncation_r: r,
        }
    }

    /// Checks the spec against a matrix with `rank_bound = min(rows, cols)`.
    pub fn validate(&self, rank_bound: usize) -> Result<()> {
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::Parameter(format!("threshold must be >= 0, got {}", self.tau)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Parameter(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.kind == ShrinkageKind::Truncated && self.truncation_r >= rank_bound {
            return Err(Error::Parameter(format!(
                "truncation r = {} must be below min(rows, cols) = {rank_bound}",
                self.truncation_r
            )));
        }
        Ok(())
    }
}

/// Result of a singular-value shrinkage: the matrix and its singular values.
#[derive(Clone, Debug)]
pub struct Shrunk {
    pub matrix: DMatrix<f64>,
    pub sigma: Vec<f64>,
}

/// `w_i = 1 / (sigma_i + eps)`.
pub fn log_weights(sigma_prev: &[f64], epsilon: f64) -> Vec<f64> {
    sigma_prev.iter().map(|&s| 1.0 / (s + epsilon)).collect()
}

/// Applies `spec` to the singular values `sigma` of the shrinkage input.
///
/// For the log-weighted rule the weights come from `sigma_prev`, or from
/// `sigma` itself when `sigma_prev` is `None`.
pub fn shrink_values(sigma: &[f64], spec: &ShrinkageSpec, sigma_prev: Option<&[f64]>) -> Vec<f64> {
    match spec.kind {
        ShrinkageKind::LogWeighted => {
            let w = log_weights(sigma_prev.unwrap_or(sigma), spec.epsilon);
            sigma
                .iter()
                .zip(&w)
                .map(|(&s, &wi)| (s - spec.tau * wi).max(0.0))
                .collect()
        }
        ShrinkageKind::Plain => sigma.iter().map(|&s| (s - spec.tau).max(0.0)).collect(),
        ShrinkageKind::Truncated => sigma
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                if i < spec.truncation_r {
                    s
                } else {
                    (s - spec.tau).max(0.0)
                }
            })
            .collect(),
    }
}

/// Shared entry point for the three singular-value rules.
pub fn shrink(z: &DMatrix<f64>, spec: &ShrinkageSpec, sigma_prev: Option<&[f64]>) -> Result<Shrunk> {
    let k = z.nrows().min(z.ncols());
    spec.validate(k)?;
    if let Some(p) = sigma_prev {
        if p.len() != k {
            return Err(Error::Shape(format!(
                "{} previous singular values for a matrix with {k}",
                p.len()
            )));
        }
    }
    let f = svd(z)?;
    let sigma = shrink_values(&f.sigma, spec, sigma_prev);
    Ok(Shrunk {
        matrix: f.recompose(&sigma),
        sigma,
    })
}

/// Weighted singular value thresholding `U (S - tau diag(w))_+ Vᵀ` with
/// `w = log_weights(sigma_prev, spec.epsilon)`.
pub fn weighted_svt(z: &DMatrix<f64>, spec: &ShrinkageSpec, sigma_prev: &[f64]) -> Result<DMatrix<f64>> {
    if spec.kind != ShrinkageKind::LogWeighted {
        return Err(Error::Parameter("weighted_svt needs a log-weighted spec".into()));
    }
    Ok(shrink(z, spec, Some(sigma_prev))?.matrix)
}

/// Proximal operator of `tau * nuclear norm`.
pub fn plain_svt(z: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    Ok(shrink(z, &ShrinkageSpec::plain(tau), None)?.matrix)
}

/// Leaves the `r` largest singular values untouched and soft-shrinks the rest.
pub fn truncated_svt(z: &DMatrix<f64>, tau: f64, r: usize) -> Result<DMatrix<f64>> {
    Ok(shrink(z, &ShrinkageSpec::truncated(tau, r), None)?.matrix)
}

/// Scalar soft threshold `sgn(h) * max(|h| - kappa, 0)`.
#[inline]
pub fn soft(h: f64, kappa: f64) -> f64 {
    if h > kappa {
        h - kappa
    } else if h < -kappa {
        h + kappa
    } else {
        0.0
    }
}

/// Elementwise soft threshold, the proximal operator of `kappa * l1`.
pub fn soft_threshold(h: &Tensor3, kappa: f64) -> Tensor3 {
    h.map(|v| soft(v, kappa))
}

/// `sum_i log(sigma_i + eps)` over given singular values.
pub fn log_surrogate_of(sigma: &[f64], epsilon: f64) -> f64 {
    sigma.iter().map(|&s| (s + epsilon).ln()).sum()
}

/// Log-determinant rank surrogate of a matrix.
pub fn log_surrogate(m: &DMatrix<f64>, epsilon: f64) -> Result<f64> {
    Ok(log_surrogate_of(&svd(m)?.sigma, epsilon))
}
