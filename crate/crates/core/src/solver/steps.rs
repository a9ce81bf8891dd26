//! Individual ADMM updates. Each is a closed-form minimiser of the augmented
//! Lagrangian in one block of variables with the others held fixed.

use crate::error::Result;
use crate::prox::{self, ShrinkageSpec};
use crate::tensor::{apply_constraint, fold, unfold, Mode, ObservationMask, Tensor3};

/// Low-rank block update for one mode.
///
/// Shrinks the mode-k unfolding of `M - E_k - T_k / rho` and folds it back.
/// Returns the new `L_k` with the singular values of its unfolding.
pub fn update_low_rank(
    m: &Tensor3,
    anomaly: Option<&Tensor3>,
    multiplier: &Tensor3,
    rho: f64,
    mode: Mode,
    spec: &ShrinkageSpec,
    sigma_prev: Option<&[f64]>,
) -> Result<(Tensor3, Vec<f64>)> {
    let inv = 1.0 / rho;
    let z = match anomaly {
        Some(e) => {
            let mut z = m.zip_map(e, |a, b| a - b);
            z.axpy(-inv, multiplier);
            z
        }
        None => m.zip_map(multiplier, |a, t| a - inv * t),
    };
    let shrunk = prox::shrink(&unfold(&z, mode).matrix, spec, sigma_prev)?;
    Ok((fold(&shrunk.matrix, mode, m.dims())?, shrunk.sigma))
}

/// `sum_k alpha_k L_k`.
pub fn aggregate(parts: &[Tensor3; 3], alpha: &[f64; 3]) -> Tensor3 {
    let mut out = Tensor3::zeros(parts[0].dims());
    for (p, &a) in parts.iter().zip(alpha) {
        out.axpy(a, p);
    }
    out
}

/// Unconstrained minimiser of the consensus block with equal penalties:
/// `(1 / 3 rho) * sum_k (rho L_k + rho E_k + T_k)`.
pub fn consensus(
    low_rank: &[Tensor3; 3],
    anomaly: Option<&[Tensor3; 3]>,
    multipliers: &[Tensor3; 3],
    rho: f64,
) -> Tensor3 {
    let dims = low_rank[0].dims();
    let mut acc = Tensor3::zeros(dims);
    for k in 0..3 {
        acc.axpy(rho, &low_rank[k]);
        if let Some(e) = anomaly {
            acc.axpy(rho, &e[k]);
        }
        acc.axpy(1.0, &multipliers[k]);
    }
    acc.scale(1.0 / (3.0 * rho))
}

/// Consensus update followed by re-imposing the observations.
pub fn update_consensus(
    low_rank: &[Tensor3; 3],
    anomaly: Option<&[Tensor3; 3]>,
    multipliers: &[Tensor3; 3],
    rho: f64,
    y: &Tensor3,
    mask: &ObservationMask,
) -> Result<Tensor3> {
    apply_constraint(&consensus(low_rank, anomaly, multipliers, rho), y, mask)
}

/// Sparse anomaly update: `soft(M - L_k - T_k / rho, lambda / rho)`.
pub fn update_anomaly(m: &Tensor3, low_rank: &Tensor3, multiplier: &Tensor3, rho: f64, lambda: f64) -> Tensor3 {
    let inv = 1.0 / rho;
    let kappa = lambda / rho;
    let mut h = m.sub(low_rank);
    h.axpy(-inv, multiplier);
    h.map(|v| prox::soft(v, kappa))
}

/// Dual ascent: `T_k + rho (L_k + E_k - M)`.
pub fn update_multiplier(
    multiplier: &Tensor3,
    low_rank: &Tensor3,
    anomaly: Option<&Tensor3>,
    m: &Tensor3,
    rho: f64,
) -> Tensor3 {
    let mut residual = low_rank.sub(m);
    if let Some(e) = anomaly {
        residual.axpy(1.0, e);
    }
    let mut out = multiplier.clone();
    out.axpy(rho, &residual);
    out
}
