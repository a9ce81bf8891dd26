//! Seeded generation of masks, corruption and synthetic ground truth.
//!
//! Every function draws from its own `ChaCha8Rng` seeded with
//! `seed_from_u64`, so outputs are pure functions of their arguments.

use std::f64::consts::PI;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{check_dims, Dims, ObservationMask, Tensor3};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `round(rate * n)`, ties to even.
pub fn fraction_count(rate: f64, n: usize) -> usize {
    ((rate * n as f64).round_ties_even() as usize).min(n)
}

fn check_rate(name: &str, rate: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rate) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must lie in [0, 1], got {rate}")))
    }
}

/// Random-missing mask: exactly `round(rate * len)` entries missing.
pub fn rm_mask(dims: Dims, missing_rate: f64, seed: u64) -> Result<ObservationMask> {
    check_rate("missing rate", missing_rate)?;
    let n = dims.len();
    let mut mask = ObservationMask::full(dims);
    let missing = fraction_count(missing_rate, n);
    let mut r = rng(seed);
    for o in index::sample(&mut r, n, missing) {
        mask.as_mut_slice()[o] = false;
    }
    Ok(mask)
}

/// Non-random-missing mask: `round(rate * n1 * n3)` whole mode-2 fibers
/// `(i1, :, i3)` are removed.
pub fn nm_mask(dims: Dims, missing_rate: f64, seed: u64) -> Result<ObservationMask> {
    check_rate("missing rate", missing_rate)?;
    let [n1, n2, _] = dims.0;
    let fibers = n1 * dims.0[2];
    let drop = fraction_count(missing_rate, fibers);
    let mut mask = ObservationMask::full(dims);
    let mut r = rng(seed);
    for f in index::sample(&mut r, fibers, drop) {
        let (i1, i3) = (f % n1, f / n1);
        for i2 in 0..n2 {
            mask.set(i1, i2, i3, false);
        }
    }
    Ok(mask)
}

/// Mode-2 fibers `(i1, i3)` with no observed entry.
pub fn missing_fibers(mask: &ObservationMask) -> Vec<(usize, usize)> {
    let [n1, n2, n3] = mask.dims().0;
    let mut out = Vec::new();
    for i3 in 0..n3 {
        for i1 in 0..n1 {
            if (0..n2).all(|i2| !mask.get(i1, i2, i3)) {
                out.push((i1, i3));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    /// Fraction of observed entries to corrupt.
    pub gamma: f64,
    /// Maximum outlier magnitude.
    pub s: f64,
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn validate(&self) -> Result<()> {
        check_rate("gamma", self.gamma)?;
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(Error::Parameter(format!("s must be non-negative and finite, got {}", self.s)));
        }
        Ok(())
    }
}

/// Output of [`corrupt`].
#[derive(Clone, Debug, PartialEq)]
pub struct Corrupted {
    /// Observed entries, with the corrupted ones perturbed; zero off the mask.
    pub tensor: Tensor3,
    pub corrupted: ObservationMask,
    pub clean: ObservationMask,
}

/// Adds uniform outliers `U(-s, s)` to a random `gamma` fraction of the
/// observed entries and clamps them at zero.
pub fn corrupt(y: &Tensor3, mask: &ObservationMask, spec: &CorruptionSpec) -> Result<Corrupted> {
    spec.validate()?;
    check_dims(y.dims(), mask.dims(), "tensor vs mask")?;
    let dims = y.dims();
    let observed = mask.observed_offsets();
    let count = fraction_count(spec.gamma, observed.len());
    let mut r = rng(spec.seed);
    let mut picked: Vec<usize> = index::sample(&mut r, observed.len(), count)
        .into_iter()
        .map(|i| observed[i])
        .collect();
    picked.sort_unstable();

    let mut tensor = Tensor3::zeros(dims);
    for &o in &observed {
        tensor.as_mut_slice()[o] = y.as_slice()[o];
    }
    let mut corrupted = ObservationMask::empty(dims);
    for &o in &picked {
        let eps = if spec.s > 0.0 {
            r.random_range(-spec.s..=spec.s)
        } else {
            0.0
        };
        let v = &mut tensor.as_mut_slice()[o];
        *v = (*v + eps).max(0.0);
        corrupted.as_mut_slice()[o] = true;
    }
    let clean = ObservationMask::from_vec(
        dims,
        mask.as_slice()
            .iter()
            .zip(corrupted.as_slice())
            .map(|(&m, &c)| m && !c)
            .collect(),
    )?;
    Ok(Corrupted {
        tensor,
        corrupted,
        clean,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub dims: Dims,
    pub rank: usize,
    /// Standard deviation of the additive Gaussian noise, in data units.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let min = self.dims.0.iter().copied().min().unwrap_or(0);
        if self.rank == 0 || self.rank > min {
            return Err(Error::Parameter(format!(
                "rank must lie in 1..={min} for dims {}, got {}",
                self.dims, self.rank
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Parameter(format!(
                "noise sigma must be non-negative and finite, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// Sum of `rank` positive outer products `u ∘ v ∘ w`, plus Gaussian noise,
/// clamped at zero.
///
/// `u ~ U(2.5, 7.5)` per location, `v` a daily sinusoid
/// `1.2 + sin(2 pi h j / n2 + phase)` with harmonic `h = 1 + r / 2`, and
/// `w ~ U(0.8, 1.2)` per day.
pub fn synthesize(spec: &SyntheticSpec) -> Result<Tensor3> {
    spec.validate()?;
    let [n1, n2, n3] = spec.dims.0;
    let mut r = rng(spec.seed);
    let mut factors = Vec::with_capacity(spec.rank);
    for k in 0..spec.rank {
        let u: Vec<f64> = (0..n1).map(|_| r.random_range(2.5..7.5)).collect();
        let phase = r.random_range(0.0..2.0 * PI);
        let harmonic = (1 + k / 2) as f64;
        let v: Vec<f64> = (0..n2)
            .map(|j| 1.2 + (2.0 * PI * harmonic * j as f64 / n2 as f64 + phase).sin())
            .collect();
        let w: Vec<f64> = (0..n3).map(|_| r.random_range(0.8..1.2)).collect();
        factors.push((u, v, w));
    }
    let mut x = Tensor3::from_fn(spec.dims, |i, j, k| {
        factors.iter().map(|(u, v, w)| u[i] * v[j] * w[k]).sum()
    });
    if spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Parameter(e.to_string()))?;
        for v in x.as_mut_slice() {
            *v += normal.sample(&mut r);
        }
    }
    Ok(x.map(|v| v.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{unfold, Mode};

    fn d(n1: usize, n2: usize, n3: usize) -> Dims {
        Dims::new(n1, n2, n3).unwrap()
    }

    #[test]
    fn rm_mask_counts() {
        let dims = d(10, 10, 10);
        assert_eq!(rm_mask(dims, 0.0, 1).unwrap(), ObservationMask::full(dims));
        assert_eq!(rm_mask(dims, 1.0, 1).unwrap(), ObservationMask::empty(dims));
        let a = rm_mask(dims, 0.4, 7).unwrap();
        assert_eq!(a.missing_count(), 400);
        assert_eq!(a, rm_mask(dims, 0.4, 7).unwrap());
        assert_ne!(a, rm_mask(dims, 0.4, 8).unwrap());
        assert!(rm_mask(dims, 1.5, 7).is_err());
    }

    #[test]
    fn counts_round_half_even() {
        assert_eq!(fraction_count(0.5, 5), 2);
        assert_eq!(fraction_count(0.5, 7), 4);
        assert_eq!(fraction_count(0.25, 10), 2);
    }

    #[test]
    fn nm_mask_removes_whole_fibers() {
        let dims = d(5, 12, 4);
        let mask = nm_mask(dims, 0.5, 1).unwrap();
        let fibers = missing_fibers(&mask);
        assert_eq!(fibers.len(), 10);
        assert_eq!(mask.missing_count(), 10 * 12);
        for o in 0..dims.len() {
            if !mask.is_observed(o) {
                let [i1, _, i3] = dims.index(o);
                assert!(fibers.contains(&(i1, i3)));
            }
        }
        assert_eq!(missing_fibers(&nm_mask(dims, 0.6, 1).unwrap()).len(), 12);
        assert_eq!(nm_mask(dims, 0.0, 1).unwrap(), ObservationMask::full(dims));
        assert_eq!(nm_mask(dims, 1.0, 1).unwrap(), ObservationMask::empty(dims));
    }

    #[test]
    fn corrupt_gamma_zero_is_noop_on_observed() {
        let dims = d(4, 3, 2);
        let y = Tensor3::from_fn(dims, |i, j, k| (1 + i + j * k) as f64);
        let mask = rm_mask(dims, 0.3, 2).unwrap();
        let out = corrupt(&y, &mask, &CorruptionSpec { gamma: 0.0, s: 5.0, seed: 1 }).unwrap();
        assert_eq!(out.corrupted.observed_count(), 0);
        assert_eq!(out.clean, mask);
        for o in 0..dims.len() {
            let expect = if mask.is_observed(o) { y.as_slice()[o] } else { 0.0 };
            assert_eq!(out.tensor.as_slice()[o], expect);
        }
    }

    #[test]
    fn corrupt_zero_magnitude_keeps_values() {
        let dims = d(5, 4, 3);
        let y = Tensor3::filled(dims, 2.0);
        let mask = ObservationMask::full(dims);
        let out = corrupt(&y, &mask, &CorruptionSpec { gamma: 0.25, s: 0.0, seed: 9 }).unwrap();
        assert_eq!(out.corrupted.observed_count(), 15);
        assert_eq!(out.tensor, y);
    }

    #[test]
    fn corrupt_full_range_and_determinism() {
        let dims = d(4, 4, 4);
        let y = Tensor3::filled(dims, 1.0);
        let mask = ObservationMask::full(dims);
        let spec = CorruptionSpec { gamma: 1.0, s: 100.0, seed: 3 };
        let a = corrupt(&y, &mask, &spec).unwrap();
        assert!(a.tensor.as_slice().iter().all(|v| (0.0..=101.0).contains(v)));
        assert_eq!(a.corrupted, mask);
        assert_eq!(a.clean.observed_count(), 0);
        let b = corrupt(&y, &mask, &spec).unwrap();
        assert_eq!(
            a.tensor.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.tensor.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn corrupt_partitions_observed_set() {
        let dims = d(6, 5, 4);
        let y = Tensor3::filled(dims, 3.0);
        let mask = rm_mask(dims, 0.5, 4).unwrap();
        let out = corrupt(&y, &mask, &CorruptionSpec { gamma: 0.1, s: 100.0, seed: 3 }).unwrap();
        assert_eq!(out.corrupted.observed_count(), 6);
        assert!(out.corrupted.is_disjoint(&out.clean));
        assert_eq!(out.corrupted.union(&out.clean).unwrap(), mask);
        assert!(out.tensor.as_slice().iter().all(|v| *v >= 0.0));
    }

    fn minors_vanish(m: &nalgebra::DMatrix<f64>, tol: f64) -> bool {
        let (r, c) = m.shape();
        for i in 0..r {
            for j in i + 1..r {
                for a in 0..c {
                    for b in a + 1..c {
                        let det = m[(i, a)] * m[(j, b)] - m[(i, b)] * m[(j, a)];
                        if det.abs() > tol {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    #[test]
    fn rank_one_has_vanishing_minors() {
        let x = synthesize(&SyntheticSpec { dims: d(5, 6, 4), rank: 1, noise_sigma: 0.0, seed: 11 }).unwrap();
        for mode in Mode::ALL {
            assert!(minors_vanish(&unfold(&x, mode).matrix, 1e-8));
        }
    }

    #[test]
    fn rank_three_numeric_rank() {
        let x = synthesize(&SyntheticSpec { dims: d(12, 24, 7), rank: 3, noise_sigma: 0.0, seed: 42 }).unwrap();
        let s = unfold(&x, Mode::One).matrix.singular_values();
        let mut s: Vec<f64> = s.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        assert!(s[1] / s[0] > 0.0);
        assert!(s[2] > 1e-8 * s[0]);
        assert!(s[3] < 1e-8 * s[0]);
    }

    #[test]
    fn synthesize_is_deterministic_and_validated() {
        let spec = SyntheticSpec { dims: d(6, 8, 3), rank: 2, noise_sigma: 0.1, seed: 5 };
        let a = synthesize(&spec).unwrap();
        assert_eq!(a, synthesize(&spec).unwrap());
        assert!(a.as_slice().iter().all(|v| *v >= 0.0));
        let bad = SyntheticSpec { rank: 99, dims: d(4, 4, 4), ..spec };
        assert!(matches!(synthesize(&bad), Err(Error::Parameter(_))));
    }
}
