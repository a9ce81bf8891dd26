//! Recovery and anomaly-detection scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{check_dims, ObservationMask, Tensor3};

/// Entries with `|truth|` below this are left out of the MAPE.
pub const ZERO_TRUTH_CUTOFF: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Mean absolute percentage error; `None` when every evaluated truth
    /// value is zero.
    pub mape: Option<f64>,
    pub rmse: f64,
    pub n_evaluated: usize,
    pub n_excluded_zero: usize,
}

/// MAPE (percent) and RMSE of `recovered` against `truth` over `eval_set`.
pub fn evaluate(truth: &Tensor3, recovered: &Tensor3, eval_set: &ObservationMask) -> Result<EvalReport> {
    check_dims(truth.dims(), recovered.dims(), "truth vs recovered")?;
    check_dims(truth.dims(), eval_set.dims(), "truth vs evaluation mask")?;
    let offsets = eval_set.observed_offsets();
    if offsets.is_empty() {
        return Err(Error::Input("evaluation set is empty".into()));
    }
    let (t, r) = (truth.as_slice(), recovered.as_slice());
    let mut sq = 0.0;
    let mut ape = 0.0;
    let mut n_evaluated = 0;
    for &o in &offsets {
        let err = t[o] - r[o];
        sq += err * err;
        if t[o].abs() >= ZERO_TRUTH_CUTOFF {
            ape += err.abs() / t[o].abs();
            n_evaluated += 1;
        }
    }
    Ok(EvalReport {
        mape: (n_evaluated > 0).then(|| 100.0 * ape / n_evaluated as f64),
        rmse: (sq / offsets.len() as f64).sqrt(),
        n_evaluated,
        n_excluded_zero: offsets.len() - n_evaluated,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnomalyScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Scores the entries with `|e_hat| > threshold` against the true anomaly
/// set. An empty prediction has precision 1 and an empty truth set recall 1.
pub fn anomaly_score(e_hat: &Tensor3, omega_c: &ObservationMask, threshold: f64) -> Result<AnomalyScore> {
    check_dims(e_hat.dims(), omega_c.dims(), "anomaly vs corruption mask")?;
    if !(threshold >= 0.0) {
        return Err(Error::Parameter(format!("threshold must be non-negative, got {threshold}")));
    }
    let (mut tp, mut predicted, mut actual) = (0usize, 0usize, 0usize);
    for (&e, &c) in e_hat.as_slice().iter().zip(omega_c.as_slice()) {
        let p = e.abs() > threshold;
        predicted += p as usize;
        actual += c as usize;
        tp += (p && c) as usize;
    }
    let precision = if predicted == 0 { 1.0 } else { tp as f64 / predicted as f64 };
    let recall = if actual == 0 { 1.0 } else { tp as f64 / actual as f64 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(AnomalyScore { precision, recall, f1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{project, Dims};
    use approx::assert_abs_diff_eq;

    fn pair(a: f64, b: f64) -> Tensor3 {
        Tensor3::from_vec(Dims::new(2, 1, 1).unwrap(), vec![a, b]).unwrap()
    }

    #[test]
    fn two_entry_fixture() {
        let full = ObservationMask::full(Dims::new(2, 1, 1).unwrap());
        let r = evaluate(&pair(100.0, 50.0), &pair(90.0, 55.0), &full).unwrap();
        assert_abs_diff_eq!(r.mape.unwrap(), 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.rmse, 62.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.rmse, 7.9057, epsilon = 1e-4);
        assert_eq!((r.n_evaluated, r.n_excluded_zero), (2, 0));
    }

    #[test]
    fn exact_recovery_scores_zero() {
        let x = pair(3.0, 4.0);
        let r = evaluate(&x, &x, &ObservationMask::full(x.dims())).unwrap();
        assert_eq!(r.mape, Some(0.0));
        assert_eq!(r.rmse, 0.0);
    }

    #[test]
    fn zero_truth_excluded_from_mape() {
        let full = ObservationMask::full(Dims::new(2, 1, 1).unwrap());
        let r = evaluate(&pair(0.0, 10.0), &pair(1.0, 10.0), &full).unwrap();
        assert_eq!(r.mape, Some(0.0));
        assert_eq!((r.n_evaluated, r.n_excluded_zero), (1, 1));
        assert_abs_diff_eq!(r.rmse, 0.5f64.sqrt(), epsilon = 1e-15);

        let r = evaluate(&pair(0.0, 0.0), &pair(1.0, 1.0), &full).unwrap();
        assert_eq!(r.mape, None);
        assert_eq!(r.rmse, 1.0);
    }

    #[test]
    fn empty_eval_set_is_an_error() {
        let x = pair(1.0, 2.0);
        let empty = ObservationMask::empty(x.dims());
        assert!(matches!(evaluate(&x, &x, &empty), Err(Error::Input(_))));
    }

    #[test]
    fn rmse_matches_projected_norm() {
        let dims = Dims::new(3, 4, 2).unwrap();
        let t = Tensor3::from_fn(dims, |i, j, k| (1 + i + 2 * j + 5 * k) as f64);
        let r = Tensor3::from_fn(dims, |i, j, k| (i * j + k) as f64 * 0.7);
        let mask = ObservationMask::from_fn(dims, |i, j, _| (i + j) % 3 != 0);
        let rep = evaluate(&t, &r, &mask).unwrap();
        let expected = project(&t.sub(&r), &mask).unwrap().frobenius() / (mask.observed_count() as f64).sqrt();
        assert_abs_diff_eq!(rep.rmse, expected, epsilon = 1e-12);
    }

    #[test]
    fn anomaly_score_examples() {
        let dims = Dims::new(3, 3, 2).unwrap();
        let omega = ObservationMask::from_fn(dims, |i, j, k| (i + j + k) % 4 == 0);
        let e = Tensor3::from_fn(dims, |i, j, k| if omega.get(i, j, k) { 10.0 } else { 0.0 });
        let s = anomaly_score(&e, &omega, 5.0).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));

        let s = anomaly_score(&Tensor3::zeros(dims), &omega, 0.5).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 0.0, 0.0));

        let s = anomaly_score(&e, &ObservationMask::empty(dims), 5.0).unwrap();
        assert_eq!((s.precision, s.recall), (0.0, 1.0));
    }
}
