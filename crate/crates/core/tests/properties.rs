use nalgebra::DMatrix;
use proptest::prelude::*;

use tensorfill::datagen::{corrupt, missing_fibers, nm_mask, rm_mask, CorruptionSpec};
use tensorfill::metrics::evaluate;
use tensorfill::prox::{plain_svt, shrink, soft, svd, truncated_svt, ShrinkageSpec};
use tensorfill::tensor::{apply_constraint, fold, project, unfold};
use tensorfill::{Dims, Mode, ObservationMask, Tensor3};

fn dims() -> impl Strategy<Value = Dims> {
    (1usize..=8, 1usize..=8, 1usize..=8).prop_map(|(a, b, c)| Dims::new(a, b, c).unwrap())
}

fn tensor() -> impl Strategy<Value = Tensor3> {
    dims().prop_flat_map(|d| {
        prop::collection::vec(-100.0f64..100.0, d.len()).prop_map(move |v| Tensor3::from_vec(d, v).unwrap())
    })
}

fn tensor_and_mask() -> impl Strategy<Value = (Tensor3, Tensor3, ObservationMask)> {
    dims().prop_flat_map(|d| {
        (
            prop::collection::vec(-100.0f64..100.0, d.len()),
            prop::collection::vec(-100.0f64..100.0, d.len()),
            prop::collection::vec(any::<bool>(), d.len()),
        )
            .prop_map(move |(a, b, m)| {
                (
                    Tensor3::from_vec(d, a).unwrap(),
                    Tensor3::from_vec(d, b).unwrap(),
                    ObservationMask::from_vec(d, m).unwrap(),
                )
            })
    })
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-5.0f64..5.0, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

proptest! {
    #[test]
    fn fold_inverts_unfold(x in tensor()) {
        for mode in Mode::ALL {
            let u = unfold(&x, mode);
            prop_assert_eq!(u.matrix.shape(), x.dims().unfolded_shape(mode));
            prop_assert_eq!(&fold(&u.matrix, mode, x.dims()).unwrap(), &x);
        }
    }

    #[test]
    fn unfolding_preserves_norm(x in tensor()) {
        let n = x.frobenius();
        for mode in Mode::ALL {
            let m = unfold(&x, mode).matrix.norm();
            prop_assert!((m - n).abs() <= 1e-12 * n.max(1e-300));
        }
    }

    #[test]
    fn projection_is_idempotent_and_linear((x, y, mask) in tensor_and_mask(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let px = project(&x, &mask).unwrap();
        prop_assert_eq!(&project(&px, &mask).unwrap(), &px);
        let mut comb = x.scale(a);
        comb.axpy(b, &y);
        let lhs = project(&comb, &mask).unwrap();
        let mut rhs = px.scale(a);
        rhs.axpy(b, &project(&y, &mask).unwrap());
        for (l, r) in lhs.as_slice().iter().zip(rhs.as_slice()) {
            prop_assert!((l - r).abs() <= 1e-12 * (1.0 + l.abs()));
        }
    }

    #[test]
    fn constraint_pins_observed_entries((x, y, mask) in tensor_and_mask()) {
        let c = apply_constraint(&x, &y, &mask).unwrap();
        for p in 0..x.len() {
            let expect = if mask.is_observed(p) { y.as_slice()[p] } else { x.as_slice()[p] };
            prop_assert_eq!(c.as_slice()[p], expect);
        }
    }

    #[test]
    fn weighted_svt_beats_perturbations(z in matrix(6, 8), tau in 0.05f64..3.0, seeds in prop::collection::vec(matrix(6, 8), 8)) {
        let spec = ShrinkageSpec::log_weighted(tau, 1e-6);
        let w: Vec<f64> = svd(&z).unwrap().sigma.iter().map(|s| 1.0 / (s + 1e-6)).collect();
        let objective = |x: &DMatrix<f64>| {
            let s = svd(x).unwrap().sigma;
            tau * s.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + 0.5 * (x - &z).norm_squared()
        };
        let best = shrink(&z, &spec, None).unwrap().matrix;
        let f0 = objective(&best);
        for (i, p) in seeds.iter().enumerate() {
            let step = 10f64.powi(-(i as i32 % 4) - 1);
            prop_assert!(objective(&(&best + p * step)) >= f0 - 1e-9 * f0.abs().max(1.0));
        }
    }

    #[test]
    fn svt_shrinks_monotonically(z in matrix(5, 7), t1 in 0.0f64..4.0, dt in 0.0f64..4.0, r in 0usize..5) {
        let s = svd(&z).unwrap().sigma;
        let t2 = t1 + dt;
        for (a, b) in [(plain_svt(&z, t1).unwrap(), plain_svt(&z, t2).unwrap()),
                       (truncated_svt(&z, t1, r).unwrap(), truncated_svt(&z, t2, r).unwrap())] {
            let sa = svd(&a).unwrap().sigma;
            let sb = svd(&b).unwrap().sigma;
            for i in 0..s.len() {
                prop_assert!(sa[i] <= s[i] + 1e-9);
                prop_assert!(sb[i] <= sa[i] + 1e-9);
            }
        }
    }

    #[test]
    fn soft_threshold_is_non_expansive(a in -50.0f64..50.0, b in -50.0f64..50.0, k in 0.0f64..20.0) {
        prop_assert!((soft(a, k) - soft(b, k)).abs() <= (a - b).abs() + 1e-14 * (a.abs() + b.abs()));
        prop_assert!(soft(a, k).abs() <= a.abs());
    }

    #[test]
    fn metrics_scale_and_ignore_order(
        pairs in prop::collection::vec((0.5f64..100.0, 0.0f64..100.0), 1..40),
        c in 0.01f64..100.0,
        rot in 0usize..40,
    ) {
        let n = pairs.len();
        let d = Dims::new(n, 1, 1).unwrap();
        let t = Tensor3::from_vec(d, pairs.iter().map(|p| p.0).collect()).unwrap();
        let r = Tensor3::from_vec(d, pairs.iter().map(|p| p.1).collect()).unwrap();
        let full = ObservationMask::full(d);
        let base = evaluate(&t, &r, &full).unwrap();
        let scaled = evaluate(&t.scale(c), &r.scale(c), &full).unwrap();
        let (m0, m1) = (base.mape.unwrap(), scaled.mape.unwrap());
        prop_assert!((m0 - m1).abs() <= 1e-9 * m0.max(1.0));
        prop_assert!((scaled.rmse - c * base.rmse).abs() <= 1e-9 * (c * base.rmse).max(1e-12));

        let mut rotated = pairs.clone();
        rotated.rotate_left(rot % n);
        let t2 = Tensor3::from_vec(d, rotated.iter().map(|p| p.0).collect()).unwrap();
        let r2 = Tensor3::from_vec(d, rotated.iter().map(|p| p.1).collect()).unwrap();
        let perm = evaluate(&t2, &r2, &full).unwrap();
        prop_assert!((perm.mape.unwrap() - m0).abs() <= 1e-9 * m0.max(1.0));
        prop_assert!((perm.rmse - base.rmse).abs() <= 1e-9 * base.rmse.max(1e-12));
    }

    #[test]
    fn rmse_is_projected_norm_over_root_n((x, y, mask) in tensor_and_mask()) {
        prop_assume!(mask.observed_count() > 0);
        let rep = evaluate(&x, &y, &mask).unwrap();
        let expect = project(&x.sub(&y), &mask).unwrap().frobenius() / (mask.observed_count() as f64).sqrt();
        prop_assert!((rep.rmse - expect).abs() <= 1e-12 * expect.max(1.0));
        prop_assert_eq!(rep.n_evaluated + rep.n_excluded_zero, mask.observed_count());
    }

    #[test]
    fn rm_mask_hits_exact_count(d in dims(), rate in 0.0f64..=1.0, seed in any::<u64>()) {
        let m = rm_mask(d, rate, seed).unwrap();
        prop_assert_eq!(m.missing_count(), (rate * d.len() as f64).round_ties_even() as usize);
        prop_assert_eq!(&m, &rm_mask(d, rate, seed).unwrap());
    }

    #[test]
    fn nm_mask_is_a_union_of_fibers(d in dims(), rate in 0.0f64..=1.0, seed in any::<u64>()) {
        let m = nm_mask(d, rate, seed).unwrap();
        let fibers = missing_fibers(&m);
        prop_assert_eq!(m.missing_count(), fibers.len() * d.0[1]);
        let target = rate * (d.0[0] * d.0[2]) as f64;
        prop_assert!((fibers.len() as f64 - target).abs() <= 1.0);
    }

    #[test]
    fn corruption_partitions_and_stays_non_negative(
        (x, _, mask) in tensor_and_mask(),
        gamma in 0.0f64..=1.0,
        s in 0.0f64..200.0,
        seed in any::<u64>(),
    ) {
        let x = x.map(f64::abs);
        let out = corrupt(&x, &mask, &CorruptionSpec { gamma, s, seed }).unwrap();
        prop_assert!(out.corrupted.is_disjoint(&out.clean));
        prop_assert_eq!(&out.corrupted.union(&out.clean).unwrap(), &mask);
        prop_assert!(out.tensor.as_slice().iter().all(|v| *v >= 0.0));
        for p in 0..x.len() {
            if out.clean.is_observed(p) {
                prop_assert_eq!(out.tensor.as_slice()[p], x.as_slice()[p]);
            } else if !mask.is_observed(p) {
                prop_assert_eq!(out.tensor.as_slice()[p], 0.0);
            }
        }
    }
}
