//! ADMM completion solvers.
//!
//! All four methods share one loop over the variables `L_1..L_3` (per-mode
//! low-rank estimates), `M` (consensus tensor pinned to the observations),
//! `T_1..T_3` (multipliers) and, for the robust method, `E_1..E_3`
//! (per-mode sparse anomalies). One iteration:
//!
//! 1. `L_k <- fold_k(shrink(unfold_k(M - E_k - T_k / rho)))` for each mode;
//! 2. `L = sum_k alpha_k L_k`;
//! 3. `M <- mean_k(L_k + E_k + T_k / rho)`, then observed entries reset to `Y`;
//! 4. robust only: `E_k <- soft(M - L_k - T_k / rho, lambda / rho)`;
//! 5. `T_k <- T_k + rho (L_k + E_k - M)`.
//!
//! The methods differ only in the shrinkage rule of step 1 and in the
//! objective used for the stopping test.

mod config;
pub mod steps;

use rayon::prelude::*;

pub use config::{
    Method, SolverConfig, WeightSource, DEFAULT_ANOMALY_THRESHOLD, DEFAULT_EPSILON, DEFAULT_MAX_ITERS,
    DEFAULT_RHO, DEFAULT_TOL, DEFAULT_TRUNCATION_RATE,
};

use crate::error::{Error, Result};
use crate::prox::{log_surrogate_of, ShrinkageSpec};
use crate::tensor::{check_dims, project, Mode, ObservationMask, Tensor3};

/// Iterates of one solver run.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub m: Tensor3,
    pub lk: [Tensor3; 3],
    /// Per-mode anomalies; present for the robust method only.
    pub ek: Option<[Tensor3; 3]>,
    pub tk: [Tensor3; 3],
    /// Singular values of the mode-k unfolding of `L_k`, descending.
    pub sigma: [Vec<f64>; 3],
    /// Completed iterations.
    pub iter: usize,
    pub objective_history: Vec<f64>,
}

impl SolverState {
    /// `L = P_Omega(Y)`-style start: `M = P_Omega(Y)`, everything else zero.
    pub fn initial(y: &Tensor3, mask: &ObservationMask, robust: bool) -> Result<Self> {
        let dims = y.dims();
        let zeros = || [Tensor3::zeros(dims), Tensor3::zeros(dims), Tensor3::zeros(dims)];
        Ok(SolverState {
            m: project(y, mask)?,
            lk: zeros(),
            ek: robust.then(zeros),
            tk: zeros(),
            sigma: Mode::ALL.map(|k| vec![0.0; dims.unfolded_rank_bound(k)]),
            iter: 0,
            objective_history: Vec::new(),
        })
    }

    /// `sum_k alpha_k L_k`.
    pub fn recovered(&self, alpha: &[f64; 3]) -> Tensor3 {
        steps::aggregate(&self.lk, alpha)
    }

    /// `mean_k E_k`, robust runs only.
    pub fn anomaly(&self) -> Option<Tensor3> {
        self.ek
            .as_ref()
            .map(|e| steps::aggregate(e, &[1.0 / 3.0; 3]))
    }
}

/// Output of a solver run.
#[derive(Clone, Debug)]
pub struct SolverResult {
    pub recovered: Tensor3,
    pub anomaly: Option<Tensor3>,
    pub iterations: usize,
    pub converged: bool,
    pub objective_history: Vec<f64>,
}

/// Objective tracked for the stopping test.
///
/// Log-surrogate methods: `sum_k alpha_k sum_i log(s_ki + eps)`, plus
/// `lambda * sum_k ||E_k||_1` for the robust one. The baselines use their
/// own regularisers: weighted nuclear norms, or weighted sums of the singular
/// values past the truncation rank.
pub fn objective(state: &SolverState, cfg: &SolverConfig) -> f64 {
    let dims = state.m.dims();
    let ranks = match cfg.method {
        Method::LrtcTnn => cfg.truncation_ranks(dims).unwrap_or([0; 3]),
        _ => [0; 3],
    };
    let mut total = 0.0;
    for k in 0..3 {
        let s = &state.sigma[k];
        let term = match cfg.method {
            Method::TcPfnc | Method::RtcPfnc => log_surrogate_of(s, cfg.epsilon),
            Method::HaLrtc => s.iter().sum(),
            Method::LrtcTnn => s.iter().skip(ranks[k]).sum(),
        };
        total += cfg.alpha[k] * term;
    }
    if let Some(e) = &state.ek {
        total += cfg.lambda_value() * e.iter().map(Tensor3::l1_norm).sum::<f64>();
    }
    total
}

/// `|o_last - o_prev| / |o_prev| < tol`; absolute change when `|o_prev|` is
/// below `1e-300`. A single entry never counts as converged.
pub fn check_convergence(history: &[f64], tol: f64) -> bool {
    let [.., prev, last] = history else {
        return false;
    };
    let change = (last - prev).abs();
    if prev.abs() < 1e-300 {
        change < tol
    } else {
        change / prev.abs() < tol
    }
}

fn shrinkage_for(cfg: &SolverConfig, mode: Mode, ranks: &[usize; 3]) -> ShrinkageSpec {
    let tau = cfg.alpha[mode.index()] / cfg.rho;
    match cfg.method {
        Method::TcPfnc | Method::RtcPfnc => ShrinkageSpec::log_weighted(tau, cfg.epsilon),
        Method::HaLrtc => ShrinkageSpec::plain(tau),
        Method::LrtcTnn => ShrinkageSpec::truncated(tau, ranks[mode.index()]),
    }
}

fn validate_inputs(y: &Tensor3, mask: &ObservationMask, cfg: &SolverConfig) -> Result<[usize; 3]> {
    cfg.validate()?;
    check_dims(y.dims(), mask.dims(), "observations vs mask")?;
    if mask.observed_count() == 0 {
        return Err(Error::Input("mask has no observed entries".into()));
    }
    if !y.is_finite() {
        return Err(Error::Input("observed tensor contains non-finite values".into()));
    }
    match cfg.method {
        Method::LrtcTnn => cfg.truncation_ranks(y.dims()),
        _ => Ok([0; 3]),
    }
}

/// One full ADMM sweep, in place.
pub fn iterate(
    state: &mut SolverState,
    y: &Tensor3,
    mask: &ObservationMask,
    cfg: &SolverConfig,
) -> Result<()> {
    let ranks = match cfg.method {
        Method::LrtcTnn => cfg.truncation_ranks(y.dims())?,
        _ => [0; 3],
    };
    let iteration = state.iter + 1;
    let diverged = |reason: String| Error::Divergence { iteration, reason };

    let first = state.iter == 0;
    let update = |mode: Mode| {
        let k = mode.index();
        let sigma_prev = match cfg.weight_source {
            WeightSource::PreviousIterate if !first => Some(state.sigma[k].as_slice()),
            _ => None,
        };
        steps::update_low_rank(
            &state.m,
            state.ek.as_ref().map(|e| &e[k]),
            &state.tk[k],
            cfg.rho,
            mode,
            &shrinkage_for(cfg, mode, &ranks),
            sigma_prev,
        )
    };
    let updates: Vec<Result<(Tensor3, Vec<f64>)>> = if cfg.parallel {
        Mode::ALL.par_iter().map(|&m| update(m)).collect()
    } else {
        Mode::ALL.iter().map(|&m| update(m)).collect()
    };
    for (k, res) in updates.into_iter().enumerate() {
        let (lk, sigma) = res.map_err(|e| diverged(e.to_string()))?;
        state.lk[k] = lk;
        state.sigma[k] = sigma;
    }

    state.m = steps::update_consensus(&state.lk, state.ek.as_ref(), &state.tk, cfg.rho, y, mask)?;

    if let Some(ek) = state.ek.as_mut() {
        let lambda = cfg.lambda_value();
        for k in 0..3 {
            ek[k] = steps::update_anomaly(&state.m, &state.lk[k], &state.tk[k], cfg.rho, lambda);
        }
    }

    for k in 0..3 {
        state.tk[k] = steps::update_multiplier(
            &state.tk[k],
            &state.lk[k],
            state.ek.as_ref().map(|e| &e[k]),
            &state.m,
            cfg.rho,
        );
    }

    state.iter = iteration;
    let obj = objective(state, cfg);
    if !obj.is_finite() || !state.m.is_finite() {
        return Err(diverged(format!("objective became {obj}")));
    }
    state.objective_history.push(obj);
    Ok(())
}

/// Runs the solver selected by `cfg.method`, calling `observe` after every
/// iteration.
pub fn solve_with_observer(
    y: &Tensor3,
    mask: &ObservationMask,
    cfg: &SolverConfig,
    mut observe: impl FnMut(&SolverState),
) -> Result<SolverResult> {
    validate_inputs(y, mask, cfg)?;
    let mut state = SolverState::initial(y, mask, cfg.method.is_robust())?;
    let mut converged = false;
    while state.iter < cfg.max_iters {
        iterate(&mut state, y, mask, cfg)?;
        observe(&state);
        if check_convergence(&state.objective_history, cfg.tol) {
            converged = true;
            break;
        }
    }
    Ok(SolverResult {
        recovered: state.recovered(&cfg.alpha),
        anomaly: state.anomaly(),
        iterations: state.iter,
        converged,
        objective_history: state.objective_history,
    })
}

pub fn solve(y: &Tensor3, mask: &ObservationMask, cfg: &SolverConfig) -> Result<SolverResult> {
    solve_with_observer(y, mask, cfg, |_| {})
}

/// Log-surrogate completion.
pub fn tc_pfnc(y: &Tensor3, mask: &ObservationMask, cfg: &SolverConfig) -> Result<SolverResult> {
    solve(y, mask, &cfg.with_method(Method::TcPfnc))
}

/// Log-surrogate completion with a sparse anomaly term.
pub fn rtc_pfnc(y: &Tensor3, mask: &ObservationMask, cfg: &SolverConfig) -> Result<SolverResult> {
    solve(y, mask, &cfg.with_method(Method::RtcPfnc))
}

/// Sum-of-nuclear-norms baseline.
pub fn halrtc(y: &Tensor3, mask: &ObservationMask, cfg: &SolverConfig) -> Result<SolverResult> {
    solve(y, mask, &cfg.with_method(Method::HaLrtc))
}

/// Truncated-nuclear-norm baseline.
pub fn lrtc_tnn(y: &Tensor3, mask: &ObservationMask, cfg: &SolverConfig) -> Result<SolverResult> {
    solve(y, mask, &cfg.with_method(Method::LrtcTnn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Dims;
    use approx::assert_abs_diff_eq;

    #[test]
    fn convergence_examples() {
        assert!(check_convergence(&[-100.0, -100.000001], 1e-6));
        assert!(!check_convergence(&[-100.0, -90.0], 1e-6));
        assert!(!check_convergence(&[-100.0], 1e-6));
        assert!(!check_convergence(&[], 1e-6));
        assert!(check_convergence(&[0.0, 1e-9], 1e-6));
        assert!(!check_convergence(&[0.0, 1e-3], 1e-6));
    }

    #[test]
    fn objective_of_zero_state() {
        let dims = Dims::new(10, 8, 6).unwrap();
        let y = Tensor3::zeros(dims);
        let state = SolverState::initial(&y, &ObservationMask::full(dims), false).unwrap();
        let cfg = SolverConfig::new(Method::TcPfnc);
        let expected = (10.0 + 8.0 + 6.0) / 3.0 * 1e-6f64.ln();
        assert_abs_diff_eq!(objective(&state, &cfg), expected, epsilon = 1e-9);
        assert_abs_diff_eq!(expected, -110.52, epsilon = 1e-2);
    }

    #[test]
    fn robust_objective_with_zero_anomaly_matches_plain() {
        let dims = Dims::new(4, 3, 2).unwrap();
        let y = Tensor3::from_fn(dims, |i, j, k| (i + 2 * j + 3 * k) as f64);
        let mask = ObservationMask::full(dims);
        let mut plain = SolverState::initial(&y, &mask, false).unwrap();
        plain.sigma = [vec![5.0, 1.0, 0.5], vec![4.0, 0.2, 0.0], vec![6.0, 0.1]];
        let mut robust = plain.clone();
        robust.ek = Some([Tensor3::zeros(dims), Tensor3::zeros(dims), Tensor3::zeros(dims)]);
        let cfg = SolverConfig::new(Method::TcPfnc);
        assert_eq!(
            objective(&plain, &cfg),
            objective(&robust, &cfg.with_method(Method::RtcPfnc))
        );
    }

    #[test]
    fn rejects_empty_mask_and_mismatch() {
        let dims = Dims::new(3, 3, 3).unwrap();
        let y = Tensor3::filled(dims, 1.0);
        let cfg = SolverConfig::default();
        assert!(matches!(
            solve(&y, &ObservationMask::empty(dims), &cfg),
            Err(Error::Input(_))
        ));
        let other = ObservationMask::full(Dims::new(3, 3, 2).unwrap());
        assert!(matches!(solve(&y, &other, &cfg), Err(Error::Shape(_))));
    }

    #[test]
    fn divergence_reports_iteration() {
        let dims = Dims::new(3, 3, 3).unwrap();
        let y = Tensor3::filled(dims, f64::MAX / 4.0);
        let cfg = SolverConfig::new(Method::HaLrtc);
        match solve(&y, &ObservationMask::full(dims), &cfg) {
            Err(Error::Divergence { iteration, .. }) => assert!(iteration >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
