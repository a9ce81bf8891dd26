use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Dims, Mode};

/// Completion method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Log-surrogate completion.
    #[serde(rename = "tcpfnc")]
    TcPfnc,
    /// Log-surrogate completion with a sparse anomaly term.
    #[serde(rename = "rtcpfnc")]
    RtcPfnc,
    /// Sum-of-nuclear-norms baseline.
    #[serde(rename = "halrtc")]
    HaLrtc,
    /// Truncated-nuclear-norm baseline.
    #[serde(rename = "tnn")]
    LrtcTnn,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::TcPfnc, Method::RtcPfnc, Method::HaLrtc, Method::LrtcTnn];

    pub fn name(self) -> &'static str {
        match self {
            Method::TcPfnc => "tcpfnc",
            Method::RtcPfnc => "rtcpfnc",
            Method::HaLrtc => "halrtc",
            Method::LrtcTnn => "tnn",
        }
    }

    pub fn is_robust(self) -> bool {
        self == Method::RtcPfnc
    }

    pub fn uses_log_surrogate(self) -> bool {
        matches!(self, Method::TcPfnc | Method::RtcPfnc)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown method {s:?}")))
    }
}

/// Where the log-weighted rule takes its reweighting singular values from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightSource {
    /// Singular values of the matrix being shrunk.
    #[default]
    ShrinkageInput,
    /// Singular values of the same mode's estimate from the previous iteration
    /// (the shrinkage input on the first iteration).
    PreviousIterate,
}

/// Parameters shared by all four solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    /// Mode weights, summing to one.
    pub alpha: [f64; 3],
    /// ADMM penalty, shared by the three modes.
    pub rho: f64,
    /// Anomaly weight of the robust solver. `None` resolves to `3 * rho`.
    pub lambda: Option<f64>,
    pub epsilon: f64,
    /// Relative objective change that ends the iteration.
    pub tol: f64,
    pub max_iters: usize,
    /// Fraction of each mode size kept unshrunk by the truncated baseline.
    pub truncation_rate: f64,
    #[serde(default)]
    pub weight_source: WeightSource,
    /// Run the three per-mode updates on the rayon pool.
    #[serde(default)]
    pub parallel: bool,
}

pub const DEFAULT_RHO: f64 = 1e-4;
pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 200;
pub const DEFAULT_TRUNCATION_RATE: f64 = 0.3;
/// Default anomaly threshold `lambda / rho`.
pub const DEFAULT_ANOMALY_THRESHOLD: f64 = 3.0;

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        SolverConfig {
            method,
            alpha: [1.0 / 3.0; 3],
            rho: DEFAULT_RHO,
            lambda: None,
            epsilon: DEFAULT_EPSILON,
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            truncation_rate: DEFAULT_TRUNCATION_RATE,
            weight_source: WeightSource::default(),
            parallel: false,
        }
    }

    pub fn with_method(&self, method: Method) -> Self {
        SolverConfig {
            method,
            ..self.clone()
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_truncation_rate(mut self, rate: f64) -> Self {
        self.truncation_rate = rate;
        self
    }

    pub fn lambda_value(&self) -> f64 {
        self.lambda.unwrap_or(DEFAULT_ANOMALY_THRESHOLD * self.rho)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::Parameter(format!("alpha must be non-negative: {:?}", self.alpha)));
        }
        let sum: f64 = self.alpha.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("alpha must sum to 1, sums to {sum}")));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("rho", self.rho)?;
        positive("epsilon", self.epsilon)?;
        positive("tol", self.tol)?;
        positive("lambda", self.lambda_value())?;
        if self.max_iters == 0 {
            return Err(Error::Parameter("max_iters must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.truncation_rate) {
            return Err(Error::Parameter(format!(
                "truncation rate must lie in [0, 1), got {}",
                self.truncation_rate
            )));
        }
        Ok(())
    }

    /// Per-mode truncation `r_k = round(rate * n_k)`, ties to even.
    pub fn truncation_ranks(&self, dims: Dims) -> Result<[usize; 3]> {
        let mut r = [0usize; 3];
        for mode in Mode::ALL {
            let rk = (self.truncation_rate * dims.get(mode) as f64).round_ties_even() as usize;
            let bound = dims.unfolded_rank_bound(mode);
            if rk >= bound {
                return Err(Error::Parameter(format!(
                    "truncation r = {rk} for mode {} reaches the unfolding rank bound {bound}",
                    mode.index() + 1
                )));
            }
            r[mode.index()] = rk;
        }
        Ok(r)
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::new(Method::TcPfnc)
    }
}
