use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tensorfill::{Dims, Method, SolverConfig};

use crate::manifest::{Labels, Pattern};

#[derive(Debug, Parser)]
#[command(name = "tensorfill", version, about = "Low-rank completion of spatiotemporal tensors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded low-rank tensor.
    Synth(SynthArgs),
    /// Generate an observation mask.
    Mask(MaskArgs),
    /// Add sparse outliers to observed entries.
    Corrupt(CorruptArgs),
    /// Complete a partially observed tensor.
    Complete(CompleteArgs),
    /// Score a recovered tensor against the truth.
    Eval(EvalArgs),
    /// Convert a location-by-time CSV matrix into a tensor.
    Ingest(IngestArgs),
    /// Generate, corrupt, complete and score in one go.
    Run(RunArgs),
    /// Repeat the run recorded in a manifest and compare the results.
    Replay(ReplayArgs),
}

pub fn parse_dims(s: &str) -> Result<Dims, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [a, b, c] => Dims::new(a, b, c).map_err(|e| e.to_string()),
        _ => Err(format!("expected three comma-separated sizes, got {s:?}")),
    }
}

pub fn parse_alpha(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|_| format!("expected three comma-separated weights, got {s:?}"))
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: tensorfill::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_parser = parse_dims)]
    pub dims: Dims,
    #[arg(long)]
    pub rank: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    #[arg(long, value_parser = parse_dims)]
    pub dims: Dims,
    #[arg(long, value_enum)]
    pub pattern: Pattern,
    /// Fraction of entries to remove.
    #[arg(long)]
    pub rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    #[arg(long)]
    pub tensor: PathBuf,
    #[arg(long)]
    pub mask: PathBuf,
    /// Fraction of observed entries to corrupt.
    #[arg(long)]
    pub gamma: f64,
    /// Outlier magnitude bound; defaults to the largest observed value.
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Where to write the mask of corrupted entries.
    #[arg(long)]
    pub omega_c: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, value_parser = parse_method, help = "tcpfnc, rtcpfnc, halrtc or tnn")]
    pub method: Method,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub trunc_rate: Option<f64>,
    #[arg(long, value_parser = parse_alpha)]
    pub alpha: Option<[f64; 3]>,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::new(self.method);
        if let Some(v) = self.rho {
            cfg.rho = v;
        }
        cfg.lambda = self.lambda;
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = self.trunc_rate {
            cfg.truncation_rate = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ThreadArgs {
    /// Worker threads for the per-mode updates; 1 runs serially.
    #[arg(long, env = "TENSORFILL_THREADS", default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args)]
pub struct LabelArgs {
    #[arg(long, value_enum)]
    pub pattern: Option<Pattern>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl LabelArgs {
    pub fn labels(&self) -> Labels {
        Labels {
            pattern: self.pattern,
            rate: self.rate,
            gamma: self.gamma,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct CompleteArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub tensor: PathBuf,
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Anomaly tensor of the robust method; defaults next to the output.
    #[arg(long)]
    pub anomaly_out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Ground truth; scores the missing entries into the manifest.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub labels: LabelArgs,
    #[command(flatten)]
    pub threads: ThreadArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub recovered: PathBuf,
    /// Observation mask; the missing entries are scored.
    #[arg(long)]
    pub mask: PathBuf,
    /// Score the observed entries instead.
    #[arg(long)]
    pub on_observed: bool,
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// CSV file to append the report row to.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[command(flatten)]
    pub labels: LabelArgs,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long, value_parser = parse_dims)]
    pub dims: Dims,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Observation mask; blank cells are unobserved.
    #[arg(long)]
    pub mask_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_parser = parse_dims)]
    pub dims: Dims,
    #[arg(long)]
    pub rank: usize,
    #[arg(long, conflicts_with = "noise_rel")]
    pub noise_sigma: Option<f64>,
    /// Noise level as a fraction of the noise-free mean.
    #[arg(long)]
    pub noise_rel: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum)]
    pub pattern: Pattern,
    #[arg(long)]
    pub rate: f64,
    /// Defaults to seed + 1000.
    #[arg(long)]
    pub mask_seed: Option<u64>,
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    /// Outlier bound; defaults to the largest value of the tensor.
    #[arg(long)]
    pub s: Option<f64>,
    /// Defaults to seed + 2000.
    #[arg(long)]
    pub corrupt_seed: Option<u64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub manifest: PathBuf,
    /// CSV file to append the report row to.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub threads: ThreadArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    #[command(flatten)]
    pub threads: ThreadArgs,
}
