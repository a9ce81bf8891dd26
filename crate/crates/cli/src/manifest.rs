//! Run manifests and the one-line CSV report.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use tensorfill::datagen::{corrupt, nm_mask, rm_mask, synthesize, CorruptionSpec, SyntheticSpec};
use tensorfill::metrics::evaluate;
use tensorfill::solver::{solve, SolverResult};
use tensorfill::tensor::project;
use tensorfill::{Dims, EvalReport, Method, ObservationMask, SolverConfig, Tensor3};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    /// Entries missing uniformly at random.
    Rm,
    /// Whole (location, day) fibers missing.
    Nm,
}

impl Pattern {
    pub fn name(self) -> &'static str {
        match self {
            Pattern::Rm => "rm",
            Pattern::Nm => "nm",
        }
    }

    pub fn mask(self, dims: Dims, rate: f64, seed: u64) -> tensorfill::Result<ObservationMask> {
        match self {
            Pattern::Rm => rm_mask(dims, rate, seed),
            Pattern::Nm => nm_mask(dims, rate, seed),
        }
    }
}

/// Free-form labels carried into the report row.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    pub pattern: Option<Pattern>,
    pub rate: Option<f64>,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
}

/// One CSV result line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub dims: String,
    pub pattern: Option<Pattern>,
    pub rate: Option<f64>,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    pub mape: Option<f64>,
    pub rmse: f64,
    pub iters: Option<usize>,
}

impl ReportRow {
    pub fn new(method: Option<Method>, dims: Dims, labels: &Labels, eval: &EvalReport, iters: Option<usize>) -> Self {
        ReportRow {
            method: method.map_or_else(String::new, |m| m.name().to_owned()),
            dims: dims.to_string(),
            pattern: labels.pattern,
            rate: labels.rate,
            gamma: labels.gamma,
            seed: labels.seed,
            mape: eval.mape,
            rmse: eval.rmse,
            iters,
        }
    }

    pub fn header() -> &'static str {
        "method,dims,pattern,rate,gamma,seed,mape,rmse,iters"
    }

    /// The row as one CSV line, without header or newline.
    pub fn to_csv_line(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.serialize(self)?;
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8_lossy(&bytes).trim_end().to_owned())
    }
}

/// Everything needed to regenerate a synthetic experiment from seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub synth: SyntheticSpec,
    pub pattern: Pattern,
    pub rate: f64,
    pub mask_seed: u64,
    pub corruption: Option<CorruptionSpec>,
}

impl PipelineSpec {
    pub fn labels(&self) -> Labels {
        Labels {
            pattern: Some(self.pattern),
            rate: Some(self.rate),
            gamma: Some(self.corruption.map_or(0.0, |c| c.gamma)),
            seed: Some(self.synth.seed),
        }
    }
}

pub struct PipelineData {
    pub truth: Tensor3,
    pub observed: Tensor3,
    pub mask: ObservationMask,
    pub corrupted: Option<ObservationMask>,
}

pub fn generate(spec: &PipelineSpec) -> tensorfill::Result<PipelineData> {
    let truth = synthesize(&spec.synth)?;
    let mask = spec.pattern.mask(truth.dims(), spec.rate, spec.mask_seed)?;
    let (observed, corrupted) = match &spec.corruption {
        Some(c) => {
            let out = corrupt(&truth, &mask, c)?;
            (out.tensor, Some(out.corrupted))
        }
        None => (project(&truth, &mask)?, None),
    };
    Ok(PipelineData {
        truth,
        observed,
        mask,
        corrupted,
    })
}

pub struct PipelineOutcome {
    pub data: PipelineData,
    pub result: SolverResult,
    pub eval: EvalReport,
    pub row: ReportRow,
}

/// Generates the data, completes it and scores the missing entries.
pub fn run_pipeline(spec: &PipelineSpec, cfg: &SolverConfig) -> tensorfill::Result<PipelineOutcome> {
    let data = generate(spec)?;
    let result = solve(&data.observed, &data.mask, cfg)?;
    let eval = evaluate(&data.truth, &result.recovered, &data.mask.complement())?;
    let row = ReportRow::new(
        Some(cfg.method),
        data.truth.dims(),
        &spec.labels(),
        &eval,
        Some(result.iterations),
    );
    Ok(PipelineOutcome {
        data,
        result,
        eval,
        row,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub tensor: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub truth: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub recovered: Option<PathBuf>,
    pub anomaly: Option<PathBuf>,
}

/// Record of one completion run, sufficient to repeat it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub inputs: Inputs,
    /// Present when the inputs were generated rather than read from files.
    pub pipeline: Option<PipelineSpec>,
    pub method: Method,
    pub config: SolverConfig,
    pub outputs: Outputs,
    pub wall_clock_secs: f64,
    pub iterations: usize,
    pub converged: bool,
    pub eval: Option<EvalReport>,
    pub row: Option<ReportRow>,
}
