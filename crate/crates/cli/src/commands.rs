use std::path::{Path, PathBuf};
use std::time::Instant;

use tensorfill::datagen::{corrupt, missing_fibers, synthesize, CorruptionSpec, SyntheticSpec};
use tensorfill::metrics::evaluate;
use tensorfill::solver::solve;
use tensorfill::tensor::project;
use tensorfill::{EvalReport, ObservationMask, SolverConfig, Tensor3};

use crate::args::*;
use crate::error::{CliError, Result};
use crate::io::{ingest_csv, load_json, load_mask, load_tensor, save_json, save_mask, save_tensor, write_atomic};
use crate::manifest::{run_pipeline, Inputs, Labels, Outputs, Pattern, PipelineSpec, ReportRow, RunManifest};

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => synth(&a),
        Command::Mask(a) => mask(&a),
        Command::Corrupt(a) => corrupt_cmd(&a),
        Command::Complete(a) => complete(&a),
        Command::Eval(a) => eval(&a),
        Command::Ingest(a) => ingest(&a),
        Command::Run(a) => run(&a),
        Command::Replay(a) => replay(&a),
    }
}

fn apply_threads(cfg: &mut SolverConfig, t: ThreadArgs) {
    if t.threads > 1 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.threads).build_global();
        cfg.parallel = true;
    } else {
        cfg.parallel = false;
    }
}

fn synth(a: &SynthArgs) -> Result<()> {
    let x = synthesize(&SyntheticSpec {
        dims: a.dims,
        rank: a.rank,
        noise_sigma: a.noise_sigma,
        seed: a.seed,
    })?;
    save_tensor(&a.output, &x)?;
    println!("dims {} seed {}", a.dims, a.seed);
    Ok(())
}

fn mask(a: &MaskArgs) -> Result<()> {
    let m = a.pattern.mask(a.dims, a.rate, a.seed)?;
    save_mask(&a.output, &m)?;
    println!("missing fraction {:.3}", m.missing_count() as f64 / a.dims.len() as f64);
    if a.pattern == Pattern::Nm {
        println!("fully missing fibers {}", missing_fibers(&m).len());
    }
    Ok(())
}

fn corrupt_cmd(a: &CorruptArgs) -> Result<()> {
    let y = load_tensor(&a.tensor)?;
    let m = load_mask(&a.mask)?;
    let s = a.s.unwrap_or_else(|| project(&y, &m).map_or(0.0, |p| p.max_abs()));
    let out = corrupt(
        &y,
        &m,
        &CorruptionSpec {
            gamma: a.gamma,
            s,
            seed: a.seed,
        },
    )?;
    save_tensor(&a.output, &out.tensor)?;
    if let Some(p) = &a.omega_c {
        save_mask(p, &out.corrupted)?;
    }
    println!("gamma {} s {} corrupted {}", a.gamma, s, out.corrupted.observed_count());
    Ok(())
}

fn anomaly_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map_or_else(|| "recovered".into(), |s| s.to_string_lossy().into_owned());
    output.with_file_name(format!("{stem}.anomaly.tns"))
}

/// Scores the unobserved entries; nothing to score without truth or gaps.
fn score_missing(truth: Option<&Tensor3>, recovered: &Tensor3, m: &ObservationMask) -> Result<Option<EvalReport>> {
    match truth {
        Some(t) if m.missing_count() > 0 => Ok(Some(evaluate(t, recovered, &m.complement())?)),
        _ => Ok(None),
    }
}

fn complete(a: &CompleteArgs) -> Result<()> {
    let mut cfg = a.solver.config();
    apply_threads(&mut cfg, a.threads);
    let y = load_tensor(&a.tensor)?;
    let m = load_mask(&a.mask)?;
    let truth = a.truth.as_deref().map(load_tensor).transpose()?;

    let start = Instant::now();
    let r = solve(&y, &m, &cfg)?;
    let wall = start.elapsed().as_secs_f64();

    save_tensor(&a.output, &r.recovered)?;
    let anomaly_out = match &r.anomaly {
        Some(e) => {
            let p = a.anomaly_out.clone().unwrap_or_else(|| anomaly_path(&a.output));
            save_tensor(&p, e)?;
            Some(p)
        }
        None => None,
    };
    let eval = score_missing(truth.as_ref(), &r.recovered, &m)?;
    let row = eval.map(|e| ReportRow::new(Some(cfg.method), y.dims(), &a.labels.labels(), &e, Some(r.iterations)));

    let manifest = RunManifest {
        inputs: Inputs {
            tensor: Some(a.tensor.clone()),
            mask: Some(a.mask.clone()),
            truth: a.truth.clone(),
        },
        pipeline: None,
        method: cfg.method,
        config: cfg.clone(),
        outputs: Outputs {
            recovered: Some(a.output.clone()),
            anomaly: anomaly_out,
        },
        wall_clock_secs: wall,
        iterations: r.iterations,
        converged: r.converged,
        eval,
        row: row.clone(),
    };
    save_json(&a.manifest, &manifest)?;
    println!(
        "method {} iterations {} converged {}",
        cfg.method, r.iterations, r.converged
    );
    if let Some(row) = row {
        println!("{}", row.to_csv_line()?);
    }
    Ok(())
}

/// Appends `row` to a CSV file, writing the header first if the file is new.
pub fn append_row(path: &Path, row: &ReportRow) -> Result<()> {
    let mut body = match std::fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => format!("{}\n", ReportRow::header()),
        Err(source) => {
            return Err(CliError::Io {
                path: path.to_owned(),
                source,
            })
        }
    };
    if !body.is_empty() && !body.ends_with('\n') {
        body.push('\n');
    }
    body.push_str(&row.to_csv_line()?);
    body.push('\n');
    write_atomic(path, |w| {
        w.write_all(body.as_bytes()).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })
    })
}

fn eval(a: &EvalArgs) -> Result<()> {
    let truth = load_tensor(&a.truth)?;
    let rec = load_tensor(&a.recovered)?;
    let m = load_mask(&a.mask)?;
    let set = if a.on_observed { m } else { m.complement() };
    let report = evaluate(&truth, &rec, &set)?;
    let row = ReportRow::new(a.method, truth.dims(), &a.labels.labels(), &report, a.iters);
    println!("{}", serde_json::to_string(&report).expect("report serialises"));
    println!("{}", row.to_csv_line()?);
    if let Some(p) = &a.json {
        save_json(p, &report)?;
    }
    if let Some(p) = &a.csv {
        append_row(p, &row)?;
    }
    Ok(())
}

fn ingest(a: &IngestArgs) -> Result<()> {
    let (x, m) = ingest_csv(&a.csv, a.dims)?;
    save_tensor(&a.output, &x)?;
    if let Some(p) = &a.mask_out {
        save_mask(p, &m)?;
    }
    println!("dims {} missing {}", a.dims, m.missing_count());
    Ok(())
}

fn pipeline_spec(a: &RunArgs) -> Result<PipelineSpec> {
    let noise_sigma = match (a.noise_sigma, a.noise_rel) {
        (Some(s), _) => s,
        (None, Some(rel)) => {
            let clean = synthesize(&SyntheticSpec {
                dims: a.dims,
                rank: a.rank,
                noise_sigma: 0.0,
                seed: a.seed,
            })?;
            rel * clean.mean()
        }
        (None, None) => 0.0,
    };
    let synth = SyntheticSpec {
        dims: a.dims,
        rank: a.rank,
        noise_sigma,
        seed: a.seed,
    };
    let corruption = if a.gamma > 0.0 {
        let s = match a.s {
            Some(s) => s,
            None => synthesize(&synth)?.max_abs(),
        };
        Some(CorruptionSpec {
            gamma: a.gamma,
            s,
            seed: a.corrupt_seed.unwrap_or(a.seed + 2000),
        })
    } else {
        None
    };
    Ok(PipelineSpec {
        synth,
        pattern: a.pattern,
        rate: a.rate,
        mask_seed: a.mask_seed.unwrap_or(a.seed + 1000),
        corruption,
    })
}

fn run(a: &RunArgs) -> Result<()> {
    let spec = pipeline_spec(a)?;
    let mut cfg = a.solver.config();
    apply_threads(&mut cfg, a.threads);
    let start = Instant::now();
    let out = run_pipeline(&spec, &cfg)?;
    let wall = start.elapsed().as_secs_f64();
    let manifest = RunManifest {
        inputs: Inputs::default(),
        pipeline: Some(spec),
        method: cfg.method,
        config: cfg,
        outputs: Outputs::default(),
        wall_clock_secs: wall,
        iterations: out.result.iterations,
        converged: out.result.converged,
        eval: Some(out.eval),
        row: Some(out.row.clone()),
    };
    save_json(&a.manifest, &manifest)?;
    if let Some(p) = &a.csv {
        append_row(p, &out.row)?;
    }
    println!("{}", out.row.to_csv_line()?);
    Ok(())
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| CliError::Core(tensorfill::Error::Input(format!("manifest has no {what} input"))))
}

fn replay(a: &ReplayArgs) -> Result<()> {
    let recorded: RunManifest = load_json(&a.manifest)?;
    let mut cfg = recorded.config.clone();
    apply_threads(&mut cfg, a.threads);

    let (iterations, eval, row) = match &recorded.pipeline {
        Some(spec) => {
            let out = run_pipeline(spec, &cfg)?;
            (out.result.iterations, Some(out.eval), Some(out.row))
        }
        None => {
            let y = load_tensor(required(&recorded.inputs.tensor, "tensor")?)?;
            let m = load_mask(required(&recorded.inputs.mask, "mask")?)?;
            let r = solve(&y, &m, &cfg)?;
            let truth = recorded.inputs.truth.as_deref().map(load_tensor).transpose()?;
            let eval = score_missing(truth.as_ref(), &r.recovered, &m)?;
            let labels = recorded.row.as_ref().map_or_else(Labels::default, |row| Labels {
                pattern: row.pattern,
                rate: row.rate,
                gamma: row.gamma,
                seed: row.seed,
            });
            let row = eval.map(|e| ReportRow::new(Some(cfg.method), y.dims(), &labels, &e, Some(r.iterations)));
            (r.iterations, eval, row)
        }
    };

    let line = |row: &Option<ReportRow>| -> Result<String> {
        row.as_ref().map_or(Ok(String::new()), |r| r.to_csv_line())
    };
    let (was, now) = (line(&recorded.row)?, line(&row)?);
    if was != now || eval != recorded.eval || iterations != recorded.iterations {
        return Err(CliError::Mismatch {
            recorded: format!("{was:?} after {} iterations", recorded.iterations),
            replayed: format!("{now:?} after {iterations} iterations"),
        });
    }
    println!("replay matches: {} iterations", iterations);
    if !now.is_empty() {
        println!("{now}");
    }
    Ok(())
}
