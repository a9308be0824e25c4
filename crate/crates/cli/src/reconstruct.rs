//! `sfw reconstruct`: SFW on every frame of a set of frame files.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sfw_core::evaluation::adjoint_sup;
use sfw_core::kernels::{Kernel, KernelSpec};
use sfw_core::measures::DiscreteMeasure;
use sfw_core::sfw::{run_sfw, BlassoProblem, SfwConfig};

use crate::config::{LambdaRule, RunConfig};
use crate::io::{read_frames, write_json, LocalizationWriter};
use crate::trace::TraceJson;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct FileFailure {
    pub file: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructReport {
    pub files: usize,
    pub frames: usize,
    pub spikes: usize,
    pub failures: Vec<FileFailure>,
}

/// Result of one frame.
#[derive(Debug, Clone)]
pub struct FrameOutcome {
    pub frame: usize,
    pub measure: DiscreteMeasure,
    pub trace: TraceJson,
}

/// Trailing decimal digits of the file stem (`frame_00012.bin` gives 12).
fn stem_index(path: &Path) -> Option<usize> {
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem.chars().rev().take_while(|c| c.is_ascii_digit()).collect();
    if digits.is_empty() {
        return None;
    }
    digits.chars().rev().collect::<String>().parse().ok()
}

/// Regularization weight of one frame.
pub fn frame_lambda(cfg: &RunConfig, kernel: &KernelSpec, y: &[f64]) -> Result<f64, CliError> {
    Ok(match cfg.solver.lambda_rule {
        LambdaRule::Absolute => cfg.solver.lambda,
        LambdaRule::Relative => cfg.solver.lambda * adjoint_sup(kernel, y)?,
    })
}

/// SFW on one observation. A vanishing observation gives the empty measure.
pub fn reconstruct_frame(
    kernel: &KernelSpec,
    y: Vec<f64>,
    lambda: f64,
    positive: bool,
    sfw: &SfwConfig,
    frame: usize,
) -> Result<FrameOutcome, sfw_core::Error> {
    if !(lambda > 0.0) {
        return Ok(FrameOutcome { frame, measure: DiscreteMeasure::new(), trace: TraceJson::empty(frame, lambda) });
    }
    let problem = BlassoProblem::new(kernel, y, lambda, positive)?;
    let (measure, trace) = run_sfw(&problem, sfw)?;
    Ok(FrameOutcome { frame, measure, trace: TraceJson::new(frame, lambda, &trace) })
}

pub fn run(cfg: &RunConfig, frames: Option<&str>, pool: &rayon::ThreadPool) -> Result<ReconstructReport, CliError> {
    let kernel = cfg.kernel_spec()?;
    let m = kernel.obs_dim();
    let pattern = match frames {
        Some(p) => p.to_string(),
        None => cfg.out_dir.join("frames").join("*.bin").display().to_string(),
    };
    let mut paths: Vec<PathBuf> = glob::glob(&pattern)
        .map_err(|e| CliError::Config(format!("bad frame pattern {pattern:?}: {e}")))?
        .filter_map(Result::ok)
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Other(anyhow::anyhow!("no frame files match {pattern:?}")));
    }

    let mut jobs: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut failures = Vec::new();
    let mut next = 0usize;
    for path in &paths {
        match read_frames(path) {
            Ok(file) => {
                if file.m != m {
                    return Err(CliError::Dimension(format!(
                        "{} holds frames of {} values, the kernel expects {m}",
                        path.display(),
                        file.m
                    )));
                }
                let base = stem_index(path).unwrap_or(next);
                next = base + file.frames.len();
                jobs.extend(file.frames.into_iter().enumerate().map(|(i, y)| (base + i, y)));
            }
            Err(e) => failures.push(FileFailure { file: path.display().to_string(), error: e.to_string() }),
        }
    }
    jobs.sort_by_key(|j| j.0);
    if jobs.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(CliError::Config("two frame files claim the same frame index".into()));
    }

    let sfw = cfg.sfw_config();
    let positive = cfg.solver.positive;
    let outcomes: Vec<Result<FrameOutcome, CliError>> = pool.install(|| {
        jobs.into_par_iter()
            .map(|(frame, y)| {
                let lambda = frame_lambda(cfg, &kernel, &y)?;
                Ok(reconstruct_frame(&kernel, y, lambda, positive, &sfw, frame)?)
            })
            .collect()
    });

    let traces_dir = cfg.out_dir.join("traces");
    fs::create_dir_all(&traces_dir)?;
    let mut writer = LocalizationWriter::create(&cfg.out_dir.join("localizations.csv"))?;
    writer.header()?;
    let mut frames = 0;
    let mut spikes = 0;
    for outcome in outcomes {
        let o = outcome?;
        writer.write_measure(o.frame, &o.measure)?;
        write_json(&traces_dir.join(format!("frame_{:05}.json", o.frame)), &o.trace)?;
        frames += 1;
        spikes += o.measure.len();
    }
    writer.finish()?;
    let report = ReconstructReport { files: paths.len(), frames, spikes, failures };
    write_json(&cfg.out_dir.join("reconstruct_report.json"), &report)?;
    for f in &report.failures {
        eprintln!("error: {}", f.error);
    }
    if !report.failures.is_empty() {
        return Err(CliError::PartialFailure { failed: report.failures.len(), total: report.files });
    }
    Ok(report)
}
