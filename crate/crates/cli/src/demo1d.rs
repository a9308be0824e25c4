//! `sfw demo1d`: three Gaussian spikes on [0, 1] recovered from 100 noisy samples.

use clap::Args;
use serde::Serialize;
use sfw_core::certificates::{eta_lambda, eta_v, Field};
use sfw_core::grid::Grid;
use sfw_core::kernels::{apply_forward, Gaussian1D, Kernel};
use sfw_core::measures::DiscreteMeasure;
use sfw_core::sfw::{run_sfw, BlassoProblem};
use sfw_core::simulation::add_gaussian_noise;

use crate::certify::demo_measure;
use crate::config::RunConfig;
use crate::io::write_json;
use crate::trace::TraceJson;
use crate::CliError;

/// Random stream of the demo noise.
pub const DEMO_STREAM: u64 = 0;

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,
    /// Standard deviation of the additive Gaussian noise.
    #[arg(long, default_value_t = 1e-4)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.05)]
    pub sigma: f64,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Points of the certificate export.
    #[arg(long, default_value_t = 1001)]
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoSummary {
    pub lambda: f64,
    pub noise: f64,
    pub sigma: f64,
    pub samples: usize,
    pub seed: u64,
    pub truth: crate::trace::MeasureJson,
    pub recovered: crate::trace::MeasureJson,
    pub trace: TraceJson,
}

fn write_rows<I, R>(path: &std::path::Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).map_err(anyhow::Error::from)?;
    w.write_record(header).map_err(anyhow::Error::from)?;
    for r in rows {
        w.write_record(r).map_err(anyhow::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn measure_rows(outer: usize, phase: &str, m: &DiscreteMeasure) -> Vec<Vec<String>> {
    m.spikes()
        .iter()
        .map(|s| vec![outer.to_string(), phase.to_string(), s.amplitude.to_string(), s.position[0].to_string()])
        .collect()
}

pub fn run(cfg: &RunConfig, args: &DemoArgs) -> Result<DemoSummary, CliError> {
    if !(args.lambda > 0.0) {
        return Err(CliError::Config("demo1d needs lambda > 0".into()));
    }
    let kernel = Gaussian1D::new(args.sigma, args.samples).map_err(|e| CliError::Config(e.to_string()))?;
    let m0 = demo_measure();
    let y0 = apply_forward(&kernel, &m0)?;
    let y = add_gaussian_noise(&y0, args.noise, cfg.seed, DEMO_STREAM)?;
    let problem = BlassoProblem::new(&kernel, y.clone(), args.lambda, cfg.solver.positive)?;
    let (m, trace) = run_sfw(&problem, &cfg.sfw_config())?;

    let dir = cfg.out_dir.join("demo1d");
    std::fs::create_dir_all(&dir)?;
    write_rows(
        &dir.join("observation.csv"),
        &["t", "noiseless", "observed"],
        kernel.samples().iter().zip(&y0).zip(&y).map(|((t, a), b)| [t.to_string(), a.to_string(), b.to_string()]),
    )?;

    let mut objective = vec![vec!["0".into(), "0".into(), "initial".into(), trace.initial_objective.to_string()]];
    let mut measures = measure_rows(0, "truth", &m0);
    for (k, r) in trace.records.iter().enumerate() {
        let outer = (k + 1).to_string();
        objective.push(vec![objective.len().to_string(), outer.clone(), "lasso".into(), r.objective_after_lasso.to_string()]);
        for v in r.descent_trace.iter().skip(1) {
            objective.push(vec![objective.len().to_string(), outer.clone(), "descent".into(), v.to_string()]);
        }
        measures.extend(measure_rows(k + 1, "lasso", &r.measure_after_lasso));
        measures.extend(measure_rows(k + 1, "descent", &r.measure));
    }
    write_rows(&dir.join("objective.csv"), &["step", "outer", "phase", "objective"], objective)?;
    write_rows(&dir.join("measures.csv"), &["outer", "phase", "amplitude", "x"], measures)?;

    // eta_lambda at the start of every outer iteration and at the end, then eta_V of the truth.
    let mut iterates = vec![DiscreteMeasure::new()];
    iterates.extend(trace.records.iter().map(|r| r.measure.clone()));
    let etas = iterates
        .iter()
        .map(|mk| eta_lambda(&kernel, &y, args.lambda, mk))
        .collect::<Result<Vec<_>, _>>()?;
    let ev = eta_v(&kernel, &m0)?;
    let mut header: Vec<String> = vec!["x".into()];
    header.extend((0..etas.len()).map(|k| format!("eta_lambda_{k}")));
    header.push("eta_v".into());
    let grid = Grid::inclusive(kernel.domain(), &[args.points.max(2)]);
    let rows = grid.points().map(|p| {
        let x = p.as_slice();
        let mut row = vec![x[0].to_string()];
        row.extend(etas.iter().map(|e| e.value(x).to_string()));
        row.push(ev.value(x).to_string());
        row
    });
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(&dir.join("certificates.csv"), &header_refs, rows)?;

    let summary = DemoSummary {
        lambda: args.lambda,
        noise: args.noise,
        sigma: args.sigma,
        samples: args.samples,
        seed: cfg.seed,
        truth: (&m0).into(),
        recovered: (&m).into(),
        trace: TraceJson::new(0, args.lambda, &trace),
    };
    write_json(&dir.join("trace.json"), &summary)?;
    println!(
        "{} outer iterations ({}), {} spikes",
        trace.outer_iterations(),
        summary.trace.termination,
        m.len()
    );
    for s in m.spikes() {
        println!("  x = {:.6}  a = {:.6}", s.position[0], s.amplitude);
    }
    Ok(summary)
}
