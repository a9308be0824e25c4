//! `sfw certify`: certificate export.

use std::path::Path;

use clap::Args;
use serde::Serialize;
use sfw_core::certificates::{
    check_nondegeneracy, closed_form_eta_w_laplace, eta_v as build_eta_v, eta_w, eta_w_continuous, Field,
    NondegeneracyReport, NondegeneracyTolerances,
};
use sfw_core::grid::Grid;
use sfw_core::kernels::{DiscreteLaplace, Kernel};
use sfw_core::measures::{DiscreteMeasure, Domain, Point};

use crate::config::RunConfig;
use crate::io::{read_localizations, write_json};
use crate::{CliError, EtaVArgs};

#[derive(Debug, Clone, Args)]
pub struct LaplaceArgs {
    /// Cluster order N.
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    /// Cluster point.
    #[arg(long, default_value_t = 1.0)]
    pub xc: f64,
    /// Use the L2-normalized kernel.
    #[arg(long)]
    pub normalized: bool,
    /// Also build eta_W from K uniform samples of [0, s_max].
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 20.0)]
    pub s_max: f64,
    /// Evaluation points on [xc/4, 4 xc].
    #[arg(long, default_value_t = 401)]
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct NondegeneracyJson {
    pub max_off_support: f64,
    pub exclusion_radius: f64,
    pub hessian_determinants: Vec<f64>,
    pub top_derivative: Option<f64>,
    pub nondegenerate: bool,
}

impl From<&NondegeneracyReport> for NondegeneracyJson {
    fn from(r: &NondegeneracyReport) -> Self {
        Self {
            max_off_support: r.max_off_support,
            exclusion_radius: r.exclusion_radius,
            hessian_determinants: r.hessian_determinants.clone(),
            top_derivative: r.top_derivative,
            nondegenerate: r.nondegenerate,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LaplaceReport {
    pub order: usize,
    pub xc: f64,
    pub normalized: bool,
    pub range: [f64; 2],
    pub points: usize,
    /// `sup |continuous - closed form|` over the evaluation points.
    pub continuous_sup_error: f64,
    pub continuous_condition: f64,
    pub continuous_nondegeneracy: NondegeneracyJson,
    pub samples: Option<usize>,
    pub sampled_sup_error: Option<f64>,
    pub sampled_condition: Option<f64>,
    pub sampled_nondegeneracy: Option<NondegeneracyJson>,
}

/// Sup distance of `eta_W` built from `samples` uniform samples of `[0, s_max]`
/// to the closed form, over `points` evenly spaced points of `[xc/4, 4 xc]`.
pub fn sampled_laplace_error(
    samples: usize,
    s_max: f64,
    xc: f64,
    order: usize,
    normalized: bool,
    points: usize,
) -> Result<f64, sfw_core::Error> {
    let domain = Domain::new(&[xc / 4.0], &[4.0 * xc])?;
    let kernel = DiscreteLaplace::uniform(samples, s_max, normalized, domain)?;
    let eta = eta_w(&kernel, xc, order)?;
    let mut err = 0.0f64;
    for x in eval_points(xc, points) {
        let exact = closed_form_eta_w_laplace(x, xc, order, normalized)?;
        err = err.max((eta.value(&[x]) - exact).abs());
    }
    Ok(err)
}

fn eval_points(xc: f64, points: usize) -> Vec<f64> {
    let (lo, hi) = (xc / 4.0, 4.0 * xc);
    let n = points.max(2);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn laplace(cfg: &RunConfig, args: &LaplaceArgs) -> Result<LaplaceReport, CliError> {
    if args.order == 0 || !(args.xc > 0.0) {
        return Err(CliError::Config("certify laplace needs order >= 1 and xc > 0".into()));
    }
    let domain = Domain::new(&[args.xc / 4.0], &[4.0 * args.xc])?;
    let continuous = eta_w_continuous(args.xc, args.order, args.normalized, domain)?;
    let sampled_kernel = match args.samples {
        Some(k) => Some(DiscreteLaplace::uniform(k, args.s_max, args.normalized, domain)?),
        None => None,
    };
    let sampled = match &sampled_kernel {
        Some(k) => Some(eta_w(k, args.xc, args.order)?),
        None => None,
    };

    let xs = eval_points(args.xc, args.points);
    let mut w = csv::Writer::from_path(cfg.out_dir.join("certificate.csv")).map_err(anyhow::Error::from)?;
    let mut header = vec!["x", "closed_form", "continuous"];
    if sampled.is_some() {
        header.push("sampled");
    }
    w.write_record(&header).map_err(anyhow::Error::from)?;
    let mut cont_err = 0.0f64;
    let mut samp_err = 0.0f64;
    for &x in &xs {
        let exact = closed_form_eta_w_laplace(x, args.xc, args.order, args.normalized)?;
        let c = continuous.value(&[x]);
        cont_err = cont_err.max((c - exact).abs());
        let mut row = vec![x.to_string(), exact.to_string(), c.to_string()];
        if let Some(s) = &sampled {
            let v = s.value(&[x]);
            samp_err = samp_err.max((v - exact).abs());
            row.push(v.to_string());
        }
        w.write_record(&row).map_err(anyhow::Error::from)?;
    }
    w.flush()?;

    let spikes = [Point::d1(args.xc)];
    let tol = NondegeneracyTolerances::default();
    let report = LaplaceReport {
        order: args.order,
        xc: args.xc,
        normalized: args.normalized,
        range: [args.xc / 4.0, 4.0 * args.xc],
        points: xs.len(),
        continuous_sup_error: cont_err,
        continuous_condition: continuous.condition(),
        continuous_nondegeneracy: (&check_nondegeneracy(&continuous, &spikes, 2048, tol)).into(),
        samples: args.samples,
        sampled_sup_error: sampled.as_ref().map(|_| samp_err),
        sampled_condition: sampled.as_ref().and_then(|s| s.condition()),
        sampled_nondegeneracy: sampled.as_ref().map(|s| (&check_nondegeneracy(s, &spikes, 2048, tol)).into()),
    };
    write_json(&cfg.out_dir.join("certificate.json"), &report)?;
    println!("continuous sup error {cont_err:.3e}");
    if let Some(e) = report.sampled_sup_error {
        println!("sampled sup error {e:.3e}");
    }
    Ok(report)
}

/// Five unit molecules in the 6.4 x 6.4 x 0.8 micron box.
pub fn five_molecules() -> DiscreteMeasure {
    let pts = [(1.5, 2.5, 0.1), (1.5, 3.0, 0.5), (2.0, 5.0, 0.7), (4.5, 3.5, 0.4), (5.0, 1.0, 0.2)];
    DiscreteMeasure::from_parts(&[1.0; 5], &pts.map(|(a, b, c)| Point::d3(a, b, c)))
}

/// `1.3 delta_0.3 + 0.8 delta_0.37 + 1.4 delta_0.7`.
pub fn demo_measure() -> DiscreteMeasure {
    DiscreteMeasure::from_parts(&[1.3, 0.8, 1.4], &[Point::d1(0.3), Point::d1(0.37), Point::d1(0.7)])
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaVReport {
    pub model: &'static str,
    pub spikes: Vec<Vec<f64>>,
    pub signs: Vec<f64>,
    pub condition: Option<f64>,
    /// `max |eta_V(x_i) - sign(a_i)|`.
    pub interpolation_error: f64,
    pub nondegeneracy: NondegeneracyJson,
    pub slices: Vec<f64>,
    pub resolution: usize,
}

pub fn eta_v(cfg: &RunConfig, args: &EtaVArgs) -> Result<EtaVReport, CliError> {
    let kernel = cfg.kernel_spec()?;
    let m0 = match &args.measure {
        Some(p) => load_measure(p)?,
        None => match kernel.dim() {
            3 => five_molecules(),
            _ if cfg.kernel.model_name() == "gaussian1d" => demo_measure(),
            _ => return Err(CliError::Config("no default measure for this kernel; pass --measure".into())),
        },
    };
    if m0.is_empty() {
        return Err(CliError::Config("the measure has no spikes".into()));
    }
    if m0.spikes()[0].position.dim() != kernel.dim() {
        return Err(CliError::Dimension(format!(
            "measure is {}-D, kernel is {}-D",
            m0.spikes()[0].position.dim(),
            kernel.dim()
        )));
    }
    let eta = build_eta_v(&kernel, &m0)?;
    let signs: Vec<f64> = m0.spikes().iter().map(|s| s.amplitude.signum()).collect();
    let interpolation_error = m0
        .spikes()
        .iter()
        .zip(&signs)
        .map(|(s, sg)| (eta.value(s.position.as_slice()) - sg).abs())
        .fold(0.0, f64::max);
    let domain = kernel.domain();
    let mut w = csv::Writer::from_path(cfg.out_dir.join("eta_v.csv")).map_err(anyhow::Error::from)?;
    let mut slices = Vec::new();
    let (resolution, density) = if kernel.dim() == 3 {
        let res = args.resolution.unwrap_or(64);
        w.write_record(["x3", "x1", "x2", "eta"]).map_err(anyhow::Error::from)?;
        for s in m0.spikes() {
            let z = s.position[2];
            if slices.contains(&z) {
                continue;
            }
            slices.push(z);
            let lateral = Domain::new(&domain.lo()[..2], &domain.hi()[..2])?;
            for p in Grid::cell_centered(&lateral, &[res, res]).points() {
                let v = eta.value(&[p[0], p[1], z]);
                w.write_record([z.to_string(), p[0].to_string(), p[1].to_string(), v.to_string()])
                    .map_err(anyhow::Error::from)?;
            }
        }
        (res, 32)
    } else {
        let res = args.resolution.unwrap_or(1001);
        w.write_record(["x", "eta"]).map_err(anyhow::Error::from)?;
        for p in Grid::inclusive(domain, &[res.max(2)]).points() {
            w.write_record([p[0].to_string(), eta.value(p.as_slice()).to_string()]).map_err(anyhow::Error::from)?;
        }
        (res, 2048)
    };
    w.flush()?;
    let rep = check_nondegeneracy(&eta, &m0.positions(), density, NondegeneracyTolerances::default());
    let report = EtaVReport {
        model: cfg.kernel.model_name(),
        spikes: m0.spikes().iter().map(|s| s.position.as_slice().to_vec()).collect(),
        signs,
        condition: eta.condition(),
        interpolation_error,
        nondegeneracy: (&rep).into(),
        slices,
        resolution,
    };
    write_json(&cfg.out_dir.join("eta_v.json"), &report)?;
    println!(
        "eta_V: interpolation error {:.3e}, max off support {:.6}, nondegenerate {}",
        report.interpolation_error, rep.max_off_support, rep.nondegenerate
    );
    Ok(report)
}

/// All rows of a localization file as one measure.
fn load_measure(path: &Path) -> Result<DiscreteMeasure, CliError> {
    let frames = read_localizations(path)?;
    Ok(frames.values().fold(DiscreteMeasure::new(), |acc, m| acc.concat(m)))
}
