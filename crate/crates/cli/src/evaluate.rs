//! `sfw evaluate`: Jaccard, recall, precision and RMSE of localizations.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;
use sfw_core::evaluation::{aggregate, evaluate_frame, Aggregate, FrameScore, MetricSummary};
use sfw_core::measures::{DiscreteMeasure, Point};

use crate::config::RunConfig;
use crate::io::{read_localizations, write_json};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct FrameScoreJson {
    pub frame: usize,
    pub estimated: usize,
    pub truth: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub jaccard: f64,
    pub recall: f64,
    pub precision: f64,
    /// Per-axis RMSE at the RMSE radius.
    pub rmse: Option<Vec<f64>>,
    pub rmse_pairs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryJson {
    pub jaccard: f64,
    pub recall: f64,
    pub precision: f64,
    pub rmse: Option<Vec<f64>>,
}

impl From<&MetricSummary> for SummaryJson {
    fn from(s: &MetricSummary) -> Self {
        Self { jaccard: s.jaccard, recall: s.recall, precision: s.precision, rmse: s.rmse.clone() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoresJson {
    pub jaccard_radius: f64,
    pub rmse_radius: f64,
    pub frames: Vec<FrameScoreJson>,
    pub per_frame_mean: SummaryJson,
    pub pooled: SummaryJson,
}

/// Scores of matching frame pairs; frames absent from one side count as empty.
pub fn score_frames(
    est: &std::collections::BTreeMap<usize, DiscreteMeasure>,
    truth: &std::collections::BTreeMap<usize, DiscreteMeasure>,
    jaccard_radius: f64,
    rmse_radius: f64,
) -> Result<(Vec<FrameScoreJson>, Aggregate, Aggregate), CliError> {
    let frames: BTreeSet<usize> = est.keys().chain(truth.keys()).copied().collect();
    let empty = DiscreteMeasure::new();
    let mut rows = Vec::with_capacity(frames.len());
    let mut det: Vec<FrameScore> = Vec::with_capacity(frames.len());
    let mut loc: Vec<FrameScore> = Vec::with_capacity(frames.len());
    for f in frames {
        let e: Vec<Point> = est.get(&f).unwrap_or(&empty).positions();
        let t: Vec<Point> = truth.get(&f).unwrap_or(&empty).positions();
        if let (Some(a), Some(b)) = (e.first(), t.first()) {
            if a.dim() != b.dim() {
                return Err(CliError::Dimension(format!(
                    "frame {f}: estimates are {}-D, ground truth is {}-D",
                    a.dim(),
                    b.dim()
                )));
            }
        }
        let s = evaluate_frame(&e, &t, jaccard_radius)?;
        let r = evaluate_frame(&e, &t, rmse_radius)?;
        rows.push(FrameScoreJson {
            frame: f,
            estimated: e.len(),
            truth: t.len(),
            tp: s.tp,
            fp: s.fp,
            fn_: s.fn_,
            jaccard: s.jaccard,
            recall: s.recall,
            precision: s.precision,
            rmse: r.rmse.clone(),
            rmse_pairs: r.tp,
        });
        det.push(s);
        loc.push(r);
    }
    Ok((rows, aggregate(&det), aggregate(&loc)))
}

fn summary(det: &MetricSummary, loc: &MetricSummary) -> SummaryJson {
    SummaryJson { rmse: loc.rmse.clone(), ..det.into() }
}

fn fmt_rmse(r: &Option<Vec<f64>>, axis: usize) -> String {
    r.as_ref().and_then(|v| v.get(axis)).map_or(String::new(), |x| x.to_string())
}

pub fn run(cfg: &RunConfig, estimates: Option<&Path>, ground_truth: Option<&Path>) -> Result<ScoresJson, CliError> {
    let est_path = estimates.map_or_else(|| cfg.out_dir.join("localizations.csv"), Path::to_path_buf);
    let gt_path = ground_truth.map_or_else(|| cfg.out_dir.join("ground_truth.csv"), Path::to_path_buf);
    let est = read_localizations(&est_path)?;
    let truth = read_localizations(&gt_path)?;
    let ev = &cfg.evaluation;
    let (rows, det, loc) = score_frames(&est, &truth, ev.jaccard_radius, ev.rmse_radius)?;
    let scores = ScoresJson {
        jaccard_radius: ev.jaccard_radius,
        rmse_radius: ev.rmse_radius,
        per_frame_mean: summary(&det.per_frame_mean, &loc.per_frame_mean),
        pooled: summary(&det.pooled, &loc.pooled),
        frames: rows,
    };
    write_json(&cfg.out_dir.join("scores.json"), &scores)?;

    let mut w = csv::Writer::from_path(cfg.out_dir.join("scores.csv")).map_err(anyhow::Error::from)?;
    w.write_record([
        "frame", "estimated", "truth", "tp", "fp", "fn", "jaccard", "recall", "precision", "rmse_x1", "rmse_x2",
        "rmse_x3",
    ])
    .map_err(anyhow::Error::from)?;
    for r in &scores.frames {
        w.write_record([
            r.frame.to_string(),
            r.estimated.to_string(),
            r.truth.to_string(),
            r.tp.to_string(),
            r.fp.to_string(),
            r.fn_.to_string(),
            r.jaccard.to_string(),
            r.recall.to_string(),
            r.precision.to_string(),
            fmt_rmse(&r.rmse, 0),
            fmt_rmse(&r.rmse, 1),
            fmt_rmse(&r.rmse, 2),
        ])
        .map_err(anyhow::Error::from)?;
    }
    w.flush()?;

    let mut s = csv::Writer::from_path(cfg.out_dir.join("summary.csv")).map_err(anyhow::Error::from)?;
    s.write_record([
        "model", "planes", "molecules_per_frame", "frames", "jaccard", "recall", "precision", "rmse_x1", "rmse_x2",
        "rmse_x3",
    ])
    .map_err(anyhow::Error::from)?;
    let p = &scores.pooled;
    s.write_record([
        cfg.kernel.model_name().to_string(),
        cfg.planes().to_string(),
        cfg.simulation.molecules_per_frame.to_string(),
        scores.frames.len().to_string(),
        p.jaccard.to_string(),
        p.recall.to_string(),
        p.precision.to_string(),
        fmt_rmse(&p.rmse, 0),
        fmt_rmse(&p.rmse, 1),
        fmt_rmse(&p.rmse, 2),
    ])
    .map_err(anyhow::Error::from)?;
    s.flush()?;
    println!(
        "frames {}  jaccard {:.4}  recall {:.4}  precision {:.4}",
        scores.frames.len(),
        p.jaccard,
        p.recall,
        p.precision
    );
    Ok(scores)
}
