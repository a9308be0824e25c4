//! JSON form of an SFW run.

use serde::Serialize;
use sfw_core::measures::DiscreteMeasure;
use sfw_core::sfw::{SfwTrace, Termination};

#[derive(Debug, Clone, Serialize)]
pub struct MeasureJson {
    pub amplitudes: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
}

impl From<&DiscreteMeasure> for MeasureJson {
    fn from(m: &DiscreteMeasure) -> Self {
        Self {
            amplitudes: m.amplitudes(),
            positions: m.spikes().iter().map(|s| s.position.as_slice().to_vec()).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationJson {
    pub certificate_max: f64,
    pub inserted: Vec<f64>,
    pub objective_before: f64,
    pub objective_after_lasso: f64,
    pub objective: f64,
    pub spikes: usize,
    pub lasso_iterations: usize,
    pub descent_status: Option<String>,
    pub descent_objectives: Vec<f64>,
    pub after_lasso: MeasureJson,
    pub measure: MeasureJson,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceJson {
    pub frame: usize,
    pub lambda: f64,
    pub termination: &'static str,
    pub outer_iterations: usize,
    pub initial_objective: f64,
    pub final_certificate_max: f64,
    pub iterations: Vec<IterationJson>,
}

pub fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::CertificateBounded => "certificate-bounded",
        Termination::IterationCap => "iteration-cap",
    }
}

impl TraceJson {
    pub fn new(frame: usize, lambda: f64, trace: &SfwTrace) -> Self {
        Self {
            frame,
            lambda,
            termination: termination_name(trace.termination),
            outer_iterations: trace.outer_iterations(),
            initial_objective: trace.initial_objective,
            final_certificate_max: trace.final_certificate_max,
            iterations: trace
                .records
                .iter()
                .map(|r| IterationJson {
                    certificate_max: r.certificate_max,
                    inserted: r.inserted.as_slice().to_vec(),
                    objective_before: r.objective_before,
                    objective_after_lasso: r.objective_after_lasso,
                    objective: r.objective,
                    spikes: r.spike_count(),
                    lasso_iterations: r.lasso_iterations,
                    descent_status: r.descent_status.map(|s| format!("{s:?}")),
                    descent_objectives: r.descent_trace.clone(),
                    after_lasso: (&r.measure_after_lasso).into(),
                    measure: (&r.measure).into(),
                })
                .collect(),
        }
    }

    /// Trace of a frame that was skipped because its observation vanishes.
    pub fn empty(frame: usize, lambda: f64) -> Self {
        Self {
            frame,
            lambda,
            termination: termination_name(Termination::CertificateBounded),
            outer_iterations: 0,
            initial_objective: 0.0,
            final_certificate_max: 0.0,
            iterations: Vec::new(),
        }
    }
}
