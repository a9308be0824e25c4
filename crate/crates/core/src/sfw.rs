//! Sliding Frank-Wolfe for the BLASSO, and the plain Frank-Wolfe baseline on
//! the epigraphical lift.

use alloc::vec;
use alloc::vec::Vec;


use crate::certificates::{eta_lambda, Certificate, Field};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::{apply_forward, atom_matrices, Kernel};
use crate::linalg::{dot, norm2};
use crate::measures::{DiscreteMeasure, Point};
use crate::solvers::{
    argmax_certificate, lasso_gram, local_descent, ArgmaxConfig, DescentConfig, DescentStatus, LassoConfig,
    SignConstraint, SignMode,
};

/// `min_m 1/2 |Phi m - y|^2 + lambda |m|_TV`, optionally over `m >= 0`.
#[derive(Debug, Clone)]
pub struct BlassoProblem<'k, K: Kernel + ?Sized> {
    pub kernel: &'k K,
    pub y: Vec<f64>,
    pub lambda: f64,
    pub positive: bool,
}

impl<'k, K: Kernel + ?Sized> BlassoProblem<'k, K> {
    pub fn new(kernel: &'k K, y: Vec<f64>, lambda: f64, positive: bool) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::Parameter("lambda must be positive".into()));
        }
        if y.len() != kernel.obs_dim() {
            return Err(Error::Dimension { expected: kernel.obs_dim(), found: y.len() });
        }
        Ok(Self { kernel, y, lambda, positive })
    }

    /// Mass bound of the epigraphical lift, `|y|^2 / (2 lambda)`.
    pub fn mass_bound(&self) -> f64 {
        dot(&self.y, &self.y) / (2.0 * self.lambda)
    }

    pub fn certificate(&self, m: &DiscreteMeasure) -> Result<Certificate<'k, K>> {
        eta_lambda(self.kernel, &self.y, self.lambda, m)
    }

    /// `1/2 |Phi m - y|^2 + lambda |m|_TV`.
    pub fn objective(&self, m: &DiscreteMeasure) -> Result<f64> {
        let fwd = apply_forward(self.kernel, m)?;
        let r: f64 = fwd.iter().zip(&self.y).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(0.5 * r + self.lambda * m.tv_norm())
    }
}

/// `objective(problem, m)` as a free function.
pub fn objective<K: Kernel + ?Sized>(problem: &BlassoProblem<'_, K>, m: &DiscreteMeasure) -> Result<f64> {
    problem.objective(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SfwConfig {
    pub max_outer: usize,
    pub lasso: LassoConfig,
    pub descent: DescentConfig,
    pub argmax: ArgmaxConfig,
    /// Stop when `|eta(x*)| <= 1 + stop_tol`.
    pub stop_tol: f64,
    /// Prune amplitudes with `|a| <= prune_rel * max |a|`.
    pub prune_rel: f64,
    /// Argmax search grid; the kernel's default grid when `None`.
    pub grid: Option<Grid>,
}

impl Default for SfwConfig {
    fn default() -> Self {
        Self {
            max_outer: 100,
            lasso: LassoConfig::default(),
            descent: DescentConfig::default(),
            argmax: ArgmaxConfig::default(),
            stop_tol: 1e-9,
            prune_rel: 1e-10,
            grid: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    CertificateBounded,
    IterationCap,
}

/// One outer iteration (one inserted spike).
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// `|eta(x*)|` (or `eta(x*)` in positive mode) that triggered the insertion.
    pub certificate_max: f64,
    pub inserted: Point,
    pub objective_before: f64,
    pub objective_after_lasso: f64,
    /// Objective at the end of the iteration.
    pub objective: f64,
    pub measure_after_lasso: DiscreteMeasure,
    pub measure: DiscreteMeasure,
    pub lasso_iterations: usize,
    /// Objective along the accepted descent iterates.
    pub descent_trace: Vec<f64>,
    pub descent_status: Option<DescentStatus>,
}

impl IterationRecord {
    pub fn spike_count(&self) -> usize {
        self.measure.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SfwTrace {
    pub initial_objective: f64,
    pub records: Vec<IterationRecord>,
    /// Certificate maximum at the final check.
    pub final_certificate_max: f64,
    pub final_argmax: Option<Point>,
    pub termination: Termination,
}

impl SfwTrace {
    pub fn outer_iterations(&self) -> usize {
        self.records.len()
    }

    /// Initial objective followed by the objective after each iteration.
    pub fn objectives(&self) -> Vec<f64> {
        let mut v = vec![self.initial_objective];
        v.extend(self.records.iter().map(|r| r.objective));
        v
    }
}

fn prune_relative(m: &DiscreteMeasure, rel: f64) -> DiscreteMeasure {
    let max = m.spikes().iter().fold(0.0f64, |a, s| a.max(s.amplitude.abs()));
    m.prune(rel * max)
}

/// Sliding Frank-Wolfe from `m = 0`.
pub fn run_sfw<K: Kernel + ?Sized>(
    problem: &BlassoProblem<'_, K>,
    cfg: &SfwConfig,
) -> Result<(DiscreteMeasure, SfwTrace)> {
    if cfg.max_outer == 0 {
        return Err(Error::Parameter("max_outer must be at least 1".into()));
    }
    let kernel = problem.kernel;
    let grid = cfg.grid.clone().unwrap_or_else(|| kernel.default_grid());
    let lasso_cfg = LassoConfig {
        sign_mode: if problem.positive { SignMode::Nonnegative } else { SignMode::Free },
        ..cfg.lasso
    };
    let y2 = dot(&problem.y, &problem.y);
    let mut m = DiscreteMeasure::new();
    let mut f = problem.objective(&m)?;
    let mut trace = SfwTrace {
        initial_objective: f,
        records: Vec::new(),
        final_certificate_max: 0.0,
        final_argmax: None,
        termination: Termination::IterationCap,
    };
    for k in 0..=cfg.max_outer {
        let cert = problem.certificate(&m)?;
        let (x_star, value) = argmax_certificate(&cert, &grid, problem.positive, &cfg.argmax);
        trace.final_certificate_max = value;
        trace.final_argmax = Some(x_star);
        if value <= 1.0 + cfg.stop_tol {
            trace.termination = Termination::CertificateBounded;
            break;
        }
        if k == cfg.max_outer {
            break;
        }
        let eta_star = cert.value(x_star.as_slice());
        let sign = if problem.positive { 1.0 } else { eta_star.signum() };
        let mut positions = m.positions();
        positions.push(x_star);
        let mut signs: Vec<SignConstraint> =
            m.spikes().iter().map(|s| SignConstraint::of_sign(s.amplitude)).collect();
        signs.push(SignConstraint::of_sign(sign));
        if problem.positive {
            signs.iter_mut().for_each(|s| *s = SignConstraint::Nonnegative);
        }
        let am = atom_matrices(kernel, &positions, false)?;
        let mut init = m.amplitudes();
        init.push(0.0);
        let lasso = lasso_gram(&am.phi.gram(), &am.phi.tr_mul_vec(&problem.y), y2, problem.lambda, &signs, Some(&init), &lasso_cfg)?;
        let half = prune_relative(&DiscreteMeasure::from_parts(&lasso.amplitudes, &positions), cfg.prune_rel);
        let f_half = problem.objective(&half)?;
        let (next, descent_trace, status) = if half.is_empty() {
            (half.clone(), Vec::new(), None)
        } else {
            let d = local_descent(kernel, &half.amplitudes(), &half.positions(), &problem.y, problem.lambda, &cfg.descent)?;
            let moved = DiscreteMeasure::from_parts(&d.amplitudes, &d.positions);
            (prune_relative(&moved, cfg.prune_rel), d.trace, Some(d.status))
        };
        let f_next = problem.objective(&next)?;
        trace.records.push(IterationRecord {
            certificate_max: value,
            inserted: x_star,
            objective_before: f,
            objective_after_lasso: f_half,
            objective: f_next,
            measure_after_lasso: half,
            measure: next.clone(),
            lasso_iterations: lasso.iterations,
            descent_trace,
            descent_status: status,
        });
        m = next;
        f = f_next;
    }
    Ok((m, trace))
}

/// Classical Frank-Wolfe on `{(t, m) : |m|_TV <= t <= M}` with step
/// `2 / (k + 2)`, used as a baseline. Stops when the Frank-Wolfe gap vanishes.
pub fn run_fw_reference<K: Kernel + ?Sized>(
    problem: &BlassoProblem<'_, K>,
    max_outer: usize,
    grid: Option<&Grid>,
) -> Result<(DiscreteMeasure, SfwTrace)> {
    if max_outer == 0 {
        return Err(Error::Parameter("max_outer must be at least 1".into()));
    }
    let kernel = problem.kernel;
    let default_grid;
    let grid = match grid {
        Some(g) => g,
        None => {
            default_grid = kernel.default_grid();
            &default_grid
        }
    };
    let big_m = problem.mass_bound();
    let lambda = problem.lambda;
    let mut m = DiscreteMeasure::new();
    let mut t = 0.0;
    let mut f = problem.objective(&m)?;
    let mut trace = SfwTrace {
        initial_objective: f,
        records: Vec::new(),
        final_certificate_max: 0.0,
        final_argmax: None,
        termination: Termination::IterationCap,
    };
    for k in 0..=max_outer {
        let cert = problem.certificate(&m)?;
        let (x_star, value) = argmax_certificate(&cert, grid, problem.positive, &ArgmaxConfig::default());
        trace.final_certificate_max = value;
        trace.final_argmax = Some(x_star);
        // Linear model at the current point: <grad, (t, m)> = lambda (t - <eta, m>).
        let eta_m: f64 = m.spikes().iter().map(|s| s.amplitude * cert.value(s.position.as_slice())).sum();
        let current = lambda * (t - eta_m);
        let (vertex_value, use_atom) =
            if value > 1.0 { (lambda * big_m * (1.0 - value), true) } else { (0.0, false) };
        let gap = current - vertex_value;
        if gap <= 1e-12 * (1.0 + f.abs()) {
            trace.termination = Termination::CertificateBounded;
            break;
        }
        if k == max_outer {
            break;
        }
        let gamma = 2.0 / (k as f64 + 2.0);
        let mut next = m.scaled(1.0 - gamma);
        t *= 1.0 - gamma;
        if use_atom {
            let sign = if problem.positive { 1.0 } else { cert.value(x_star.as_slice()).signum() };
            let amp = gamma * big_m * sign;
            next = merge_spike(&next, amp, x_star);
            t += gamma * big_m;
        }
        let next = next.prune(0.0);
        let f_next = problem.objective(&next)?;
        trace.records.push(IterationRecord {
            certificate_max: value,
            inserted: x_star,
            objective_before: f,
            objective_after_lasso: f_next,
            objective: f_next,
            measure_after_lasso: next.clone(),
            measure: next.clone(),
            lasso_iterations: 0,
            descent_trace: Vec::new(),
            descent_status: None,
        });
        m = next;
        f = f_next;
    }
    Ok((m, trace))
}

fn merge_spike(m: &DiscreteMeasure, amp: f64, x: Point) -> DiscreteMeasure {
    let mut out = m.clone();
    if let Some(i) = m.spikes().iter().position(|s| s.position == x) {
        let mut amps = m.amplitudes();
        amps[i] += amp;
        out = DiscreteMeasure::from_parts(&amps, &m.positions());
    } else {
        out.push(amp, x);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport {
    /// Maximum of `|eta|` (or `eta` in positive mode) over the box.
    pub max_certificate: f64,
    pub argmax: Point,
    /// `|eta(x_i) - sign(a_i)|` per spike.
    pub residuals: Vec<f64>,
    /// `|grad eta(x_i)|` per spike.
    pub gradient_norms: Vec<f64>,
    pub tolerance: f64,
    pub optimal: bool,
}

/// First-order optimality check of `m`: `eta_lambda` must be bounded by 1
/// and interpolate the signs of `m` on its support.
pub fn verify_optimality<K: Kernel + ?Sized>(
    problem: &BlassoProblem<'_, K>,
    m: &DiscreteMeasure,
    grid: &Grid,
    tol: f64,
) -> Result<OptimalityReport> {
    let cert = problem.certificate(m)?;
    let (argmax, mut max) = argmax_certificate(&cert, grid, problem.positive, &ArgmaxConfig::default());
    let mut residuals = Vec::with_capacity(m.len());
    let mut gradient_norms = Vec::with_capacity(m.len());
    let mut g = [0.0; 3];
    let d = problem.kernel.dim();
    for s in m.spikes() {
        let v = cert.value_grad(s.position.as_slice(), &mut g[..d]);
        residuals.push((v - s.amplitude.signum()).abs());
        gradient_norms.push(norm2(&g[..d]));
        let score = if problem.positive { v } else { v.abs() };
        max = max.max(score);
    }
    let optimal = max <= 1.0 + tol && residuals.iter().all(|r| *r <= tol);
    Ok(OptimalityReport { max_certificate: max, argmax, residuals, gradient_norms, tolerance: tol, optimal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{eval_phi, DiscreteLaplace, Gaussian1D};
    use crate::measures::Domain;

    #[test]
    fn zero_observation_stops_immediately() {
        let k = Gaussian1D::new(0.05, 100).unwrap();
        let p = BlassoProblem::new(&k, vec![0.0; 100], 0.1, true).unwrap();
        let (m, trace) = run_sfw(&p, &SfwConfig::default()).unwrap();
        assert!(m.is_empty());
        assert_eq!(trace.outer_iterations(), 0);
        assert_eq!(trace.termination, Termination::CertificateBounded);
        let (m, trace) = run_fw_reference(&p, 10, None).unwrap();
        assert!(m.is_empty() && trace.records.is_empty());
    }

    #[test]
    fn objective_examples() {
        let k = Gaussian1D::new(0.05, 100).unwrap();
        let m = DiscreteMeasure::from_parts(&[1.0, 0.5], &[Point::d1(0.3), Point::d1(0.6)]);
        let y = apply_forward(&k, &m).unwrap();
        let p = BlassoProblem::new(&k, y.clone(), 0.2, true).unwrap();
        assert!((p.objective(&DiscreteMeasure::new()).unwrap() - 0.5 * dot(&y, &y)).abs() < 1e-12);
        assert!((p.objective(&m).unwrap() - 0.3).abs() < 1e-12);
        let q = BlassoProblem::new(&k, vec![2.0 / 10.0; 100], 1.0, true).unwrap();
        assert!((q.mass_bound() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_spike_noiseless_recovery() {
        let d = Domain::new(&[0.1], &[3.0]).unwrap();
        let k = DiscreteLaplace::uniform(50, 12.0, true, d).unwrap();
        let x0 = Point::d1(0.77);
        let y: Vec<f64> = eval_phi(&k, &x0).unwrap().iter().map(|v| 2.0 * v).collect();
        let lambda = 1e-3;
        let p = BlassoProblem::new(&k, y, lambda, true).unwrap();
        let (m, trace) = run_sfw(&p, &SfwConfig::default()).unwrap();
        assert_eq!(trace.outer_iterations(), 1);
        assert_eq!(m.len(), 1);
        assert!((m.spikes()[0].position[0] - 0.77).abs() < 1e-6);
        // For a unit-norm atom the exact solution is (2 - lambda) delta_{x0}.
        assert!((m.spikes()[0].amplitude - (2.0 - lambda)).abs() < 1e-6);
        let rep = verify_optimality(&p, &m, &k.default_grid(), 1e-6).unwrap();
        assert!(rep.optimal, "{rep:?}");
    }

    #[test]
    fn free_sign_recovers_mixed_signs() {
        let k = Gaussian1D::new(0.05, 100).unwrap();
        let truth = DiscreteMeasure::from_parts(&[1.0, -0.7], &[Point::d1(0.3), Point::d1(0.65)]);
        let y = apply_forward(&k, &truth).unwrap();
        let p = BlassoProblem::new(&k, y, 1e-3, false).unwrap();
        let (m, trace) = run_sfw(&p, &SfwConfig::default()).unwrap();
        assert_eq!(trace.termination, Termination::CertificateBounded);
        assert_eq!(m.len(), 2);
        let mut amps = m.amplitudes();
        amps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(amps[0] < 0.0 && amps[1] > 0.0);
        assert!(verify_optimality(&p, &m, &k.default_grid(), 1e-6).unwrap().optimal);
    }

    #[test]
    fn perturbed_solution_is_not_optimal() {
        let k = Gaussian1D::new(0.05, 100).unwrap();
        let truth = DiscreteMeasure::from_parts(&[1.0, 0.8], &[Point::d1(0.3), Point::d1(0.6)]);
        let y = apply_forward(&k, &truth).unwrap();
        let p = BlassoProblem::new(&k, y, 1e-2, true).unwrap();
        let (m, _) = run_sfw(&p, &SfwConfig::default()).unwrap();
        let grid = k.default_grid();
        assert!(verify_optimality(&p, &m, &grid, 1e-6).unwrap().optimal);
        let mut pos = m.positions();
        pos[0].as_mut_slice()[0] += 1e-5;
        let shifted = DiscreteMeasure::from_parts(&m.amplitudes(), &pos);
        assert!(!verify_optimality(&p, &shifted, &grid, 1e-6).unwrap().optimal);
        // zero measure is optimal when the certificate is bounded by 1
        let big = BlassoProblem::new(&k, p.y.clone(), 1e3, true).unwrap();
        assert!(verify_optimality(&big, &DiscreteMeasure::new(), &grid, 1e-6).unwrap().optimal);
    }

    #[test]
    fn sfw_objective_decreases() {
        let k = Gaussian1D::new(0.05, 100).unwrap();
        let truth = DiscreteMeasure::from_parts(&[1.3, 0.8, 1.4], &[Point::d1(0.3), Point::d1(0.37), Point::d1(0.7)]);
        let y = apply_forward(&k, &truth).unwrap();
        let p = BlassoProblem::new(&k, y, 5e-3, true).unwrap();
        let (_, trace) = run_sfw(&p, &SfwConfig::default()).unwrap();
        let obj = trace.objectives();
        assert!(obj.windows(2).all(|w| w[1] < w[0]), "{obj:?}");
        for r in &trace.records {
            assert!(r.objective_after_lasso <= r.objective_before);
            assert!(r.objective <= r.objective_after_lasso + 1e-12);
        }
    }

    #[test]
    fn fw_reference_obeys_rate_bound() {
        let k = Gaussian1D::new(0.05, 100).unwrap();
        let truth = DiscreteMeasure::from_parts(&[1.0], &[Point::d1(0.5)]);
        let y = apply_forward(&k, &truth).unwrap();
        let p = BlassoProblem::new(&k, y, 0.05, true).unwrap();
        let (_, sfw) = run_sfw(&p, &SfwConfig::default()).unwrap();
        let f_star = *sfw.objectives().last().unwrap();
        let (_, trace) = run_fw_reference(&p, 200, None).unwrap();
        // curvature constant of the lifted problem: sup |phi|^2 (2M)^2
        let grid = k.default_grid();
        let phi_max = grid.points().map(|x| dot(&eval_phi(&k, &x).unwrap(), &eval_phi(&k, &x).unwrap())).fold(0.0, f64::max);
        let c = phi_max * (2.0 * p.mass_bound()).powi(2);
        for (i, f) in trace.objectives().iter().enumerate().skip(1) {
            assert!(*f >= f_star - 1e-9);
            assert!(f - f_star <= 2.0 * c / (i as f64 + 1.0), "iteration {i}");
        }
    }

}
