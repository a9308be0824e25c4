//! Inner solvers of the sliding Frank-Wolfe loop: the fixed-support LASSO,
//! the joint amplitude/position descent and the certificate argmax search.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::certificates::Field;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::{atom_matrices, Kernel};
use crate::linalg::{dot, norm2, norm_inf, power_iteration, solve_dense, Mat};
use crate::measures::{Domain, Point};

/// Sign constraint on one amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConstraint {
    Free,
    Nonnegative,
    Nonpositive,
}

impl SignConstraint {
    fn project(self, v: f64) -> f64 {
        match self {
            SignConstraint::Free => v,
            SignConstraint::Nonnegative => v.max(0.0),
            SignConstraint::Nonpositive => v.min(0.0),
        }
    }

    /// `prox` of `t |.|` restricted to the allowed half-line.
    fn shrink(self, v: f64, t: f64) -> f64 {
        let s = if v > t {
            v - t
        } else if v < -t {
            v + t
        } else {
            0.0
        };
        self.project(s)
    }

    pub fn of_sign(s: f64) -> Self {
        if s > 0.0 {
            SignConstraint::Nonnegative
        } else if s < 0.0 {
            SignConstraint::Nonpositive
        } else {
            SignConstraint::Free
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignMode {
    Free,
    Nonnegative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoConfig {
    pub max_iter: usize,
    /// Relative objective change below which FISTA stops.
    pub rel_tol: f64,
    pub sign_mode: SignMode,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self { max_iter: 20_000, rel_tol: 1e-10, sign_mode: SignMode::Nonnegative }
    }
}

impl LassoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 || !(self.rel_tol > 0.0) {
            return Err(Error::Parameter("LASSO needs max_iter >= 1 and a positive tolerance".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoResult {
    pub amplitudes: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `||Phi_x||^2` estimate: power iteration on the Gram matrix (50 steps or
/// relative change below `1e-8`), inflated by 1%.
pub fn lipschitz_from_gram(gram: &Mat) -> f64 {
    1.01 * power_iteration(gram, 50, 1e-8)
}

pub fn lipschitz_estimate<K: Kernel + ?Sized>(kernel: &K, positions: &[Point]) -> Result<f64> {
    let am = atom_matrices(kernel, positions, false)?;
    Ok(lipschitz_from_gram(&am.phi.gram()))
}

/// Fixed-support LASSO `min_a 1/2 |Phi_x a - y|^2 + lambda |a|_1`.
pub fn lasso_fixed_support<K: Kernel + ?Sized>(
    kernel: &K,
    positions: &[Point],
    y: &[f64],
    lambda: f64,
    cfg: &LassoConfig,
) -> Result<LassoResult> {
    if y.len() != kernel.obs_dim() {
        return Err(Error::Dimension { expected: kernel.obs_dim(), found: y.len() });
    }
    let am = atom_matrices(kernel, positions, false)?;
    let constraint = match cfg.sign_mode {
        SignMode::Free => SignConstraint::Free,
        SignMode::Nonnegative => SignConstraint::Nonnegative,
    };
    let signs = vec![constraint; positions.len()];
    lasso_gram(&am.phi.gram(), &am.phi.tr_mul_vec(y), dot(y, y), lambda, &signs, None, cfg)
}

/// FISTA on `1/2 a^T G a - b^T a + |y|^2 / 2 + lambda |a|_1` with per-atom
/// sign constraints, warm-started at `init` when given.
///
/// Momentum is reset whenever the objective would increase, so the accepted
/// objective sequence is non-increasing.
pub fn lasso_gram(
    gram: &Mat,
    b: &[f64],
    y_norm2: f64,
    lambda: f64,
    signs: &[SignConstraint],
    init: Option<&[f64]>,
    cfg: &LassoConfig,
) -> Result<LassoResult> {
    cfg.validate()?;
    if !(lambda > 0.0) {
        return Err(Error::Parameter("lambda must be positive".into()));
    }
    let n = b.len();
    if n == 0 {
        return Ok(LassoResult { amplitudes: vec![], objective: 0.5 * y_norm2, iterations: 0, converged: true });
    }
    let objective = |a: &[f64]| -> f64 {
        let ga = gram.mul_vec(a);
        0.5 * dot(a, &ga) - dot(b, a) + 0.5 * y_norm2 + lambda * a.iter().map(|v| v.abs()).sum::<f64>()
    };
    let prox_step = |z: &[f64], l: f64| -> Vec<f64> {
        let g = gram.mul_vec(z);
        (0..n).map(|i| signs[i].shrink(z[i] - (g[i] - b[i]) / l, lambda / l)).collect()
    };
    let mut l = lipschitz_from_gram(gram).max(f64::MIN_POSITIVE);
    let mut x: Vec<f64> = match init {
        Some(a) => a.iter().zip(signs).map(|(v, s)| s.project(*v)).collect(),
        None => vec![0.0; n],
    };
    let mut fx = objective(&x);
    let mut yk = x.clone();
    let mut t = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let mut z = prox_step(&yk, l);
        let mut fz = objective(&z);
        let mut restarted = false;
        if fz > fx {
            // Restart from the current iterate; grow L if even the plain
            // proximal step fails to decrease.
            restarted = true;
            t = 1.0;
            loop {
                z = prox_step(&x, l);
                fz = objective(&z);
                if fz <= fx + 1e-15 * fx.abs() || l > 1e300 {
                    break;
                }
                l *= 2.0;
            }
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let step: Vec<f64> = z.iter().zip(&x).map(|(a, b)| a - b).collect();
        let decrease = fx - fz;
        if restarted {
            yk = z.clone();
        } else {
            let beta = (t - 1.0) / t_next;
            yk = z.iter().zip(&step).map(|(zi, si)| zi + beta * si).collect();
        }
        t = t_next;
        let small_change = decrease <= cfg.rel_tol * (1.0 + fz.abs());
        let small_step = norm2(&step) <= cfg.rel_tol * (1.0 + norm2(&z));
        x = z;
        fx = fz.min(fx);
        if small_change && small_step {
            converged = true;
            break;
        }
    }
    Ok(LassoResult { amplitudes: x, objective: fx, iterations, converged })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentConfig {
    pub max_iter: usize,
    /// Stop when `|projected gradient|_inf <= grad_tol (1 + |f|)`.
    pub grad_tol: f64,
    /// Number of stored quasi-Newton pairs.
    pub memory: usize,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self { max_iter: 500, grad_tol: 1e-9, memory: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescentStatus {
    Converged,
    IterationCap,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentResult {
    pub amplitudes: Vec<f64>,
    pub positions: Vec<Point>,
    pub objective: f64,
    pub initial_objective: f64,
    /// Objective at every accepted iterate, starting with the initialization.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub status: DescentStatus,
}

/// Smooth objective of the joint problem with fixed signs:
/// `1/2 |Phi_x a - y|^2 + lambda sum_i s_i a_i`, with the gradient in
/// `(a, x)` ordered as all amplitudes, then the positions spike by spike.
struct JointObjective<'a, K: Kernel + ?Sized> {
    kernel: &'a K,
    y: &'a [f64],
    lambda: f64,
    signs: &'a [f64],
    n: usize,
    d: usize,
}

impl<K: Kernel + ?Sized> JointObjective<'_, K> {
    fn eval(&self, z: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let (n, d) = (self.n, self.d);
        let mut r: Vec<f64> = self.y.iter().map(|v| -v).collect();
        for i in 0..n {
            self.kernel.add_phi_into(&z[n + i * d..n + (i + 1) * d], z[i], &mut r);
        }
        let f = 0.5 * dot(&r, &r) + self.lambda * (0..n).map(|i| self.signs[i] * z[i]).sum::<f64>();
        if let Some(g) = grad {
            let mut gx = [0.0; 3];
            for i in 0..n {
                let v = self.kernel.adjoint_grad_at(&r, &z[n + i * d..n + (i + 1) * d], &mut gx[..d]);
                g[i] = v + self.lambda * self.signs[i];
                for j in 0..d {
                    g[n + i * d + j] = z[i] * gx[j];
                }
            }
        }
        f
    }
}

struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Bounds {
    fn project(&self, z: &mut [f64]) {
        for ((v, l), h) in z.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.max(*l).min(*h);
        }
    }

    /// Gradient with components zeroed where a bound blocks descent.
    fn projected_gradient(&self, z: &[f64], g: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(g)
            .enumerate()
            .map(|(i, (v, gi))| {
                if (*v <= self.lo[i] && *gi > 0.0) || (*v >= self.hi[i] && *gi < 0.0) {
                    0.0
                } else {
                    *gi
                }
            })
            .collect()
    }
}

/// Joint non-convex descent on `(a, x)` by projected limited-memory BFGS,
/// finished by a few Newton steps on the free variables.
///
/// Amplitudes keep the signs of `a0` (the half-line bounds) and positions
/// stay in the kernel's domain box. The objective never increases (up to a
/// few ulps in the final Newton steps); on line-search failure the best
/// iterate is returned with a flag.
pub fn local_descent<K: Kernel + ?Sized>(
    kernel: &K,
    a0: &[f64],
    x0: &[Point],
    y: &[f64],
    lambda: f64,
    cfg: &DescentConfig,
) -> Result<DescentResult> {
    if a0.len() != x0.len() {
        return Err(Error::Dimension { expected: a0.len(), found: x0.len() });
    }
    if y.len() != kernel.obs_dim() {
        return Err(Error::Dimension { expected: kernel.obs_dim(), found: y.len() });
    }
    if !(lambda > 0.0) {
        return Err(Error::Parameter("lambda must be positive".into()));
    }
    if a0.contains(&0.0) {
        return Err(Error::Parameter("zero amplitudes must be pruned before the descent".into()));
    }
    for x in x0 {
        if x.dim() != kernel.dim() {
            return Err(Error::Dimension { expected: kernel.dim(), found: x.dim() });
        }
        kernel.domain().check(x)?;
    }
    let n = a0.len();
    let d = kernel.dim();
    let signs: Vec<f64> = a0.iter().map(|a| a.signum()).collect();
    let obj = JointObjective { kernel, y, lambda, signs: &signs, n, d };
    let bounds = joint_bounds(kernel.domain(), &signs);
    let mut z: Vec<f64> = a0.to_vec();
    for x in x0 {
        z.extend_from_slice(x.as_slice());
    }
    let dim = z.len();
    let mut g = vec![0.0; dim];
    let mut f = obj.eval(&z, Some(&mut g));
    let initial = f;
    let mut trace = vec![f];
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut status = DescentStatus::IterationCap;
    let mut iterations = 0;
    let mut g_new = vec![0.0; dim];
    while iterations < cfg.max_iter {
        let pg = bounds.projected_gradient(&z, &g);
        if norm_inf(&pg) <= cfg.grad_tol * (1.0 + f.abs()) {
            status = DescentStatus::Converged;
            break;
        }
        iterations += 1;
        let free: Vec<bool> = pg.iter().zip(&g).map(|(p, gi)| *p != 0.0 || *gi == 0.0).collect();
        let mut dir = two_loop(&pg, &s_hist, &y_hist, &free);
        if !(dot(&dir, &pg) < 0.0) {
            dir = pg.iter().map(|v| -v).collect();
            s_hist.clear();
            y_hist.clear();
        }
        let mut t = if s_hist.is_empty() { (1.0 / norm_inf(&dir)).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let mut cand: Vec<f64> = z.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            bounds.project(&mut cand);
            let moved: Vec<f64> = cand.iter().zip(&z).map(|(a, b)| a - b).collect();
            let pred = dot(&g, &moved);
            let fc = obj.eval(&cand, None);
            if pred < 0.0 && fc <= f + 1e-4 * pred {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            status = DescentStatus::LineSearchFailed;
            break;
        };
        obj.eval(&cand, Some(&mut g_new));
        let s: Vec<f64> = cand.iter().zip(&z).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-10 * norm2(&s) * norm2(&yv) && sy > 0.0 {
            if s_hist.len() == cfg.memory {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(yv);
        }
        let improvement = f - fc;
        z = cand;
        f = fc;
        core::mem::swap(&mut g, &mut g_new);
        trace.push(f);
        if improvement <= 1e-16 * f.abs().max(1e-300) && norm_inf(&bounds.projected_gradient(&z, &g)) <= cfg.grad_tol.sqrt() * (1.0 + f.abs()) {
            // Stalled at machine precision close to a stationary point.
            status = DescentStatus::Converged;
            break;
        }
    }
    newton_polish(&obj, &bounds, &mut z, &mut f, &mut g, &mut trace);
    let amplitudes = z[..n].to_vec();
    let positions = (0..n).map(|i| Point::new(&z[n + i * d..n + (i + 1) * d])).collect();
    Ok(DescentResult { amplitudes, positions, objective: f, initial_objective: initial, trace, iterations, status })
}

/// Newton iterations on the stationarity equations of the free variables,
/// with the Hessian from central differences of the analytic gradient.
///
/// Close to a minimizer the objective decrease drops below its rounding
/// level while the gradient is still resolved, so steps are accepted when the
/// projected gradient shrinks and the objective does not increase beyond a
/// few ulps.
fn newton_polish<K: Kernel + ?Sized>(
    obj: &JointObjective<'_, K>,
    bounds: &Bounds,
    z: &mut Vec<f64>,
    f: &mut f64,
    g: &mut Vec<f64>,
    trace: &mut Vec<f64>,
) {
    const MAX_STEPS: usize = 8;
    const FD_STEP: f64 = 1e-6;
    let dim = z.len();
    let mut gp = vec![0.0; dim];
    let mut gm = vec![0.0; dim];
    for _ in 0..MAX_STEPS {
        let pg = bounds.projected_gradient(z, g);
        let pg_norm = norm2(&pg);
        if pg_norm == 0.0 {
            return;
        }
        let free: Vec<usize> = (0..dim).filter(|&i| pg[i] != 0.0 || g[i] == 0.0).collect();
        let nf = free.len();
        let mut h = Mat::zeros(nf, nf);
        for (c, &j) in free.iter().enumerate() {
            let step = FD_STEP * z[j].abs().max(1.0);
            let mut zp = z.clone();
            zp[j] += step;
            obj.eval(&zp, Some(&mut gp));
            let mut zm = z.clone();
            zm[j] -= step;
            obj.eval(&zm, Some(&mut gm));
            for (r, &i) in free.iter().enumerate() {
                h[(r, c)] = (gp[i] - gm[i]) / (2.0 * step);
            }
        }
        for r in 0..nf {
            for c in 0..r {
                let v = 0.5 * (h[(r, c)] + h[(c, r)]);
                h[(r, c)] = v;
                h[(c, r)] = v;
            }
        }
        let rhs: Vec<f64> = free.iter().map(|&i| -pg[i]).collect();
        let Some(step) = solve_dense(&h, &rhs) else { return };
        if !(dot(&step, &rhs) > 0.0) {
            return;
        }
        let mut cand = z.clone();
        for (k, &i) in free.iter().enumerate() {
            cand[i] += step[k];
        }
        bounds.project(&mut cand);
        let mut gc = vec![0.0; dim];
        let fc = obj.eval(&cand, Some(&mut gc));
        let pgc = norm2(&bounds.projected_gradient(&cand, &gc));
        if !(pgc < pg_norm && fc <= *f + 4.0 * f64::EPSILON * f.abs()) {
            return;
        }
        *z = cand;
        *g = gc;
        *f = fc;
        trace.push(*f);
    }
}

fn joint_bounds(domain: &Domain, signs: &[f64]) -> Bounds {
    let n = signs.len();
    let d = domain.dim();
    let mut lo = Vec::with_capacity(n * (d + 1));
    let mut hi = Vec::with_capacity(n * (d + 1));
    for s in signs {
        if *s > 0.0 {
            lo.push(0.0);
            hi.push(f64::INFINITY);
        } else {
            lo.push(f64::NEG_INFINITY);
            hi.push(0.0);
        }
    }
    for _ in 0..n {
        lo.extend_from_slice(domain.lo());
        hi.extend_from_slice(domain.hi());
    }
    Bounds { lo, hi }
}

/// L-BFGS two-loop recursion restricted to the free variables.
fn two_loop(g: &[f64], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>], free: &[bool]) -> Vec<f64> {
    let mask = |v: &[f64]| -> Vec<f64> { v.iter().zip(free).map(|(a, f)| if *f { *a } else { 0.0 }).collect() };
    let mut q = mask(g);
    let k = s_hist.len();
    let mut alpha = vec![0.0; k];
    let mut rho = vec![0.0; k];
    let ss: Vec<Vec<f64>> = s_hist.iter().map(|s| mask(s)).collect();
    let ys: Vec<Vec<f64>> = y_hist.iter().map(|y| mask(y)).collect();
    for i in (0..k).rev() {
        let sy = dot(&ss[i], &ys[i]);
        if sy <= 0.0 {
            continue;
        }
        rho[i] = 1.0 / sy;
        alpha[i] = rho[i] * dot(&ss[i], &q);
        crate::linalg::axpy(-alpha[i], &ys[i], &mut q);
    }
    if let Some(i) = (0..k).rev().find(|&i| rho[i] > 0.0) {
        let gamma = dot(&ss[i], &ys[i]) / dot(&ys[i], &ys[i]);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for i in 0..k {
        if rho[i] == 0.0 {
            continue;
        }
        let beta = rho[i] * dot(&ys[i], &q);
        crate::linalg::axpy(alpha[i] - beta, &ss[i], &mut q);
    }
    let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
    for (v, f) in dir.iter_mut().zip(free) {
        if !*f {
            *v = 0.0;
        }
    }
    dir
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgmaxConfig {
    pub max_iter: usize,
    /// Step of the finite-difference Hessian, relative to the grid step.
    pub fd_rel_step: f64,
}

impl Default for ArgmaxConfig {
    fn default() -> Self {
        Self { max_iter: 50, fd_rel_step: 1e-3 }
    }
}

/// Maximizer of `|eta|` (or `eta` when `positive_only`) over the box:
/// best node of `grid` (lowest index on ties), refined by projected Newton
/// ascent with a finite-difference Hessian, falling back to projected
/// gradient ascent. Only improving steps are taken.
pub fn argmax_certificate(field: &dyn Field, grid: &Grid, positive_only: bool, cfg: &ArgmaxConfig) -> (Point, f64) {
    let values = field.values_on_grid(grid);
    let score = |v: f64| if positive_only { v } else { v.abs() };
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if score(*v) > score(values[best]) {
            best = i;
        }
    }
    let start = grid.point(best);
    let v0 = values[best];
    if v0 == 0.0 {
        return (start, score(v0));
    }
    let sign = if positive_only { 1.0 } else { v0.signum() };
    let steps = grid.steps();
    let (x, v) = refine_max(field, start, sign, &steps, cfg);
    (x, score(v).max(score(v0)))
}

/// Convenience wrapper on an inclusive grid with `per_axis` nodes per axis.
pub fn argmax_with_density(field: &dyn Field, per_axis: usize, positive_only: bool) -> (Point, f64) {
    let d = field.domain();
    let grid = Grid::inclusive(d, &vec![per_axis.max(2); d.dim()]);
    argmax_certificate(field, &grid, positive_only, &ArgmaxConfig::default())
}

fn refine_max(field: &dyn Field, start: Point, sign: f64, steps: &[f64], cfg: &ArgmaxConfig) -> (Point, f64) {
    let domain = field.domain();
    let d = domain.dim();
    let scale: Vec<f64> = (0..d)
        .map(|j| if steps[j] > 0.0 { steps[j] } else { 1e-3 * (domain.hi()[j] - domain.lo()[j]) })
        .collect();
    let mut x = start;
    let mut g = [0.0; 3];
    let mut fx = sign * field.value_grad(x.as_slice(), &mut g[..d]);
    for _ in 0..cfg.max_iter {
        let grad: Vec<f64> = g[..d].iter().map(|v| sign * v).collect();
        let hess = fd_hessian_from_gradient(field, &x, sign, &scale, cfg.fd_rel_step);
        let mut improved = false;
        if let Some(step) = newton_step(&hess, &grad) {
            let mut t = 1.0;
            for _ in 0..20 {
                let mut cand = x;
                for j in 0..d {
                    cand.as_mut_slice()[j] += t * step[j];
                }
                domain.clamp(cand.as_mut_slice());
                let fc = sign * field.value(cand.as_slice());
                if fc > fx {
                    x = cand;
                    fx = fc;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
        }
        if !improved {
            // Projected gradient ascent, initial move of one grid step.
            let gn = norm2(&grad.iter().zip(&scale).map(|(a, s)| a * s).collect::<Vec<_>>());
            if gn > 0.0 {
                let mut t = 1.0 / gn;
                for _ in 0..60 {
                    let mut cand = x;
                    for j in 0..d {
                        cand.as_mut_slice()[j] += t * grad[j] * scale[j] * scale[j];
                    }
                    domain.clamp(cand.as_mut_slice());
                    let fc = sign * field.value(cand.as_slice());
                    if fc > fx {
                        x = cand;
                        fx = fc;
                        improved = true;
                        break;
                    }
                    t *= 0.5;
                }
            }
        }
        if !improved {
            break;
        }
        let f_new = sign * field.value_grad(x.as_slice(), &mut g[..d]);
        fx = f_new;
    }
    (x, sign * fx)
}

fn fd_hessian_from_gradient(field: &dyn Field, x: &Point, sign: f64, scale: &[f64], rel: f64) -> Mat {
    let d = x.dim();
    let mut h = Mat::zeros(d, d);
    let mut gp = [0.0; 3];
    let mut gm = [0.0; 3];
    for j in 0..d {
        let step = rel * scale[j];
        let (mut xp, mut xm) = (*x, *x);
        xp.as_mut_slice()[j] += step;
        xm.as_mut_slice()[j] -= step;
        field.value_grad(xp.as_slice(), &mut gp[..d]);
        field.value_grad(xm.as_slice(), &mut gm[..d]);
        for i in 0..d {
            h[(i, j)] = sign * (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    for i in 0..d {
        for j in i + 1..d {
            let v = 0.5 * (h[(i, j)] + h[(j, i)]);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// `-H^{-1} g` when `H` is negative definite, else `None`.
fn newton_step(h: &Mat, g: &[f64]) -> Option<Vec<f64>> {
    let d = g.len();
    // Cholesky of -H.
    let mut l = Mat::zeros(d, d);
    for j in 0..d {
        let mut s = -h[(j, j)];
        for k in 0..j {
            s -= l[(j, k)] * l[(j, k)];
        }
        if !(s > 0.0) {
            return None;
        }
        l[(j, j)] = s.sqrt();
        for i in j + 1..d {
            let mut s = -h[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / l[(j, j)];
        }
    }
    // (-H) step = g
    let mut z = g.to_vec();
    for i in 0..d {
        for k in 0..i {
            z[i] -= l[(i, k)] * z[k];
        }
        z[i] /= l[(i, i)];
    }
    for i in (0..d).rev() {
        for k in i + 1..d {
            z[i] -= l[(k, i)] * z[k];
        }
        z[i] /= l[(i, i)];
    }
    Some(z)
}
