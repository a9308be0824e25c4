//! Dual certificates and precertificates.
//!
//! A certificate is the function `eta = Phi^* p` for some `p` in observation
//! space. `eta_lambda` comes from a residual, `eta_V` interpolates the signs
//! of a measure with vanishing gradients, and `eta_W` interpolates 1 at a
//! cluster point with `2N - 1` vanishing derivatives.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::{apply_adjoint, atom_matrices, ContinuousLaplace, Kernel};
use crate::linalg::{min_norm_solve, norm2, solve_spd_equilibrated, Mat};
use crate::measures::{DiscreteMeasure, Domain, Point};

/// Largest condition number accepted for `Gamma_x`, `F_k` and Gram solves.
pub const MAX_CONDITION: f64 = 1e12;

/// Scalar field over a box with gradient access, as needed by the argmax
/// search and the nondegeneracy checks.
pub trait Field {
    fn domain(&self) -> &Domain;

    fn value(&self, x: &[f64]) -> f64;

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;

    fn values_on_grid(&self, grid: &Grid) -> Vec<f64> {
        grid.points().map(|x| self.value(x.as_slice())).collect()
    }

    /// Grid that resolves the field's features.
    fn default_grid(&self) -> Grid;

    /// For `eta_W` fields: `(x_c, 2N, eta^(2N)(x_c))`.
    fn top_derivative(&self) -> Option<(f64, usize, f64)> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    EtaLambda,
    EtaV,
    EtaW,
}

/// `eta(x) = <phi(x), p>` for a fixed `p`.
#[derive(Debug, Clone)]
pub struct Certificate<'k, K: Kernel + ?Sized> {
    kernel: &'k K,
    p: Vec<f64>,
    kind: CertificateKind,
    /// Condition number of the interpolation system, when one was solved.
    condition: Option<f64>,
    /// Cluster point and order `N` for `eta_W`.
    cluster: Option<(f64, usize)>,
}

impl<'k, K: Kernel + ?Sized> Certificate<'k, K> {
    pub fn from_coefficients(kernel: &'k K, p: Vec<f64>, kind: CertificateKind) -> Result<Self> {
        if p.len() != kernel.obs_dim() {
            return Err(Error::Dimension { expected: kernel.obs_dim(), found: p.len() });
        }
        Ok(Self { kernel, p, kind, condition: None, cluster: None })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.p
    }

    pub fn kind(&self) -> CertificateKind {
        self.kind
    }

    pub fn condition(&self) -> Option<f64> {
        self.condition
    }

    pub fn kernel(&self) -> &'k K {
        self.kernel
    }

    /// `eta(x)`, with domain checks.
    pub fn eval(&self, x: &Point) -> Result<f64> {
        apply_adjoint(self.kernel, &self.p, x)
    }

    /// `grad eta(x)`, with domain checks.
    pub fn gradient(&self, x: &Point) -> Result<Vec<f64>> {
        self.kernel.domain().check(x)?;
        let mut g = vec![0.0; x.dim()];
        self.kernel.adjoint_grad_at(&self.p, x.as_slice(), &mut g);
        Ok(g)
    }
}

impl<K: Kernel + ?Sized> Field for Certificate<'_, K> {
    fn domain(&self) -> &Domain {
        self.kernel.domain()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.kernel.adjoint_at(&self.p, x)
    }
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.kernel.adjoint_grad_at(&self.p, x, grad)
    }
    fn values_on_grid(&self, grid: &Grid) -> Vec<f64> {
        self.kernel.adjoint_on_grid(&self.p, grid)
    }
    fn default_grid(&self) -> Grid {
        self.kernel.default_grid()
    }
    fn top_derivative(&self) -> Option<(f64, usize, f64)> {
        let (xc, n) = self.cluster?;
        let d = self.kernel.derivatives_1d(xc, 2 * n).ok()?;
        Some((xc, 2 * n, crate::linalg::dot(&d[2 * n], &self.p)))
    }
}

/// `eta_lambda = Phi^*(y - Phi m) / lambda`.
pub fn eta_lambda<'k, K: Kernel + ?Sized>(
    kernel: &'k K,
    y: &[f64],
    lambda: f64,
    m: &DiscreteMeasure,
) -> Result<Certificate<'k, K>> {
    if !(lambda > 0.0) {
        return Err(Error::Parameter("lambda must be positive".into()));
    }
    if y.len() != kernel.obs_dim() {
        return Err(Error::Dimension { expected: kernel.obs_dim(), found: y.len() });
    }
    let fwd = crate::kernels::apply_forward(kernel, m)?;
    let p = y.iter().zip(&fwd).map(|(a, b)| (a - b) / lambda).collect();
    Certificate::from_coefficients(kernel, p, CertificateKind::EtaLambda)
}

/// Minimum-norm `p` with `A^T p = c`, after scaling the columns of `A` to unit
/// norm (which leaves `p` unchanged and makes the condition number meaningful
/// when columns have different units).
fn equilibrated_min_norm(a: &Mat, c: &[f64], max_condition: f64) -> Result<(Vec<f64>, f64)> {
    let mut cols = Vec::with_capacity(a.cols());
    let mut rhs = Vec::with_capacity(a.cols());
    for j in 0..a.cols() {
        let n = norm2(a.col(j));
        if n == 0.0 {
            return Err(Error::RankDeficient { condition: f64::INFINITY });
        }
        cols.push(a.col(j).iter().map(|v| v / n).collect::<Vec<_>>());
        rhs.push(c[j] / n);
    }
    min_norm_solve(&Mat::from_columns(a.rows(), &cols), &rhs, max_condition)
}

/// Vanishing derivatives precertificate of `m0`: the minimum-norm `p` with
/// `eta(x_i) = sign(a_i)` and `grad eta(x_i) = 0`.
pub fn eta_v<'k, K: Kernel + ?Sized>(kernel: &'k K, m0: &DiscreteMeasure) -> Result<Certificate<'k, K>> {
    if m0.is_empty() {
        return Err(Error::Parameter("eta_V needs a nonempty measure".into()));
    }
    let positions = m0.positions();
    let am = atom_matrices(kernel, &positions, true)?;
    let gamma = am.gamma().expect("derivatives requested");
    let mut c = vec![0.0; gamma.cols()];
    for (ci, a) in c.iter_mut().zip(m0.amplitudes()) {
        *ci = a.signum();
    }
    let (p, condition) = equilibrated_min_norm(&gamma, &c, MAX_CONDITION)?;
    let mut cert = Certificate::from_coefficients(kernel, p, CertificateKind::EtaV)?;
    cert.condition = Some(condition);
    Ok(cert)
}

/// `F_k = (phi(x_c), phi'(x_c), ..., phi^(k)(x_c))`.
#[derive(Debug, Clone)]
pub struct DerivativeStack {
    pub f: Mat,
    pub x_c: f64,
}

impl DerivativeStack {
    pub fn new<K: Kernel + ?Sized>(kernel: &K, x_c: f64, k: usize) -> Result<Self> {
        if kernel.dim() != 1 {
            return Err(Error::Unsupported("derivative stacks need a 1-D kernel"));
        }
        kernel.domain().check(&Point::d1(x_c))?;
        let cols = kernel.derivatives_1d(x_c, k)?;
        Ok(Self { f: Mat::from_columns(kernel.obs_dim(), &cols), x_c })
    }

    /// Condition number after column equilibration.
    pub fn condition(&self) -> f64 {
        let cols: Vec<Vec<f64>> = (0..self.f.cols())
            .map(|j| {
                let n = norm2(self.f.col(j));
                self.f.col(j).iter().map(|v| v / n).collect()
            })
            .collect();
        crate::linalg::condition_number(&Mat::from_columns(self.f.rows(), &cols))
    }
}

/// `2N - 1` vanishing derivatives precertificate at `x_c`: the minimum-norm
/// `p` with `F_{2N-1}^T p = (1, 0, ..., 0)`.
pub fn eta_w<'k, K: Kernel + ?Sized>(kernel: &'k K, x_c: f64, n: usize) -> Result<Certificate<'k, K>> {
    eta_w_with_threshold(kernel, x_c, n, MAX_CONDITION)
}

pub fn eta_w_with_threshold<'k, K: Kernel + ?Sized>(
    kernel: &'k K,
    x_c: f64,
    n: usize,
    max_condition: f64,
) -> Result<Certificate<'k, K>> {
    if n == 0 {
        return Err(Error::Parameter("eta_W needs N >= 1".into()));
    }
    let stack = DerivativeStack::new(kernel, x_c, 2 * n - 1)?;
    if stack.f.rows() < 2 * n {
        return Err(Error::RankDeficient { condition: f64::INFINITY });
    }
    let mut delta = vec![0.0; 2 * n];
    delta[0] = 1.0;
    let (p, condition) = equilibrated_min_norm(&stack.f, &delta, max_condition)?;
    let mut cert = Certificate::from_coefficients(kernel, p, CertificateKind::EtaW)?;
    cert.condition = Some(condition);
    cert.cluster = Some((x_c, n));
    Ok(cert)
}

/// `eta_W` for the continuous Laplace transform, built from the correlation
/// `eta(x) = sum_j alpha_j d_2^j C(x, x_c)` with
/// `alpha = (F^* F)^{-1} (1, 0, ..., 0)` and `(F^* F)_{ij} = d_1^i d_2^j C(x_c, x_c)`.
#[derive(Debug, Clone)]
pub struct CorrelationCertificate {
    kernel: ContinuousLaplace,
    alpha: Vec<f64>,
    x_c: f64,
    domain: Domain,
    condition: f64,
}

impl CorrelationCertificate {
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// `eta^(k)(x)`.
    pub fn derivative(&self, x: f64, k: usize) -> f64 {
        self.alpha.iter().enumerate().map(|(j, a)| a * self.kernel.cross_derivative(k, j, x, self.x_c)).sum()
    }
}

impl Field for CorrelationCertificate {
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.derivative(x[0], 0)
    }
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad[0] = self.derivative(x[0], 1);
        self.derivative(x[0], 0)
    }
    fn default_grid(&self) -> Grid {
        Grid::inclusive(&self.domain, &[2048])
    }
    fn top_derivative(&self) -> Option<(f64, usize, f64)> {
        Some((self.x_c, self.alpha.len(), self.derivative(self.x_c, self.alpha.len())))
    }
}

/// Continuous-Laplace `eta_W` over `domain` (which must lie in `(0, inf)`).
pub fn eta_w_continuous(x_c: f64, n: usize, normalized: bool, domain: Domain) -> Result<CorrelationCertificate> {
    if n == 0 {
        return Err(Error::Parameter("eta_W needs N >= 1".into()));
    }
    if !(x_c > 0.0) || domain.dim() != 1 || !(domain.lo()[0] > 0.0) {
        return Err(Error::Domain { point: [x_c, 0.0, 0.0] });
    }
    let kernel = ContinuousLaplace::new(normalized);
    let k = 2 * n;
    let mut gram = Mat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            gram[(i, j)] = kernel.cross_derivative(i, j, x_c, x_c);
        }
    }
    let mut delta = vec![0.0; k];
    delta[0] = 1.0;
    let (alpha, condition) = solve_spd_equilibrated(&gram, &delta, MAX_CONDITION * MAX_CONDITION)?;
    Ok(CorrelationCertificate { kernel, alpha, x_c, domain, condition })
}

/// Closed-form `eta_W` of the continuous Laplace transform:
/// `1 - ((x - x_c) / (x + x_c))^(2N)` (unnormalized) and
/// `2 sqrt(x x_c) / (x + x_c) sum_{k<N} (2k)! / (2^(2k) (k!)^2) ((x - x_c) / (x + x_c))^(2k)`
/// (L2-normalized).
pub fn closed_form_eta_w_laplace(x: f64, x_c: f64, n: usize, normalized: bool) -> Result<f64> {
    if !(x > 0.0 && x_c > 0.0) {
        return Err(Error::Domain { point: [x, x_c, 0.0] });
    }
    if n == 0 {
        return Err(Error::Parameter("eta_W needs N >= 1".into()));
    }
    let t = (x - x_c) / (x + x_c);
    let t2 = t * t;
    if !normalized {
        return Ok(1.0 - t2.powi(n as i32));
    }
    let mut coeff = 1.0;
    let mut power = 1.0;
    let mut sum = 0.0;
    for k in 0..n {
        sum += coeff * power;
        // (2k+2)! / (2^(2k+2) ((k+1)!)^2) = coeff * (2k+1)(2k+2) / (4 (k+1)^2)
        coeff *= (2 * k + 1) as f64 / (2 * k + 2) as f64;
        power *= t2;
    }
    Ok(2.0 * (x * x_c).sqrt() / (x + x_c) * sum)
}

/// Tolerances of [`check_nondegeneracy`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NondegeneracyTolerances {
    /// Required gap `1 - max |eta|` off the support.
    pub margin: f64,
    /// Smallest accepted `|det D^2 eta|` at a spike.
    pub det_floor: f64,
    /// Exclusion radius, in grid steps, around each spike.
    pub exclusion_steps: f64,
    /// Step of the central second differences.
    pub fd_step: f64,
}

impl Default for NondegeneracyTolerances {
    fn default() -> Self {
        Self { margin: 1e-6, det_floor: 1e-8, exclusion_steps: 2.0, fd_step: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NondegeneracyReport {
    /// `max |eta|` over grid nodes outside the exclusion balls.
    pub max_off_support: f64,
    pub exclusion_radius: f64,
    pub hessian_determinants: Vec<f64>,
    /// `eta^(2N)(x_c)` for `eta_W` fields.
    pub top_derivative: Option<f64>,
    pub tolerances: NondegeneracyTolerances,
    pub nondegenerate: bool,
}

/// Hessian of `f` at `x` by central second differences.
pub fn fd_hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Mat {
    let d = x.len();
    let mut hess = Mat::zeros(d, d);
    let f0 = f(x);
    let mut y = [0.0; 3];
    let mut at = |shifts: &[(usize, f64)]| {
        y[..d].copy_from_slice(x);
        for &(j, s) in shifts {
            y[j] += s;
        }
        f(&y[..d])
    };
    for j in 0..d {
        hess[(j, j)] = (at(&[(j, h)]) - 2.0 * f0 + at(&[(j, -h)])) / (h * h);
        for k in j + 1..d {
            let v = (at(&[(j, h), (k, h)]) - at(&[(j, h), (k, -h)]) - at(&[(j, -h), (k, h)])
                + at(&[(j, -h), (k, -h)]))
                / (4.0 * h * h);
            hess[(j, k)] = v;
            hess[(k, j)] = v;
        }
    }
    hess
}

/// Determinant of a matrix of size at most 3.
pub fn small_det(m: &Mat) -> f64 {
    match m.rows() {
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        }
        _ => panic!("small_det supports sizes 1 to 3"),
    }
}

/// Numerical nondegeneracy of a certificate with respect to `spikes`:
/// `max |eta| < 1 - margin` on a `grid_density`-per-axis grid away from the
/// spikes, and nonsingular curvature at each spike (for `eta_W`, a strictly
/// negative `2N`-th derivative at the cluster point instead, with the
/// exclusion ball widened to where that derivative alone keeps `1 - eta`
/// below twice the margin).
pub fn check_nondegeneracy(
    field: &dyn Field,
    spikes: &[Point],
    grid_density: usize,
    tol: NondegeneracyTolerances,
) -> NondegeneracyReport {
    let domain = field.domain();
    let grid = Grid::inclusive(domain, &vec![grid_density.max(2); domain.dim()]);
    let step = grid.steps().iter().fold(0.0f64, |m, s| m.max(*s));
    let top = field.top_derivative();
    let mut radius = tol.exclusion_steps * step;
    if let Some((_, order, v)) = top {
        // 1 - eta ~ |v| t^2N / (2N)! reaches the margin at ((2N)! margin / |v|)^(1/2N)
        if v < 0.0 {
            let fact: f64 = (1..=order).map(|i| i as f64).product();
            radius = radius.max(2.0 * (fact * tol.margin / -v).powf(1.0 / order as f64));
        }
    }
    let values = field.values_on_grid(&grid);
    let mut max_off = 0.0f64;
    for (i, v) in values.iter().enumerate() {
        let x = grid.point(i);
        if spikes.iter().all(|s| s.distance(&x) > radius) {
            max_off = max_off.max(v.abs());
        }
    }
    let f = |x: &[f64]| field.value(x);
    let dets: Vec<f64> =
        spikes.iter().map(|s| small_det(&fd_hessian(&f, s.as_slice(), tol.fd_step))).collect();
    let top = top.map(|(_, _, v)| v);
    let curvature_ok = match top {
        Some(v) => v < -tol.det_floor,
        None => dets.iter().all(|d| d.abs() > tol.det_floor),
    };
    NondegeneracyReport {
        max_off_support: max_off,
        exclusion_radius: radius,
        hessian_determinants: dets,
        top_derivative: top,
        tolerances: tol,
        nondegenerate: max_off < 1.0 - tol.margin && curvature_ok,
    }
}
