//! Measurement kernels `phi: X -> R^M` and the linear operators built on them.
//!
//! A kernel maps a position to its atom, the observation produced by a unit
//! Dirac mass. The forward operator of a discrete measure is the weighted sum
//! of its atoms, and the adjoint evaluated at `x` is `<phi(x), p>`.

mod gaussian;
mod laplace;
mod microscopy;
mod series;

use alloc::vec;
use alloc::vec::Vec;

pub use gaussian::Gaussian1D;
pub use laplace::{ContinuousLaplace, DiscreteLaplace};
pub use microscopy::{
    pixel_profile, Astigmatism, Detector, DoubleHelix, MaTirf, Optics, PenetrationModel, PixelProfile, AXIAL_GRID_NODES,
};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{dot, Mat};
use crate::measures::{DiscreteMeasure, Domain, Point};

/// A measurement kernel with analytic first derivatives.
///
/// The `*_into` / `*_at` methods skip domain checks; the free functions of
/// this module ([`eval_phi`], [`apply_adjoint`], ...) validate their inputs.
pub trait Kernel: Send + Sync {
    fn domain(&self) -> &Domain;

    /// Observation dimension `M`.
    fn obs_dim(&self) -> usize;

    fn dim(&self) -> usize {
        self.domain().dim()
    }

    /// Writes `phi(x)` into `out` (length `M`).
    fn phi_into(&self, x: &[f64], out: &mut [f64]);

    /// Adds `a phi(x)` to `out`.
    fn add_phi_into(&self, x: &[f64], a: f64, out: &mut [f64]) {
        let mut phi = vec![0.0; self.obs_dim()];
        self.phi_into(x, &mut phi);
        for (o, v) in out.iter_mut().zip(&phi) {
            *o += a * v;
        }
    }

    /// Writes the partial derivatives of `phi` into `out` (length `M * d`),
    /// column `j` holding `d phi / d x_j`.
    fn grad_phi_into(&self, x: &[f64], out: &mut [f64]);

    /// `<phi(x), p>`.
    fn adjoint_at(&self, p: &[f64], x: &[f64]) -> f64 {
        let mut phi = vec![0.0; self.obs_dim()];
        self.phi_into(x, &mut phi);
        dot(&phi, p)
    }

    /// `<phi(x), p>` together with its gradient in `x`.
    fn adjoint_grad_at(&self, p: &[f64], x: &[f64], grad: &mut [f64]) -> f64 {
        let m = self.obs_dim();
        let mut buf = vec![0.0; m * self.dim()];
        self.grad_phi_into(x, &mut buf);
        for (j, g) in grad.iter_mut().enumerate() {
            *g = dot(&buf[j * m..(j + 1) * m], p);
        }
        self.adjoint_at(p, x)
    }

    /// `<phi(x), p>` for every node of `grid`, in linear node order.
    fn adjoint_on_grid(&self, p: &[f64], grid: &Grid) -> Vec<f64> {
        let mut phi = vec![0.0; self.obs_dim()];
        grid.points()
            .map(|x| {
                self.phi_into(x.as_slice(), &mut phi);
                dot(&phi, p)
            })
            .collect()
    }

    /// `phi(x), phi'(x), ..., phi^(order)(x)` for one-dimensional kernels.
    fn derivatives_1d(&self, _x: f64, _order: usize) -> Result<Vec<Vec<f64>>> {
        Err(Error::Unsupported("higher-order derivatives need a 1-D kernel with analytic derivatives"))
    }

    /// Grid used to initialize the certificate argmax search.
    fn default_grid(&self) -> Grid;
}

/// All kernel variants known to the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Gaussian1D(Gaussian1D),
    Laplace(DiscreteLaplace),
    Astigmatism(Astigmatism),
    DoubleHelix(DoubleHelix),
    MaTirf(MaTirf),
}

impl KernelSpec {
    pub fn variant_name(&self) -> &'static str {
        match self {
            KernelSpec::Gaussian1D(_) => "gaussian1d",
            KernelSpec::Laplace(l) if l.normalized() => "laplace-normalized",
            KernelSpec::Laplace(_) => "laplace-unnormalized",
            KernelSpec::Astigmatism(_) => "astigmatism",
            KernelSpec::DoubleHelix(_) => "double-helix",
            KernelSpec::MaTirf(_) => "ma-tirf",
        }
    }

    fn inner(&self) -> &dyn Kernel {
        match self {
            KernelSpec::Gaussian1D(k) => k,
            KernelSpec::Laplace(k) => k,
            KernelSpec::Astigmatism(k) => k,
            KernelSpec::DoubleHelix(k) => k,
            KernelSpec::MaTirf(k) => k,
        }
    }
}

impl Kernel for KernelSpec {
    fn domain(&self) -> &Domain {
        self.inner().domain()
    }
    fn obs_dim(&self) -> usize {
        self.inner().obs_dim()
    }
    fn phi_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner().phi_into(x, out)
    }
    fn add_phi_into(&self, x: &[f64], a: f64, out: &mut [f64]) {
        self.inner().add_phi_into(x, a, out)
    }
    fn grad_phi_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner().grad_phi_into(x, out)
    }
    fn adjoint_at(&self, p: &[f64], x: &[f64]) -> f64 {
        self.inner().adjoint_at(p, x)
    }
    fn adjoint_grad_at(&self, p: &[f64], x: &[f64], grad: &mut [f64]) -> f64 {
        self.inner().adjoint_grad_at(p, x, grad)
    }
    fn adjoint_on_grid(&self, p: &[f64], grid: &Grid) -> Vec<f64> {
        self.inner().adjoint_on_grid(p, grid)
    }
    fn derivatives_1d(&self, x: f64, order: usize) -> Result<Vec<Vec<f64>>> {
        self.inner().derivatives_1d(x, order)
    }
    fn default_grid(&self) -> Grid {
        self.inner().default_grid()
    }
}

fn check_point<K: Kernel + ?Sized>(kernel: &K, x: &Point) -> Result<()> {
    if x.dim() != kernel.dim() {
        return Err(Error::Dimension { expected: kernel.dim(), found: x.dim() });
    }
    kernel.domain().check(x)
}

/// `phi(x)`.
pub fn eval_phi<K: Kernel + ?Sized>(kernel: &K, x: &Point) -> Result<Vec<f64>> {
    check_point(kernel, x)?;
    let mut out = vec![0.0; kernel.obs_dim()];
    kernel.phi_into(x.as_slice(), &mut out);
    Ok(out)
}

/// Jacobian of `phi` at `x` as an `M x d` matrix.
pub fn eval_grad_phi<K: Kernel + ?Sized>(kernel: &K, x: &Point) -> Result<Mat> {
    check_point(kernel, x)?;
    let (m, d) = (kernel.obs_dim(), kernel.dim());
    let mut buf = vec![0.0; m * d];
    kernel.grad_phi_into(x.as_slice(), &mut buf);
    Ok(Mat::from_col_major(m, d, buf))
}

/// `C(x, x') = <phi(x), phi(x')>`.
pub fn correlation<K: Kernel + ?Sized>(kernel: &K, x: &Point, xp: &Point) -> Result<f64> {
    Ok(dot(&eval_phi(kernel, x)?, &eval_phi(kernel, xp)?))
}

/// `Phi m = sum_i a_i phi(x_i)`.
pub fn apply_forward<K: Kernel + ?Sized>(kernel: &K, m: &DiscreteMeasure) -> Result<Vec<f64>> {
    let mut out = vec![0.0; kernel.obs_dim()];
    let mut phi = vec![0.0; kernel.obs_dim()];
    for s in m.spikes() {
        check_point(kernel, &s.position)?;
        kernel.phi_into(s.position.as_slice(), &mut phi);
        crate::linalg::axpy(s.amplitude, &phi, &mut out);
    }
    Ok(out)
}

/// `(Phi^* p)(x) = <phi(x), p>`.
pub fn apply_adjoint<K: Kernel + ?Sized>(kernel: &K, p: &[f64], x: &Point) -> Result<f64> {
    check_point(kernel, x)?;
    if p.len() != kernel.obs_dim() {
        return Err(Error::Dimension { expected: kernel.obs_dim(), found: p.len() });
    }
    Ok(kernel.adjoint_at(p, x.as_slice()))
}

/// Atom matrix `Phi_x` and, optionally, the derivative blocks of
/// `Gamma_x = (Phi_x, Phi_x')`.
#[derive(Debug, Clone)]
pub struct AtomMatrix {
    /// `M x N`, column `i` is `phi(x_i)`.
    pub phi: Mat,
    /// `M x (N d)`: `d` consecutive blocks of `N` columns, block `j` holding
    /// `d phi / d x_j` at every position.
    pub derivatives: Option<Mat>,
    /// Set when two positions coincide, making `Gamma_x` rank deficient.
    pub rank_warning: bool,
}

impl AtomMatrix {
    /// `Gamma_x` with the amplitude block first, then one block per axis.
    pub fn gamma(&self) -> Option<Mat> {
        let d = self.derivatives.as_ref()?;
        let m = self.phi.rows();
        let mut data = Vec::with_capacity(m * (self.phi.cols() + d.cols()));
        data.extend_from_slice(self.phi.as_slice());
        data.extend_from_slice(d.as_slice());
        Some(Mat::from_col_major(m, self.phi.cols() + d.cols(), data))
    }
}

pub fn atom_matrices<K: Kernel + ?Sized>(kernel: &K, positions: &[Point], with_derivatives: bool) -> Result<AtomMatrix> {
    let (m, d, n) = (kernel.obs_dim(), kernel.dim(), positions.len());
    let mut phi = Mat::zeros(m, n);
    for (i, x) in positions.iter().enumerate() {
        check_point(kernel, x)?;
        kernel.phi_into(x.as_slice(), phi.col_mut(i));
    }
    let derivatives = if with_derivatives {
        let mut der = Mat::zeros(m, n * d);
        let mut buf = vec![0.0; m * d];
        for (i, x) in positions.iter().enumerate() {
            kernel.grad_phi_into(x.as_slice(), &mut buf);
            for j in 0..d {
                der.col_mut(j * n + i).copy_from_slice(&buf[j * m..(j + 1) * m]);
            }
        }
        Some(der)
    } else {
        None
    };
    let rank_warning = positions.iter().enumerate().any(|(i, a)| positions[i + 1..].iter().any(|b| a == b));
    Ok(AtomMatrix { phi, derivatives, rank_warning })
}

#[cfg(test)]
mod tests;
