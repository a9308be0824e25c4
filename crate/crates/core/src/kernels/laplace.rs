use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{series, Kernel};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::measures::Domain;

/// Laplace kernel sampled at `s_0 < ... < s_{K-1}`:
/// `phi_k(x) = xi(x) sqrt(w_k) exp(-s_k x)`, where `xi = 1` (unnormalized)
/// or `xi(x) = (sum_k w_k exp(-2 s_k x))^{-1/2}` so that `|phi(x)| = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaplace {
    samples: Vec<f64>,
    sqrt_weights: Vec<f64>,
    normalized: bool,
    domain: Domain,
}

impl DiscreteLaplace {
    /// Unit weights unless `weights` is given.
    pub fn new(samples: Vec<f64>, weights: Option<Vec<f64>>, normalized: bool, domain: Domain) -> Result<Self> {
        if domain.dim() != 1 {
            return Err(Error::Config("Laplace kernels are one-dimensional".into()));
        }
        if samples.is_empty() {
            return Err(Error::Config("need at least one Laplace sample".into()));
        }
        if samples[0] < 0.0 || samples.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("Laplace samples must be nonnegative and strictly increasing".into()));
        }
        let weights = weights.unwrap_or_else(|| vec![1.0; samples.len()]);
        if weights.len() != samples.len() || weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Config("Laplace weights must be positive, one per sample".into()));
        }
        if domain.lo()[0] < 0.0 {
            return Err(Error::Config("Laplace domain must lie in [0, inf)".into()));
        }
        Ok(Self { samples, sqrt_weights: weights.iter().map(|w| w.sqrt()).collect(), normalized, domain })
    }

    /// `k` equispaced samples covering `[0, s_max]` with unit weights.
    pub fn uniform(k: usize, s_max: f64, normalized: bool, domain: Domain) -> Result<Self> {
        if k < 1 || !(s_max > 0.0) {
            return Err(Error::Config("need k >= 1 samples over a positive range".into()));
        }
        let samples =
            if k == 1 { vec![0.0] } else { (0..k).map(|i| s_max * i as f64 / (k - 1) as f64).collect() };
        Self::new(samples, None, normalized, domain)
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    fn exps(&self, x: f64) -> Vec<f64> {
        self.samples.iter().zip(&self.sqrt_weights).map(|(s, w)| w * (-s * x).exp()).collect()
    }
}

impl Kernel for DiscreteLaplace {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn obs_dim(&self) -> usize {
        self.samples.len()
    }

    fn phi_into(&self, x: &[f64], out: &mut [f64]) {
        let e = self.exps(x[0]);
        let xi = if self.normalized { 1.0 / e.iter().map(|v| v * v).sum::<f64>().sqrt() } else { 1.0 };
        for (o, v) in out.iter_mut().zip(&e) {
            *o = xi * v;
        }
    }

    fn grad_phi_into(&self, x: &[f64], out: &mut [f64]) {
        let e = self.exps(x[0]);
        if !self.normalized {
            for ((o, v), s) in out.iter_mut().zip(&e).zip(&self.samples) {
                *o = -s * v;
            }
            return;
        }
        let total: f64 = e.iter().map(|v| v * v).sum();
        let dtotal: f64 = e.iter().zip(&self.samples).map(|(v, s)| -2.0 * s * v * v).sum();
        let xi = total.powf(-0.5);
        let dxi = -0.5 * total.powf(-1.5) * dtotal;
        for ((o, v), s) in out.iter_mut().zip(&e).zip(&self.samples) {
            *o = dxi * v - xi * s * v;
        }
    }

    fn derivatives_1d(&self, x: f64, order: usize) -> Result<Vec<Vec<f64>>> {
        let e = self.exps(x);
        let k = self.samples.len();
        let mut out = vec![vec![0.0; k]; order + 1];
        if !self.normalized {
            for (i, (v, s)) in e.iter().zip(&self.samples).enumerate() {
                let mut f = *v;
                for row in out.iter_mut() {
                    row[i] = f;
                    f *= -s;
                }
            }
            return Ok(out);
        }
        // xi = S^{-1/2} with S(x + t) = sum_k w_k exp(-2 s_k (x + t)).
        let mut total = vec![0.0; order + 1];
        for (v, s) in e.iter().zip(&self.samples) {
            let mut c = v * v;
            for (n, t) in total.iter_mut().enumerate() {
                *t += c;
                c *= -2.0 * s / (n + 1) as f64;
            }
        }
        let xi = series::powf(&total, -0.5);
        for (i, (v, s)) in e.iter().zip(&self.samples).enumerate() {
            let mut ek = vec![0.0; order + 1];
            let mut c = *v;
            for (n, t) in ek.iter_mut().enumerate() {
                *t = c;
                c *= -s / (n + 1) as f64;
            }
            let mut prod = series::mul(&xi, &ek);
            series::to_derivatives(&mut prod);
            for (n, val) in prod.into_iter().enumerate() {
                out[n][i] = val;
            }
        }
        Ok(out)
    }

    fn default_grid(&self) -> Grid {
        Grid::inclusive(&self.domain, &[2048])
    }
}

/// Laplace transform against the Lebesgue measure on `R_+`, i.e.
/// `phi(x) = xi(x) exp(-s x)` in `L^2(R_+)` with `xi = 1` or
/// `xi(x) = sqrt(2 x)`. It has no finite observation vector; all quantities
/// come from the moments `int s^n exp(-u s) ds = n! / u^(n+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousLaplace {
    pub normalized: bool,
}

impl ContinuousLaplace {
    pub fn new(normalized: bool) -> Self {
        Self { normalized }
    }

    /// `1 / (x + x')`, or `2 sqrt(x x') / (x + x')` when normalized.
    pub fn correlation(&self, x: f64, xp: f64) -> Result<f64> {
        let u = x + xp;
        if u == 0.0 {
            return Err(Error::Singularity);
        }
        if !(x >= 0.0 && xp >= 0.0) {
            return Err(Error::Domain { point: [x, xp, 0.0] });
        }
        Ok(if self.normalized { 2.0 * (x * xp).sqrt() / u } else { 1.0 / u })
    }

    /// `xi, xi', ..., xi^(order)` at `x`.
    fn xi_derivatives(&self, x: f64, order: usize) -> Vec<f64> {
        let mut out = vec![0.0; order + 1];
        if !self.normalized {
            out[0] = 1.0;
            return out;
        }
        // d^n/dx^n sqrt(2) x^(1/2) = sqrt(2) (1/2)(-1/2)...(1/2 - n + 1) x^(1/2 - n)
        let mut coeff = core::f64::consts::SQRT_2;
        for (n, o) in out.iter_mut().enumerate() {
            *o = coeff * x.powf(0.5 - n as f64);
            coeff *= 0.5 - n as f64;
        }
        out
    }

    /// Coefficients `c_a` with `phi^(i)(x)(s) = sum_a c_a s^a exp(-s x)`.
    fn expansion(&self, x: f64, i: usize) -> Vec<f64> {
        let xi = self.xi_derivatives(x, i);
        let mut binom = 1.0;
        (0..=i)
            .map(|a| {
                let c = binom * xi[i - a] * if a % 2 == 0 { 1.0 } else { -1.0 };
                binom = binom * (i - a) as f64 / (a + 1) as f64;
                c
            })
            .collect()
    }

    /// `d_1^i d_2^j C(x, x') = <phi^(i)(x), phi^(j)(x')>`.
    pub fn cross_derivative(&self, i: usize, j: usize, x: f64, xp: f64) -> f64 {
        let u = x + xp;
        let ci = self.expansion(x, i);
        let cj = self.expansion(xp, j);
        let mut moments = Vec::with_capacity(i + j + 1);
        let mut m = 1.0 / u;
        for n in 0..=i + j {
            moments.push(m);
            m *= (n + 1) as f64 / u;
        }
        let mut total = 0.0;
        for (a, ca) in ci.iter().enumerate() {
            for (b, cb) in cj.iter().enumerate() {
                total += ca * cb * moments[a + b];
            }
        }
        total
    }
}
