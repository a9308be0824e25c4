use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::Kernel;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::measures::Domain;

/// Sampled Gaussian convolution on `[0, 1]`:
/// `phi_i(x) = exp(-(t_i - x)^2 / (2 sigma^2)) / sqrt(2 pi sigma^2)` with
/// detector samples `t_i = (i - 1) / (K - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian1D {
    sigma: f64,
    samples: Vec<f64>,
    domain: Domain,
}

impl Gaussian1D {
    pub fn new(sigma: f64, n_samples: usize) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Config("gaussian sigma must be positive".into()));
        }
        if n_samples < 2 {
            return Err(Error::Config("need at least two detector samples".into()));
        }
        let samples = (0..n_samples).map(|i| i as f64 / (n_samples - 1) as f64).collect();
        Ok(Self { sigma, samples, domain: Domain::from_extent(&[1.0])? })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    fn norm_const(&self) -> f64 {
        1.0 / (2.0 * core::f64::consts::PI * self.sigma * self.sigma).sqrt()
    }
}

impl Kernel for Gaussian1D {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn obs_dim(&self) -> usize {
        self.samples.len()
    }

    fn phi_into(&self, x: &[f64], out: &mut [f64]) {
        let c = self.norm_const();
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        for (o, t) in out.iter_mut().zip(&self.samples) {
            let u = t - x[0];
            *o = c * (-u * u * inv).exp();
        }
    }

    fn grad_phi_into(&self, x: &[f64], out: &mut [f64]) {
        let c = self.norm_const();
        let s2 = self.sigma * self.sigma;
        for (o, t) in out.iter_mut().zip(&self.samples) {
            let u = t - x[0];
            *o = c * (-u * u / (2.0 * s2)).exp() * u / s2;
        }
    }

    /// `d^n/dx^n` of each sample via probabilists' Hermite polynomials:
    /// `(-1)^n sigma^-n He_n(u) exp(-u^2/2)` with `u = (x - t) / sigma`.
    fn derivatives_1d(&self, x: f64, order: usize) -> Result<Vec<Vec<f64>>> {
        let c = self.norm_const();
        let mut out = vec![vec![0.0; self.samples.len()]; order + 1];
        let mut he = vec![0.0; order + 1];
        for (i, t) in self.samples.iter().enumerate() {
            let u = (x - t) / self.sigma;
            let base = c * (-0.5 * u * u).exp();
            he[0] = 1.0;
            if order >= 1 {
                he[1] = u;
            }
            for n in 1..order {
                he[n + 1] = u * he[n] - n as f64 * he[n - 1];
            }
            let mut scale = 1.0;
            for n in 0..=order {
                out[n][i] = scale * he[n] * base;
                scale *= -1.0 / self.sigma;
            }
        }
        Ok(out)
    }

    fn default_grid(&self) -> Grid {
        let width = self.domain.hi()[0] - self.domain.lo()[0];
        let n = 64 * (width / self.sigma).ceil() as usize;
        Grid::inclusive(&self.domain, &[n.max(2)])
    }
}
