//! Pixel-integrated Gaussian PSF models for 3-D single-molecule microscopy.
//!
//! Every model is a sum of separable Gaussian lobes per plane (or angle) `k`:
//! `phi_{k,i}(x) = sum_l w_l(x3) G_1(i1; x1 + o1_l(x3), s1_l(x3)) G_2(i2; x2 + o2_l(x3), s2_l(x3))`
//! where `G_j(i; c, s)` is the mass of `N(c, s^2)` over pixel `i` of axis `j`.
//! Observations are laid out with index `k N1 N2 + i2 N1 + i1`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

#[allow(unused_imports)]
use num_traits::Float;

use super::Kernel;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::measures::Domain;

/// Axial node count of the default 3-D argmax grid.
pub const AXIAL_GRID_NODES: usize = 32;

/// Mass of `N(center, sigma^2)` on each of `n` consecutive cells
/// `[lo + i step, lo + (i + 1) step]`, with derivatives in `center` and `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelProfile {
    pub value: Vec<f64>,
    pub d_center: Vec<f64>,
    pub d_sigma: Vec<f64>,
}

pub fn pixel_profile(lo: f64, step: f64, n: usize, center: f64, sigma: f64) -> PixelProfile {
    let mut p = PixelProfile { value: vec![0.0; n], d_center: vec![0.0; n], d_sigma: vec![0.0; n] };
    fill_profile(lo, step, center, sigma, &mut p.value, Some((&mut p.d_center, &mut p.d_sigma)));
    p
}

/// Gaussian tail `P(Z > |u| / sigma)` at one cell edge, kept with the sign of `u`
/// so that cell masses can be formed without cancellation.
#[derive(Clone, Copy)]
struct EdgeTail {
    u: f64,
    tail: f64,
}

impl EdgeTail {
    fn new(u: f64, scale: f64) -> Self {
        Self { u, tail: 0.5 * libm::erfc(u.abs() * scale) }
    }
}

/// Mass of the normal on `[a, b]` from the tails at its two edges.
fn cell_mass(a: EdgeTail, b: EdgeTail) -> f64 {
    if a.u >= 0.0 {
        a.tail - b.tail
    } else if b.u <= 0.0 {
        b.tail - a.tail
    } else {
        1.0 - a.tail - b.tail
    }
}

fn fill_profile(lo: f64, step: f64, center: f64, sigma: f64, value: &mut [f64], derivs: Option<(&mut [f64], &mut [f64])>) {
    let scale = 1.0 / (sigma * SQRT_2);
    let dens = 1.0 / (sigma * (2.0 * PI).sqrt());
    let inv2s2 = 1.0 / (2.0 * sigma * sigma);
    let n = value.len();
    let mut e_lo = EdgeTail::new(lo - center, scale);
    match derivs {
        None => {
            for (i, v) in value.iter_mut().enumerate() {
                let e_hi = EdgeTail::new(lo + (i + 1) as f64 * step - center, scale);
                *v = cell_mass(e_lo, e_hi);
                e_lo = e_hi;
            }
        }
        Some((dc, ds)) => {
            let mut n_lo = dens * (-e_lo.u * e_lo.u * inv2s2).exp();
            for i in 0..n {
                let e_hi = EdgeTail::new(lo + (i + 1) as f64 * step - center, scale);
                let n_hi = dens * (-e_hi.u * e_hi.u * inv2s2).exp();
                value[i] = cell_mass(e_lo, e_hi);
                dc[i] = n_lo - n_hi;
                ds[i] = -(e_hi.u * n_hi - e_lo.u * n_lo) / sigma;
                e_lo = e_hi;
                n_lo = n_hi;
            }
        }
    }
}

/// Profiles of the `n` cells of width `step` starting at 0 for every center in
/// `centers`, written row by row into `out` (`centers.len() x n`). When the
/// centers are evenly spaced by `step` the edge offsets repeat across rows and
/// each distinct offset is evaluated once.
fn fill_profiles(step: f64, n: usize, centers: &[f64], offset: f64, sigma: f64, out: &mut [f64]) {
    let m = centers.len();
    let uniform = m > 1
        && centers.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= 1e-12 * step)
        && (centers[m - 1] - centers[0] - (m - 1) as f64 * step).abs() <= 1e-12 * step * m as f64;
    if !uniform {
        for (j, c) in centers.iter().enumerate() {
            fill_profile(0.0, step, c + offset, sigma, &mut out[j * n..(j + 1) * n], None);
        }
        return;
    }
    // Edge i of row j sits at (i - j) step - (centers[0] + offset), i - j in [-(m - 1), n].
    let scale = 1.0 / (sigma * SQRT_2);
    let c0 = centers[0] + offset;
    let edges: Vec<EdgeTail> =
        (0..n + m).map(|t| EdgeTail::new((t as f64 - (m - 1) as f64) * step - c0, scale)).collect();
    for j in 0..m {
        let row = &mut out[j * n..(j + 1) * n];
        let base = m - 1 - j;
        for (i, v) in row.iter_mut().enumerate() {
            *v = cell_mass(edges[base + i], edges[base + i + 1]);
        }
    }
}

/// Camera and volume geometry: `[0, b1] x [0, b2] x [0, b3]` imaged on
/// `N1 x N2` square cells covering the lateral extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detector {
    pub extent: [f64; 3],
    pub pixels: [usize; 2],
}

impl Detector {
    pub fn table1() -> Self {
        Self { extent: [6.4, 6.4, 0.8], pixels: [64, 64] }
    }

    pub fn validate(&self) -> Result<Domain> {
        if self.pixels.contains(&0) {
            return Err(Error::Config("detector needs at least one pixel per axis".into()));
        }
        Domain::from_extent(&self.extent)
    }

    pub fn pixel_size(&self) -> [f64; 2] {
        [self.extent[0] / self.pixels[0] as f64, self.extent[1] / self.pixels[1] as f64]
    }

    pub fn pixel_count(&self) -> usize {
        self.pixels[0] * self.pixels[1]
    }

    /// Focal planes `z_k = k b3 / (K + 1)`, `k = 1..K`.
    pub fn focal_planes(&self, k: usize) -> Vec<f64> {
        (1..=k).map(|i| i as f64 * self.extent[2] / (k + 1) as f64).collect()
    }
}

/// Optical constants shared by all modalities; lengths in microns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optics {
    pub numerical_aperture: f64,
    pub n_incident: f64,
    pub n_transmitted: f64,
    pub wavelength: f64,
}

impl Optics {
    pub fn table1() -> Self {
        Self { numerical_aperture: 1.49, n_incident: 1.515, n_transmitted: 1.333, wavelength: 0.66 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_transmitted > 0.0) || !(self.n_incident > self.n_transmitted) {
            return Err(Error::Config("refractive indices must satisfy n_i > n_t > 0".into()));
        }
        if !(self.numerical_aperture > 0.0) || self.numerical_aperture > self.n_incident {
            return Err(Error::Config("numerical aperture must lie in (0, n_i]".into()));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::Config("wavelength must be positive".into()));
        }
        Ok(())
    }

    /// PSF width at focus, `0.42 lambda / NA`.
    pub fn sigma0(&self) -> f64 {
        0.42 * self.wavelength / self.numerical_aperture
    }

    /// Depth-of-field constant `lambda n_i / (2 NA^2)`.
    pub fn depth_of_field(&self) -> f64 {
        self.wavelength * self.n_incident / (2.0 * self.numerical_aperture * self.numerical_aperture)
    }

    /// Incident angles (radians) spaced linearly from the critical angle to
    /// `arcsin(NA / n_i)`, and their decay rates `s_k` (1/micron).
    pub fn tirf_angles_and_depths(&self, k: usize, model: PenetrationModel) -> Result<(Vec<f64>, Vec<f64>)> {
        self.validate()?;
        if k == 0 {
            return Err(Error::Config("need at least one TIRF angle".into()));
        }
        let alpha_c = (self.n_transmitted / self.n_incident).asin();
        let alpha_max = (self.numerical_aperture / self.n_incident).asin();
        if alpha_max < alpha_c {
            return Err(Error::Config("numerical aperture too small for total internal reflection".into()));
        }
        let angles: Vec<f64> = if k == 1 {
            vec![alpha_c]
        } else {
            (0..k).map(|i| alpha_c + (alpha_max - alpha_c) * i as f64 / (k - 1) as f64).collect()
        };
        let sc2 = alpha_c.sin().powi(2);
        let pre = 4.0 * PI * self.n_incident / self.wavelength;
        let depths = angles
            .iter()
            .map(|a| {
                let t = (a.sin().powi(2) - sc2).max(0.0);
                match model {
                    PenetrationModel::Verbatim => pre * t,
                    PenetrationModel::SquareRoot => pre * t.sqrt(),
                }
            })
            .collect();
        Ok((angles, depths))
    }
}

/// Decay rate formula for the evanescent field:
/// `Verbatim` is `(4 pi n_i / lambda)(sin^2 a - sin^2 a_c)`, `SquareRoot`
/// takes the square root of the sine term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenetrationModel {
    #[default]
    Verbatim,
    SquareRoot,
}

/// One Gaussian lobe at depth `x3`: weight, lateral offsets from `(x1, x2)`,
/// widths, and the `x3`-derivatives of each.
#[derive(Debug, Clone, Copy, Default)]
struct Lobe {
    w: f64,
    dw: f64,
    off: [f64; 2],
    doff: [f64; 2],
    sig: [f64; 2],
    dsig: [f64; 2],
}

trait LobeModel {
    fn detector(&self) -> &Detector;
    fn planes(&self) -> usize;
    /// Lobes of plane `k` for a molecule at depth `z`.
    fn lobes(&self, z: f64, k: usize, out: &mut Vec<Lobe>);
}

fn obs_len<L: LobeModel>(m: &L) -> usize {
    m.detector().pixel_count() * m.planes()
}

struct Profiles {
    g: [Vec<f64>; 2],
    gc: [Vec<f64>; 2],
    gs: [Vec<f64>; 2],
}

impl Profiles {
    fn new(det: &Detector) -> Self {
        let [n1, n2] = det.pixels;
        Self {
            g: [vec![0.0; n1], vec![0.0; n2]],
            gc: [vec![0.0; n1], vec![0.0; n2]],
            gs: [vec![0.0; n1], vec![0.0; n2]],
        }
    }

    fn fill(&mut self, det: &Detector, x: &[f64], lobe: &Lobe, derivs: bool) {
        let h = det.pixel_size();
        for j in 0..2 {
            let c = x[j] + lobe.off[j];
            if derivs {
                fill_profile(0.0, h[j], c, lobe.sig[j], &mut self.g[j], Some((&mut self.gc[j], &mut self.gs[j])));
            } else {
                fill_profile(0.0, h[j], c, lobe.sig[j], &mut self.g[j], None);
            }
        }
    }
}

fn lobe_phi<L: LobeModel>(m: &L, x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    lobe_add_phi(m, x, 1.0, out);
}

fn lobe_add_phi<L: LobeModel>(m: &L, x: &[f64], a: f64, out: &mut [f64]) {
    let det = m.detector();
    let n1 = det.pixels[0];
    let np = det.pixel_count();
    let mut prof = Profiles::new(det);
    let mut lobes = Vec::with_capacity(2);
    for k in 0..m.planes() {
        lobes.clear();
        m.lobes(x[2], k, &mut lobes);
        let block = &mut out[k * np..(k + 1) * np];
        for lobe in &lobes {
            prof.fill(det, x, lobe, false);
            for (i2, g2) in prof.g[1].iter().enumerate() {
                let c = a * lobe.w * g2;
                if c == 0.0 {
                    continue;
                }
                for (o, g1) in block[i2 * n1..(i2 + 1) * n1].iter_mut().zip(&prof.g[0]) {
                    *o += c * g1;
                }
            }
        }
    }
}

fn lobe_grad<L: LobeModel>(m: &L, x: &[f64], out: &mut [f64]) {
    let det = m.detector();
    let n1 = det.pixels[0];
    let np = det.pixel_count();
    let total = obs_len(m);
    let mut prof = Profiles::new(det);
    let mut lobes = Vec::with_capacity(2);
    out.iter_mut().for_each(|v| *v = 0.0);
    let (d1, rest) = out.split_at_mut(total);
    let (d2, d3) = rest.split_at_mut(total);
    for k in 0..m.planes() {
        lobes.clear();
        m.lobes(x[2], k, &mut lobes);
        for lobe in &lobes {
            prof.fill(det, x, lobe, true);
            // d g_j / d x3 through the lobe center and width.
            let dz: [Vec<f64>; 2] = core::array::from_fn(|j| {
                prof.gc[j].iter().zip(&prof.gs[j]).map(|(c, s)| c * lobe.doff[j] + s * lobe.dsig[j]).collect()
            });
            for i2 in 0..det.pixels[1] {
                let (g2, g2c, g2z) = (prof.g[1][i2], prof.gc[1][i2], dz[1][i2]);
                let base = k * np + i2 * n1;
                for i1 in 0..n1 {
                    let g1 = prof.g[0][i1];
                    let idx = base + i1;
                    d1[idx] += lobe.w * prof.gc[0][i1] * g2;
                    d2[idx] += lobe.w * g1 * g2c;
                    d3[idx] += lobe.dw * g1 * g2 + lobe.w * (dz[0][i1] * g2 + g1 * g2z);
                }
            }
        }
    }
}

/// `p_k^T`-contractions: returns `<phi(x), p>` and fills its gradient.
fn lobe_adjoint<L: LobeModel>(m: &L, p: &[f64], x: &[f64], grad: Option<&mut [f64]>) -> f64 {
    let det = m.detector();
    let [n1, n2] = det.pixels;
    let np = det.pixel_count();
    let want_grad = grad.is_some();
    let mut prof = Profiles::new(det);
    let mut lobes = Vec::with_capacity(2);
    let mut value = 0.0;
    let mut g = [0.0; 3];
    // q = P_k g2, qc = P_k g2c, qs = P_k g2s with P_k the N1 x N2 pixel block.
    let mut q = vec![0.0; n1];
    let mut qc = vec![0.0; n1];
    let mut qs = vec![0.0; n1];
    for k in 0..m.planes() {
        lobes.clear();
        m.lobes(x[2], k, &mut lobes);
        let block = &p[k * np..(k + 1) * np];
        for lobe in &lobes {
            prof.fill(det, x, lobe, want_grad);
            q.iter_mut().for_each(|v| *v = 0.0);
            if want_grad {
                qc.iter_mut().for_each(|v| *v = 0.0);
                qs.iter_mut().for_each(|v| *v = 0.0);
            }
            for i2 in 0..n2 {
                let col = &block[i2 * n1..(i2 + 1) * n1];
                let g2 = prof.g[1][i2];
                if want_grad {
                    let (g2c, g2s) = (prof.gc[1][i2], prof.gs[1][i2]);
                    for i1 in 0..n1 {
                        q[i1] += col[i1] * g2;
                        qc[i1] += col[i1] * g2c;
                        qs[i1] += col[i1] * g2s;
                    }
                } else if g2 != 0.0 {
                    for i1 in 0..n1 {
                        q[i1] += col[i1] * g2;
                    }
                }
            }
            let v = crate::linalg::dot(&prof.g[0], &q);
            value += lobe.w * v;
            if want_grad {
                let v1c = crate::linalg::dot(&prof.gc[0], &q);
                let v1s = crate::linalg::dot(&prof.gs[0], &q);
                let v2c = crate::linalg::dot(&prof.g[0], &qc);
                let v2s = crate::linalg::dot(&prof.g[0], &qs);
                g[0] += lobe.w * v1c;
                g[1] += lobe.w * v2c;
                g[2] += lobe.dw * v
                    + lobe.w * (lobe.doff[0] * v1c + lobe.dsig[0] * v1s + lobe.doff[1] * v2c + lobe.dsig[1] * v2s);
            }
        }
    }
    if let Some(out) = grad {
        out.copy_from_slice(&g);
    }
    value
}

/// Tensor-grid adjoint: for each axial node, `w G1^T P_k G2` per plane and lobe,
/// where the columns of `G_j` are the pixel profiles centered on each lateral node.
fn lobe_adjoint_grid<L: LobeModel>(m: &L, p: &[f64], grid: &Grid) -> Vec<f64> {
    let det = m.detector();
    let [n1, n2] = det.pixels;
    let np = det.pixel_count();
    let h = det.pixel_size();
    let axes = grid.axes();
    let (a1, a2, a3) = (&axes[0], &axes[1], &axes[2]);
    let (m1, m2) = (a1.len(), a2.len());
    let mut out = vec![0.0; grid.len()];
    let mut lobes = Vec::with_capacity(2);
    let mut g1 = vec![0.0; n1 * m1];
    let mut g2 = vec![0.0; n2 * m2];
    let mut t = vec![0.0; n1 * m2];
    for (j3, &z) in a3.iter().enumerate() {
        let slab = &mut out[j3 * m1 * m2..(j3 + 1) * m1 * m2];
        for k in 0..m.planes() {
            lobes.clear();
            m.lobes(z, k, &mut lobes);
            let block = &p[k * np..(k + 1) * np];
            for lobe in &lobes {
                fill_profiles(h[0], n1, a1, lobe.off[0], lobe.sig[0], &mut g1);
                fill_profiles(h[1], n2, a2, lobe.off[1], lobe.sig[1], &mut g2);
                // t[:, j2] = P_k g2[:, j2]
                t.iter_mut().for_each(|v| *v = 0.0);
                for j2 in 0..m2 {
                    let tc = &mut t[j2 * n1..(j2 + 1) * n1];
                    for (i2, &w2) in g2[j2 * n2..(j2 + 1) * n2].iter().enumerate() {
                        if w2.abs() < 1e-300 {
                            continue;
                        }
                        for (tv, pv) in tc.iter_mut().zip(&block[i2 * n1..(i2 + 1) * n1]) {
                            *tv += w2 * pv;
                        }
                    }
                }
                for j2 in 0..m2 {
                    let tc = &t[j2 * n1..(j2 + 1) * n1];
                    for j1 in 0..m1 {
                        slab[j2 * m1 + j1] += lobe.w * crate::linalg::dot(&g1[j1 * n1..(j1 + 1) * n1], tc);
                    }
                }
            }
        }
    }
    out
}

macro_rules! lobe_kernel {
    ($t:ty) => {
        impl Kernel for $t {
            fn domain(&self) -> &Domain {
                &self.domain
            }
            fn obs_dim(&self) -> usize {
                obs_len(self)
            }
            fn phi_into(&self, x: &[f64], out: &mut [f64]) {
                lobe_phi(self, x, out)
            }
            fn add_phi_into(&self, x: &[f64], a: f64, out: &mut [f64]) {
                lobe_add_phi(self, x, a, out)
            }
            fn grad_phi_into(&self, x: &[f64], out: &mut [f64]) {
                lobe_grad(self, x, out)
            }
            fn adjoint_at(&self, p: &[f64], x: &[f64]) -> f64 {
                lobe_adjoint(self, p, x, None)
            }
            fn adjoint_grad_at(&self, p: &[f64], x: &[f64], grad: &mut [f64]) -> f64 {
                lobe_adjoint(self, p, x, Some(grad))
            }
            fn adjoint_on_grid(&self, p: &[f64], grid: &Grid) -> Vec<f64> {
                lobe_adjoint_grid(self, p, grid)
            }
            fn default_grid(&self) -> Grid {
                let d = self.detector;
                Grid::cell_centered(&self.domain, &[d.pixels[0], d.pixels[1], AXIAL_GRID_NODES])
            }
        }
    };
}

fn check_planes(planes: &[f64]) -> Result<()> {
    if planes.is_empty() {
        return Err(Error::Config("need at least one focal plane".into()));
    }
    Ok(())
}

/// Astigmatic Gaussian PSF with widths
/// `s1(z) = s0 sqrt(1 + ((alpha z - beta) / d)^2)` and `s2(z) = s1(-z)`,
/// evaluated at `z = x3 - z_k` for each focal plane `z_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Astigmatism {
    detector: Detector,
    domain: Domain,
    pub sigma0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub depth_of_field: f64,
    focal_planes: Vec<f64>,
}

impl Astigmatism {
    pub fn new(
        detector: Detector,
        sigma0: f64,
        alpha: f64,
        beta: f64,
        depth_of_field: f64,
        focal_planes: Vec<f64>,
    ) -> Result<Self> {
        let domain = detector.validate()?;
        if !(sigma0 > 0.0) || !(depth_of_field > 0.0) {
            return Err(Error::Config("astigmatism widths must be positive".into()));
        }
        check_planes(&focal_planes)?;
        Ok(Self { detector, domain, sigma0, alpha, beta, depth_of_field, focal_planes })
    }

    /// Standard constants `alpha = -0.79`, `beta = 0.2` with `K` equispaced planes.
    pub fn from_optics(detector: Detector, optics: &Optics, k: usize) -> Result<Self> {
        optics.validate()?;
        let planes = detector.focal_planes(k);
        Self::new(detector, optics.sigma0(), -0.79, 0.2, optics.depth_of_field(), planes)
    }

    pub fn table1(k: usize) -> Result<Self> {
        Self::from_optics(Detector::table1(), &Optics::table1(), k)
    }

    pub fn detector(&self) -> &Detector {
        &self.detector
    }

    pub fn focal_planes(&self) -> &[f64] {
        &self.focal_planes
    }

    fn sigma1_with_derivative(&self, z: f64) -> (f64, f64) {
        let t = (self.alpha * z - self.beta) / self.depth_of_field;
        let r = (1.0 + t * t).sqrt();
        (self.sigma0 * r, self.sigma0 * t * self.alpha / (self.depth_of_field * r))
    }

    /// `(s1(z), s2(z))`.
    pub fn astig_sigmas(&self, z: f64) -> (f64, f64) {
        (self.sigma1_with_derivative(z).0, self.sigma1_with_derivative(-z).0)
    }
}

impl LobeModel for Astigmatism {
    fn detector(&self) -> &Detector {
        &self.detector
    }
    fn planes(&self) -> usize {
        self.focal_planes.len()
    }
    fn lobes(&self, z: f64, k: usize, out: &mut Vec<Lobe>) {
        let dz = z - self.focal_planes[k];
        let (s1, ds1) = self.sigma1_with_derivative(dz);
        let (s2, ds2m) = self.sigma1_with_derivative(-dz);
        out.push(Lobe { w: 1.0, sig: [s1, s2], dsig: [ds1, -ds2m], ..Lobe::default() });
    }
}

lobe_kernel!(Astigmatism);

/// Two Gaussian lobes at `(x1, x2) +- (r1, r2)` rotating with depth:
/// `r1 = (omega / 2) cos(theta z)`, `r2 = -(omega / 2) sin(theta z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleHelix {
    detector: Detector,
    domain: Domain,
    pub sigma: f64,
    pub omega: f64,
    pub theta_speed: f64,
    focal_planes: Vec<f64>,
}

impl DoubleHelix {
    pub fn new(detector: Detector, sigma: f64, omega: f64, theta_speed: f64, focal_planes: Vec<f64>) -> Result<Self> {
        let domain = detector.validate()?;
        if !(sigma > 0.0) || !(omega > 0.0) {
            return Err(Error::Config("double-helix sigma and omega must be positive".into()));
        }
        check_planes(&focal_planes)?;
        Ok(Self { detector, domain, sigma, omega, theta_speed, focal_planes })
    }

    /// `omega = 1` micron, `theta = 0.3846 pi` rad/micron, `K` equispaced planes.
    pub fn from_optics(detector: Detector, optics: &Optics, k: usize) -> Result<Self> {
        optics.validate()?;
        let planes = detector.focal_planes(k);
        Self::new(detector, optics.sigma0(), 1.0, 0.3846 * PI, planes)
    }

    pub fn table1(k: usize) -> Result<Self> {
        Self::from_optics(Detector::table1(), &Optics::table1(), k)
    }

    pub fn detector(&self) -> &Detector {
        &self.detector
    }

    pub fn focal_planes(&self) -> &[f64] {
        &self.focal_planes
    }

    /// `(r1(z), r2(z))`.
    pub fn helix_offsets(&self, z: f64) -> (f64, f64) {
        let th = self.theta_speed * z;
        (0.5 * self.omega * th.cos(), -0.5 * self.omega * th.sin())
    }
}

impl LobeModel for DoubleHelix {
    fn detector(&self) -> &Detector {
        &self.detector
    }
    fn planes(&self) -> usize {
        self.focal_planes.len()
    }
    fn lobes(&self, z: f64, k: usize, out: &mut Vec<Lobe>) {
        let th = self.theta_speed * (z - self.focal_planes[k]);
        let half = 0.5 * self.omega;
        let r = [half * th.cos(), -half * th.sin()];
        let dr = [-half * self.theta_speed * th.sin(), -half * self.theta_speed * th.cos()];
        for u in [-1.0, 1.0] {
            out.push(Lobe {
                w: 1.0,
                dw: 0.0,
                off: [u * r[0], u * r[1]],
                doff: [u * dr[0], u * dr[1]],
                sig: [self.sigma; 2],
                dsig: [0.0; 2],
            });
        }
    }
}

lobe_kernel!(DoubleHelix);

/// Lateral Gaussian PSF weighted by the normalized evanescent excitation
/// `xi(x3) exp(-s_k x3)`, `xi(z) = (sum_k exp(-2 s_k z))^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaTirf {
    detector: Detector,
    domain: Domain,
    pub sigma: f64,
    angles: Option<Vec<f64>>,
    depths: Vec<f64>,
}

impl MaTirf {
    pub fn new(detector: Detector, sigma: f64, depths: Vec<f64>) -> Result<Self> {
        let domain = detector.validate()?;
        if !(sigma > 0.0) {
            return Err(Error::Config("TIRF sigma must be positive".into()));
        }
        if depths.is_empty() || depths.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::Config("TIRF decay rates must be nonnegative".into()));
        }
        Ok(Self { detector, domain, sigma, angles: None, depths })
    }

    pub fn from_optics(detector: Detector, optics: &Optics, k: usize, model: PenetrationModel) -> Result<Self> {
        let (angles, depths) = optics.tirf_angles_and_depths(k, model)?;
        let mut out = Self::new(detector, optics.sigma0(), depths)?;
        out.angles = Some(angles);
        Ok(out)
    }

    pub fn table1(k: usize) -> Result<Self> {
        Self::from_optics(Detector::table1(), &Optics::table1(), k, PenetrationModel::Verbatim)
    }

    pub fn detector(&self) -> &Detector {
        &self.detector
    }

    /// Incident angles in radians, when built from optical constants.
    pub fn angles(&self) -> Option<&[f64]> {
        self.angles.as_deref()
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    fn xi_with_derivative(&self, z: f64) -> (f64, f64) {
        let (mut s, mut ds) = (0.0, 0.0);
        for d in &self.depths {
            let e = (-2.0 * d * z).exp();
            s += e;
            ds -= 2.0 * d * e;
        }
        let xi = s.powf(-0.5);
        (xi, -0.5 * xi / s * ds)
    }
}

impl LobeModel for MaTirf {
    fn detector(&self) -> &Detector {
        &self.detector
    }
    fn planes(&self) -> usize {
        self.depths.len()
    }
    fn lobes(&self, z: f64, k: usize, out: &mut Vec<Lobe>) {
        let (xi, dxi) = self.xi_with_derivative(z);
        let s = self.depths[k];
        let e = (-s * z).exp();
        out.push(Lobe {
            w: xi * e,
            dw: dxi * e - s * xi * e,
            sig: [self.sigma; 2],
            ..Lobe::default()
        });
    }
}

lobe_kernel!(MaTirf);
