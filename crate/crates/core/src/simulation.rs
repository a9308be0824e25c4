//! Synthetic SMLM data: filament phantoms, activation frames and the
//! Poisson plus Gaussian camera noise model.
//!
//! All randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded with
//! `seed_from_u64(seed)` and switched to an explicit stream with `set_stream`,
//! so datasets are reproducible bit for bit across platforms.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::kernels::{apply_forward, Kernel};
use crate::measures::{DiscreteMeasure, Domain, Point};

/// Stream used by [`generate_phantom`].
pub const PHANTOM_STREAM: u64 = 0;
/// Stream used by [`partition_activations`].
pub const PARTITION_STREAM: u64 = 1;
/// Noise of frame `f` uses stream `NOISE_STREAM_BASE + f`.
pub const NOISE_STREAM_BASE: u64 = 2;

/// Filament cross-section radius (microns).
pub const FILAMENT_RADIUS: f64 = 0.01;

/// Seeded ChaCha20 generator on a given stream.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Cubic Bezier space curve on `t in [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCurve {
    pub control: [[f64; 3]; 4],
}

impl CubicCurve {
    pub fn new(control: [[f64; 3]; 4]) -> Self {
        Self { control }
    }

    /// Straight segment from `a` to `b`.
    pub fn segment(a: [f64; 3], b: [f64; 3]) -> Self {
        let lerp = |s: f64| [0, 1, 2].map(|i| a[i] + s * (b[i] - a[i]));
        Self { control: [a, lerp(1.0 / 3.0), lerp(2.0 / 3.0), b] }
    }

    pub fn eval(&self, t: f64) -> [f64; 3] {
        let s = 1.0 - t;
        let w = [s * s * s, 3.0 * s * s * t, 3.0 * s * t * t, t * t * t];
        let mut out = [0.0; 3];
        for (c, wi) in self.control.iter().zip(w) {
            for i in 0..3 {
                out[i] += wi * c[i];
            }
        }
        out
    }

    /// Polyline through `segments + 1` equally spaced parameter values.
    pub fn polyline(&self, segments: usize) -> Vec<[f64; 3]> {
        (0..=segments).map(|i| self.eval(i as f64 / segments as f64)).collect()
    }
}

/// Four filaments spanning a `b1 x b2 x b3` box. The control points are
/// scaled from the unit cube, so every curve stays well inside the box.
pub fn default_curves(extent: [f64; 3]) -> Vec<CubicCurve> {
    let unit: [[[f64; 3]; 4]; 4] = [
        [[0.05, 0.10, 0.20], [0.35, 0.90, 0.35], [0.65, 0.05, 0.70], [0.95, 0.80, 0.55]],
        [[0.10, 0.95, 0.80], [0.30, 0.30, 0.60], [0.70, 0.95, 0.25], [0.90, 0.20, 0.15]],
        [[0.50, 0.05, 0.50], [0.10, 0.40, 0.85], [0.90, 0.60, 0.15], [0.45, 0.95, 0.45]],
        [[0.05, 0.55, 0.35], [0.40, 0.70, 0.10], [0.60, 0.35, 0.90], [0.95, 0.45, 0.65]],
    ];
    unit.iter()
        .map(|c| CubicCurve::new(c.map(|p| [p[0] * extent[0], p[1] * extent[1], p[2] * extent[2]])))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub positions: Vec<Point>,
    pub seed: u64,
}

const POLYLINE_SEGMENTS: usize = 1000;

/// Samples `n_total` molecules uniformly in arc length along `curves`, then
/// jitters each one uniformly in a ball of `radius`. Jittered points falling
/// outside `domain` are clamped back onto it.
pub fn generate_phantom(
    curves: &[CubicCurve],
    domain: &Domain,
    n_total: usize,
    radius: f64,
    seed: u64,
) -> Result<Phantom> {
    if n_total == 0 {
        return Err(Error::Parameter("n_total must be at least 1".into()));
    }
    if curves.is_empty() {
        return Err(Error::Parameter("at least one curve is required".into()));
    }
    if domain.dim() != 3 {
        return Err(Error::Dimension { expected: 3, found: domain.dim() });
    }
    if !(radius >= 0.0) {
        return Err(Error::Parameter("jitter radius must be nonnegative".into()));
    }
    // Concatenated polylines with cumulative arc length.
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut cumulative: Vec<f64> = Vec::new();
    let mut starts = Vec::new();
    let mut total = 0.0;
    for curve in curves {
        let poly = curve.polyline(POLYLINE_SEGMENTS);
        for v in &poly {
            if !domain.contains(v) {
                return Err(Error::Domain { point: *v });
            }
        }
        starts.push(vertices.len());
        for (i, v) in poly.iter().enumerate() {
            if i > 0 {
                let p = poly[i - 1];
                total += ((v[0] - p[0]).powi(2) + (v[1] - p[1]).powi(2) + (v[2] - p[2]).powi(2)).sqrt();
            }
            vertices.push(*v);
            cumulative.push(total);
        }
    }
    if !(total > 0.0) {
        return Err(Error::Parameter("curves have zero total length".into()));
    }
    let mut rng = stream_rng(seed, PHANTOM_STREAM);
    let mut positions = Vec::with_capacity(n_total);
    for _ in 0..n_total {
        let u = rng.random::<f64>() * total;
        // First vertex whose cumulative length reaches u, skipping the zero-length
        // joins between consecutive curves.
        let mut j = cumulative.partition_point(|&c| c < u).max(1);
        while starts.contains(&j) {
            j += 1;
        }
        let j = j.min(vertices.len() - 1);
        let seg = cumulative[j] - cumulative[j - 1];
        let s = if seg > 0.0 { ((u - cumulative[j - 1]) / seg).clamp(0.0, 1.0) } else { 0.0 };
        let (a, b) = (vertices[j - 1], vertices[j]);
        let mut p = [0, 1, 2].map(|i| a[i] + s * (b[i] - a[i]));
        let offset = ball_sample(&mut rng);
        for i in 0..3 {
            p[i] += radius * offset[i];
        }
        domain.clamp(&mut p);
        positions.push(Point::new(&p));
    }
    Ok(Phantom { positions, seed })
}

/// Uniform point in the unit ball by rejection from the cube.
fn ball_sample<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [0, 1, 2].map(|_| 2.0 * rng.random::<f64>() - 1.0);
        if v[0] * v[0] + v[1] * v[1] + v[2] * v[2] <= 1.0 {
            return v;
        }
    }
}

/// Molecules active in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSet {
    pub frame: usize,
    pub measure: DiscreteMeasure,
}

pub const AMPLITUDE_RANGE: (f64, f64) = (1.0, 1.5);

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub frames: Vec<ActivationSet>,
    /// Molecules left over when `N` does not divide the phantom size.
    pub dropped: usize,
}

/// Random permutation of the phantom cut into frames of exactly `n`
/// molecules, with amplitudes uniform in `[1, 1.5]`.
pub fn partition_activations(phantom: &Phantom, n: usize, seed: u64) -> Result<Partition> {
    let total = phantom.positions.len();
    if n == 0 || n > total {
        return Err(Error::Parameter("molecules per frame must be in 1..=phantom size".into()));
    }
    let mut rng = stream_rng(seed, PARTITION_STREAM);
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng);
    let count = total / n;
    let (lo, hi) = AMPLITUDE_RANGE;
    let frames = (0..count)
        .map(|f| {
            let mut measure = DiscreteMeasure::new();
            for &i in &order[f * n..(f + 1) * n] {
                let a = lo + (hi - lo) * rng.random::<f64>();
                measure.push(a, phantom.positions[i]);
            }
            ActivationSet { frame: f, measure }
        })
        .collect();
    Ok(Partition { frames, dropped: total - count * n })
}

/// Noiseless acquisition `Phi m0`.
pub fn render_noiseless<K: Kernel + ?Sized>(kernel: &K, m0: &DiscreteMeasure) -> Result<Vec<f64>> {
    apply_forward(kernel, m0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Maximal expected photon count of a pixel summed over the planes.
    pub n_photon: f64,
    /// Variance of the additive Gaussian noise.
    pub variance: f64,
    pub seed: u64,
    pub stream: u64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_photon > 0.0 && self.n_photon.is_finite()) {
            return Err(Error::Parameter("n_photon must be positive".into()));
        }
        if !(self.variance >= 0.0 && self.variance.is_finite()) {
            return Err(Error::Parameter("noise variance must be nonnegative".into()));
        }
        Ok(())
    }

    /// Same budget and variance on the stream of frame `f`.
    pub fn for_frame(&self, f: usize) -> Self {
        Self { stream: NOISE_STREAM_BASE + f as u64, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyFrame {
    pub y: Vec<f64>,
    /// Factor applied to `y0` before sampling.
    pub scale: f64,
}

/// Scale factor bringing `max_pixel sum_k y0[k, pixel]` to `n_photon`.
/// `y0` is laid out plane by plane.
pub fn photon_scale(y0: &[f64], planes: usize, n_photon: f64) -> Result<f64> {
    if planes == 0 || y0.len() % planes != 0 {
        return Err(Error::Dimension { expected: planes.max(1), found: y0.len() });
    }
    let p = y0.len() / planes;
    let peak = (0..p).map(|i| (0..planes).map(|k| y0[k * p + i]).sum::<f64>()).fold(0.0f64, f64::max);
    if !(peak > 0.0) {
        return Err(Error::ZeroObservation);
    }
    Ok(n_photon / peak)
}

/// `y0 + std * w` with `w` i.i.d. standard normal drawn from `(seed, stream)`.
pub fn add_gaussian_noise(y0: &[f64], std: f64, seed: u64, stream: u64) -> Result<Vec<f64>> {
    if !(std >= 0.0 && std.is_finite()) {
        return Err(Error::Parameter("noise level must be finite and nonnegative".into()));
    }
    let mut rng = stream_rng(seed, stream);
    Ok(y0.iter().map(|v| v + std * rng.sample::<f64, _>(rand_distr::StandardNormal)).collect())
}

/// `P(c y0) + w` with Poisson shot noise on the scaled frame and i.i.d.
/// Gaussian noise of the configured variance.
pub fn apply_noise(y0: &[f64], planes: usize, cfg: &NoiseConfig) -> Result<NoisyFrame> {
    cfg.validate()?;
    if y0.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Parameter("noiseless frame must be nonnegative".into()));
    }
    let scale = photon_scale(y0, planes, cfg.n_photon)?;
    let mut rng = stream_rng(cfg.seed, cfg.stream);
    let gauss = if cfg.variance > 0.0 {
        Some(Normal::new(0.0, cfg.variance.sqrt()).map_err(|_| Error::Parameter("invalid noise variance".into()))?)
    } else {
        None
    };
    let mut y = Vec::with_capacity(y0.len());
    for v in y0 {
        let mean = scale * v;
        let mut sample = if mean > 0.0 {
            Poisson::new(mean)
                .map_err(|_| Error::Parameter("photon count out of range".into()))?
                .sample(&mut rng)
        } else {
            0.0
        };
        if let Some(g) = &gauss {
            sample += g.sample(&mut rng);
        }
        y.push(sample);
    }
    Ok(NoisyFrame { y, scale })
}
