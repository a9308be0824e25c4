//! Discrete Radon measures `m = sum_i a_i delta_{x_i}` over box domains.

use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Highest spatial dimension handled by the crate.
pub const MAX_DIM: usize = 3;

/// A position in a 1-, 2- or 3-dimensional domain.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: usize,
}

impl Point {
    pub fn new(coords: &[f64]) -> Self {
        assert!(!coords.is_empty() && coords.len() <= MAX_DIM, "unsupported dimension {}", coords.len());
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Self { coords: c, dim: coords.len() }
    }

    pub fn d1(x: f64) -> Self {
        Self::new(&[x])
    }

    pub fn d3(x1: f64, x2: f64, x3: f64) -> Self {
        Self::new(&[x1, x2, x3])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coords[..self.dim]
    }

    /// Coordinates padded with zeros to three entries.
    pub fn padded(&self) -> [f64; MAX_DIM] {
        self.coords
    }

    pub fn distance(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl core::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

/// Axis-aligned box `[lo_1, hi_1] x ... x [lo_d, hi_d]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    lo: [f64; MAX_DIM],
    hi: [f64; MAX_DIM],
    dim: usize,
}

impl Domain {
    pub fn new(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.len() > MAX_DIM {
            return Err(Error::Config("domain bounds must have matching dimension 1..=3".into()));
        }
        if lo.iter().zip(hi).any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::Config("domain bounds must satisfy lo < hi".into()));
        }
        let mut l = [0.0; MAX_DIM];
        let mut h = [0.0; MAX_DIM];
        l[..lo.len()].copy_from_slice(lo);
        h[..hi.len()].copy_from_slice(hi);
        Ok(Self { lo: l, hi: h, dim: lo.len() })
    }

    /// `[0, b_1] x ... x [0, b_d]`.
    pub fn from_extent(b: &[f64]) -> Result<Self> {
        let zeros = [0.0; MAX_DIM];
        Self::new(&zeros[..b.len()], b)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo[..self.dim]
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi[..self.dim]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().enumerate().all(|(j, &v)| v >= self.lo[j] && v <= self.hi[j])
    }

    pub fn check(&self, x: &Point) -> Result<()> {
        if self.contains(x.as_slice()) {
            Ok(())
        } else {
            Err(Error::Domain { point: x.padded() })
        }
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (j, v) in x.iter_mut().enumerate() {
            *v = v.max(self.lo[j]).min(self.hi[j]);
        }
    }
}

/// One weighted Dirac mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spike {
    pub amplitude: f64,
    pub position: Point,
}

/// Finite sum of weighted Dirac masses, kept in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiscreteMeasure {
    spikes: Vec<Spike>,
}

impl DiscreteMeasure {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(amplitudes: &[f64], positions: &[Point]) -> Self {
        assert_eq!(amplitudes.len(), positions.len());
        Self {
            spikes: amplitudes
                .iter()
                .zip(positions)
                .map(|(&amplitude, &position)| Spike { amplitude, position })
                .collect(),
        }
    }

    pub fn push(&mut self, amplitude: f64, position: Point) {
        self.spikes.push(Spike { amplitude, position });
    }

    pub fn spikes(&self) -> &[Spike] {
        &self.spikes
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.spikes.iter().map(|s| s.amplitude).collect()
    }

    pub fn positions(&self) -> Vec<Point> {
        self.spikes.iter().map(|s| s.position).collect()
    }

    /// Total variation norm, `sum_i |a_i|`.
    pub fn tv_norm(&self) -> f64 {
        self.spikes.iter().map(|s| s.amplitude.abs()).sum()
    }

    /// Drops every spike with `|a_i| <= eps_a`, keeping the order of the rest.
    pub fn prune(&self, eps_a: f64) -> Self {
        debug_assert!(eps_a >= 0.0);
        Self { spikes: self.spikes.iter().copied().filter(|s| s.amplitude.abs() > eps_a).collect() }
    }

    /// Smallest pairwise Euclidean distance between spike positions.
    pub fn min_separation(&self) -> Result<f64> {
        if self.spikes.len() < 2 {
            return Err(Error::TooFewSpikes);
        }
        let mut best = f64::INFINITY;
        for (i, a) in self.spikes.iter().enumerate() {
            for b in &self.spikes[i + 1..] {
                best = best.min(a.position.distance(&b.position));
            }
        }
        Ok(best)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { spikes: self.spikes.iter().map(|s| Spike { amplitude: c * s.amplitude, ..*s }).collect() }
    }

    /// Concatenation of the spike lists (the sum of measures with disjoint
    /// supports).
    pub fn concat(&self, other: &Self) -> Self {
        let mut spikes = self.spikes.clone();
        spikes.extend_from_slice(&other.spikes);
        Self { spikes }
    }
}

impl FromIterator<Spike> for DiscreteMeasure {
    fn from_iter<I: IntoIterator<Item = Spike>>(iter: I) -> Self {
        Self { spikes: iter.into_iter().collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn demo_measure() -> DiscreteMeasure {
        DiscreteMeasure::from_parts(&[1.3, 0.8, 1.4], &[Point::d1(0.3), Point::d1(0.37), Point::d1(0.7)])
    }

    #[test]
    fn tv_norm_examples() {
        assert_eq!(DiscreteMeasure::new().tv_norm(), 0.0);
        assert!((demo_measure().tv_norm() - 3.5).abs() < 1e-15);
        let neg = DiscreteMeasure::from_parts(&[-2.0], &[Point::d1(0.5)]);
        assert_eq!(neg.tv_norm(), 2.0);
    }

    #[test]
    fn prune_examples() {
        let (x1, x2) = (Point::d1(0.1), Point::d1(0.2));
        let m = DiscreteMeasure::from_parts(&[0.0, 1.0], &[x1, x2]);
        assert_eq!(m.prune(0.0), DiscreteMeasure::from_parts(&[1.0], &[x2]));
        assert!(DiscreteMeasure::from_parts(&[1e-12], &[x1]).prune(1e-10).is_empty());
        let keep = DiscreteMeasure::from_parts(&[0.5], &[x1]);
        assert_eq!(keep.prune(1e-10), keep);
    }

    #[test]
    fn min_separation_examples() {
        assert!((demo_measure().min_separation().unwrap() - 0.07).abs() < 1e-12);
        let same = DiscreteMeasure::from_parts(&[1.0, 2.0], &[Point::d1(0.4), Point::d1(0.4)]);
        assert_eq!(same.min_separation().unwrap(), 0.0);
        let tri = DiscreteMeasure::from_parts(&[1.0, 1.0], &[Point::d3(0.0, 0.0, 0.0), Point::d3(3.0, 4.0, 0.0)]);
        assert_eq!(tri.min_separation().unwrap(), 5.0);
        let single = DiscreteMeasure::from_parts(&[1.0], &[Point::d1(0.4)]);
        assert_eq!(single.min_separation(), Err(Error::TooFewSpikes));
    }

    #[test]
    fn domain_checks() {
        let d = Domain::from_extent(&[6.4, 6.4, 0.8]).unwrap();
        assert!(d.check(&Point::d3(1.5, 2.5, 0.1)).is_ok());
        assert!(matches!(d.check(&Point::d3(1.5, 2.5, 0.9)), Err(Error::Domain { .. })));
        assert!(Domain::new(&[1.0], &[0.5]).is_err());
        let mut x = vec![-1.0, 7.0, 0.3];
        d.clamp(&mut x);
        assert_eq!(x, vec![0.0, 6.4, 0.3]);
    }

    fn measure_strategy() -> impl Strategy<Value = DiscreteMeasure> {
        prop::collection::vec((-5.0f64..5.0, 0.0f64..1.0), 0..8).prop_map(|v| {
            v.into_iter().map(|(a, x)| Spike { amplitude: a, position: Point::d1(x) }).collect()
        })
    }

    proptest! {
        #[test]
        fn tv_norm_is_additive_and_homogeneous(m1 in measure_strategy(), m2 in measure_strategy(), c in -3.0f64..3.0) {
            let sum = m1.concat(&m2);
            prop_assert!((sum.tv_norm() - m1.tv_norm() - m2.tv_norm()).abs() < 1e-12);
            prop_assert!((m1.scaled(c).tv_norm() - c.abs() * m1.tv_norm()).abs() < 1e-12);
        }

        #[test]
        fn prune_is_idempotent(m in measure_strategy(), eps in 0.0f64..2.0) {
            let once = m.prune(eps);
            prop_assert_eq!(once.prune(eps), once.clone());
            prop_assert!(once.spikes().iter().all(|s| s.amplitude.abs() > eps));
        }
    }
}
