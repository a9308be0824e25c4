//! Tensor-product evaluation grids over box domains.

use alloc::vec::Vec;

use crate::measures::{Domain, Point};

/// Tensor grid given by explicit node coordinates per axis.
///
/// Linear node indices run with the first axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Vec<f64>>,
}

impl Grid {
    pub fn from_axes(axes: Vec<Vec<f64>>) -> Self {
        assert!(!axes.is_empty() && axes.iter().all(|a| !a.is_empty()));
        Self { axes }
    }

    /// `n_j` equispaced nodes per axis including both end points.
    pub fn inclusive(domain: &Domain, counts: &[usize]) -> Self {
        assert_eq!(counts.len(), domain.dim());
        let axes = counts
            .iter()
            .enumerate()
            .map(|(j, &n)| {
                let (lo, hi) = (domain.lo()[j], domain.hi()[j]);
                if n <= 1 {
                    return alloc::vec![0.5 * (lo + hi)];
                }
                (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
            })
            .collect();
        Self { axes }
    }

    /// `n_j` nodes per axis at the centers of `n_j` equal cells.
    pub fn cell_centered(domain: &Domain, counts: &[usize]) -> Self {
        assert_eq!(counts.len(), domain.dim());
        let axes = counts
            .iter()
            .enumerate()
            .map(|(j, &n)| {
                let (lo, hi) = (domain.lo()[j], domain.hi()[j]);
                let h = (hi - lo) / n as f64;
                (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect()
            })
            .collect();
        Self { axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node spacing per axis (zero for single-node axes).
    pub fn steps(&self) -> Vec<f64> {
        self.axes.iter().map(|a| if a.len() > 1 { (a[a.len() - 1] - a[0]) / (a.len() - 1) as f64 } else { 0.0 }).collect()
    }

    pub fn point(&self, mut index: usize) -> Point {
        let mut c = [0.0; 3];
        for (j, axis) in self.axes.iter().enumerate() {
            c[j] = axis[index % axis.len()];
            index /= axis.len();
        }
        Point::new(&c[..self.axes.len()])
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}
