//! Small dense linear algebra: column-major matrices, Householder QR,
//! minimum-norm solves and condition numbers.
//!
//! Systems in this crate are tall and thin (observation dimension by a few
//! dozen atoms), so nothing here is blocked or parallel.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer does not match shape");
        Self { rows, cols, data }
    }

    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            assert_eq!(c.len(), rows, "column length mismatch");
            data.extend_from_slice(c);
        }
        Self { rows, cols: columns.len(), data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `A^T A`.
    pub fn gram(&self) -> Mat {
        let n = self.cols;
        let mut g = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = dot(self.col(i), self.col(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// `A v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (j, &vj) in v.iter().enumerate() {
            if vj != 0.0 {
                axpy(vj, self.col(j), &mut out);
            }
        }
        out
    }

    /// `A^T v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        (0..self.cols).map(|j| dot(self.col(j), v)).collect()
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let col = self.mul_vec(other.col(j));
            out.col_mut(j).copy_from_slice(&col);
        }
        out
    }
}

impl core::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[j * self.rows + i]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[j * self.rows + i]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Thin Householder QR factorization of a tall matrix.
#[derive(Debug, Clone)]
pub struct Qr {
    rows: usize,
    cols: usize,
    /// Householder vectors, `v_j` has length `rows - j`.
    reflectors: Vec<Vec<f64>>,
    /// Upper-triangular factor, `cols x cols`.
    r: Mat,
}

impl Qr {
    pub fn new(a: &Mat) -> Self {
        let (m, n) = (a.rows, a.cols);
        assert!(m >= n, "QR expects a tall matrix");
        let mut work = a.clone();
        let mut reflectors = Vec::with_capacity(n);
        let mut r = Mat::zeros(n, n);
        for j in 0..n {
            let x = &work.col(j)[j..];
            let alpha = norm2(x);
            let mut v = x.to_vec();
            let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
            let diag = -sign * alpha;
            v[0] -= diag;
            let vnorm = norm2(&v);
            if vnorm > 0.0 {
                for vi in v.iter_mut() {
                    *vi /= vnorm;
                }
            }
            // Apply I - 2 v v^T to the remaining columns.
            for k in j..n {
                let col = &mut work.col_mut(k)[j..];
                let s = 2.0 * dot(&v, col);
                axpy(-s, &v, col);
            }
            for i in 0..=j {
                r[(i, j)] = work[(i, j)];
            }
            r[(j, j)] = if vnorm > 0.0 { diag } else { work[(j, j)] };
            reflectors.push(v);
        }
        Self { rows: m, cols: n, reflectors, r }
    }

    pub fn r(&self) -> &Mat {
        &self.r
    }

    /// `Q z` for `z` of length `cols` (thin Q).
    pub fn q_mul(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        out[..self.cols].copy_from_slice(z);
        for (j, v) in self.reflectors.iter().enumerate().rev() {
            let seg = &mut out[j..];
            let s = 2.0 * dot(v, seg);
            axpy(-s, v, seg);
        }
        out
    }

    /// `Q^T b`, truncated to the first `cols` entries.
    pub fn qt_mul(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.rows);
        let mut out = b.to_vec();
        for (j, v) in self.reflectors.iter().enumerate() {
            let seg = &mut out[j..];
            let s = 2.0 * dot(v, seg);
            axpy(-s, v, seg);
        }
        out.truncate(self.cols);
        out
    }

    /// 2-norm condition number of `A` (that of `R`).
    pub fn condition_number(&self) -> f64 {
        condition_number(&self.r)
    }
}

/// Solves `R x = b` for upper-triangular `R`.
pub fn solve_upper(r: &Mat, b: &[f64]) -> Vec<f64> {
    let n = r.cols();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= r[(i, k)] * x[k];
        }
        x[i] = s / r[(i, i)];
    }
    x
}

/// Solves `R^T x = b` for upper-triangular `R`.
pub fn solve_upper_transposed(r: &Mat, b: &[f64]) -> Vec<f64> {
    let n = r.cols();
    let mut x = b.to_vec();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= r[(k, i)] * x[k];
        }
        x[i] = s / r[(i, i)];
    }
    x
}

/// Minimum-norm solution of the underdetermined system `A^T p = c`.
///
/// With `A = QR` the solution is `p = Q R^{-T} c`, i.e. `(A^+)^* c`. Returns the
/// solution together with the condition number of `A`; fails when that
/// condition number exceeds `max_condition`.
pub fn min_norm_solve(a: &Mat, c: &[f64], max_condition: f64) -> Result<(Vec<f64>, f64)> {
    assert_eq!(c.len(), a.cols());
    let qr = Qr::new(a);
    let condition = qr.condition_number();
    if !(condition.is_finite() && condition <= max_condition) {
        return Err(Error::RankDeficient { condition });
    }
    let w = solve_upper_transposed(qr.r(), c);
    Ok((qr.q_mul(&w), condition))
}

/// Least-squares solution of `min |A x - b|` for full column rank `A`.
pub fn least_squares(a: &Mat, b: &[f64]) -> Vec<f64> {
    let qr = Qr::new(a);
    solve_upper(qr.r(), &qr.qt_mul(b))
}

/// Singular values of a (small) matrix by one-sided Jacobi rotations,
/// sorted in decreasing order.
pub fn singular_values(a: &Mat) -> Vec<f64> {
    let mut u = a.clone();
    let n = u.cols();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(u.col(p), u.col(p));
                let beta = dot(u.col(q), u.col(q));
                let gamma = dot(u.col(p), u.col(q));
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..u.rows() {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    u[(i, p)] = c * up - s * uq;
                    u[(i, q)] = s * up + c * uq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n).map(|j| norm2(u.col(j))).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    sv
}

pub fn condition_number(a: &Mat) -> f64 {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Solves the square system `A x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` for a (numerically) singular matrix.
pub fn solve_dense(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.as_slice().iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for k in 0..n {
        let (piv, pval) = (k..n)
            .map(|i| (i, m[(i, k)].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pval <= 1e-14 * scale {
            return None;
        }
        if piv != k {
            for j in 0..n {
                let tmp = m[(k, j)];
                m[(k, j)] = m[(piv, j)];
                m[(piv, j)] = tmp;
            }
            x.swap(k, piv);
        }
        for i in k + 1..n {
            let f = m[(i, k)] / m[(k, k)];
            if f != 0.0 {
                for j in k..n {
                    m[(i, j)] -= f * m[(k, j)];
                }
                x[i] -= f * x[k];
            }
        }
    }
    Some(solve_upper(&m, &x))
}

/// Solves a symmetric positive definite system after diagonal equilibration
/// `D A D`, returning the solution and the condition number of the
/// equilibrated matrix.
pub fn solve_spd_equilibrated(a: &Mat, b: &[f64], max_condition: f64) -> Result<(Vec<f64>, f64)> {
    let n = a.rows();
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let v = a[(i, i)];
            if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 }
        })
        .collect();
    let mut scaled = a.clone();
    for j in 0..n {
        for i in 0..n {
            scaled[(i, j)] *= d[i] * d[j];
        }
    }
    let condition = condition_number(&scaled);
    if !(condition.is_finite() && condition <= max_condition) {
        return Err(Error::RankDeficient { condition });
    }
    let rhs: Vec<f64> = b.iter().zip(&d).map(|(bi, di)| bi * di).collect();
    let z = solve_dense(&scaled, &rhs).ok_or(Error::RankDeficient { condition })?;
    Ok((z.iter().zip(&d).map(|(zi, di)| zi * di).collect(), condition))
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration; stops after `max_iter` steps or when the relative change of
/// the Rayleigh quotient drops below `rel_tol`.
pub fn power_iteration(a: &Mat, max_iter: usize, rel_tol: f64) -> f64 {
    let n = a.rows();
    if n == 0 {
        return 0.0;
    }
    // Slightly non-uniform start so it is not orthogonal to structured
    // top eigenvectors.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * (i as f64) / (n as f64)).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w = a.mul_vec(&v);
        let next = dot(&v, &w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|x| x / nw).collect();
        let done = (next - lambda).abs() <= rel_tol * next.abs();
        lambda = next;
        if done {
            break;
        }
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Mat {
        Mat::from_columns(4, &[vec![1.0, 2.0, 0.5, -1.0], vec![0.3, -0.7, 2.0, 1.0], vec![1.0, 1.0, 1.0, 1.0]])
    }

    #[test]
    fn qr_reconstructs_matrix() {
        let a = sample();
        let qr = Qr::new(&a);
        for j in 0..a.cols() {
            let rj: Vec<f64> = (0..a.cols()).map(|i| qr.r()[(i, j)]).collect();
            let col = qr.q_mul(&rj);
            for i in 0..a.rows() {
                assert!((col[i] - a[(i, j)]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn min_norm_solution_interpolates_and_lies_in_range() {
        let a = sample();
        let c = [1.0, 0.0, -2.0];
        let (p, cond) = min_norm_solve(&a, &c, 1e12).unwrap();
        assert!(cond >= 1.0);
        let atp = a.tr_mul_vec(&p);
        for (x, y) in atp.iter().zip(c) {
            assert!((x - y).abs() < 1e-12);
        }
        // p = A z for some z: the least-squares residual vanishes.
        let z = least_squares(&a, &p);
        let back = a.mul_vec(&z);
        for (x, y) in back.iter().zip(&p) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let a = Mat::from_columns(3, &[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]);
        match min_norm_solve(&a, &[1.0, 0.0], 1e12) {
            Err(Error::RankDeficient { condition }) => assert!(condition > 1e12),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn singular_values_of_diagonal() {
        let mut a = Mat::zeros(3, 3);
        a[(0, 0)] = 3.0;
        a[(1, 1)] = -5.0;
        a[(2, 2)] = 0.5;
        let sv = singular_values(&a);
        assert!((sv[0] - 5.0).abs() < 1e-14 && (sv[1] - 3.0).abs() < 1e-14 && (sv[2] - 0.5).abs() < 1e-14);
        assert!((condition_number(&a) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn dense_solve_and_power_iteration() {
        let a = Mat::from_columns(2, &[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let x = solve_dense(&a, &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        assert!((power_iteration(&a, 200, 1e-14) - 3.0).abs() < 1e-10);
        assert!(solve_dense(&Mat::zeros(2, 2), &[1.0, 1.0]).is_none());
    }
}
