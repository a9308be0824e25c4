//! Truncated Taylor series, used for high-order derivatives of normalized
//! kernels. A series `f` stores `f^(n)(x0) / n!` at index `n`.

use alloc::vec;
use alloc::vec::Vec;

pub(crate) fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..=i).map(|k| a[k] * b[i - k]).sum();
    }
    out
}

/// `f^alpha` for a series with `f[0] > 0`, from `f g' = alpha f' g`.
pub(crate) fn powf(f: &[f64], alpha: f64) -> Vec<f64> {
    let n = f.len();
    let mut g = vec![0.0; n];
    if n == 0 {
        return g;
    }
    g[0] = num_traits::Float::powf(f[0], alpha);
    for m in 1..n {
        let mut s = 0.0;
        for k in 1..=m {
            s += (alpha * k as f64 - (m - k) as f64) * f[k] * g[m - k];
        }
        g[m] = s / (m as f64 * f[0]);
    }
    g
}

/// Converts Taylor coefficients into derivatives (multiplies by `n!`).
pub(crate) fn to_derivatives(coeffs: &mut [f64]) {
    let mut fact = 1.0;
    for (n, c) in coeffs.iter_mut().enumerate() {
        if n > 0 {
            fact *= n as f64;
        }
        *c *= fact;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_of_exp_series() {
        // exp(t) has coefficients 1/n!; its square root is exp(t/2).
        let mut f = vec![1.0; 6];
        let mut fact = 1.0;
        for (n, c) in f.iter_mut().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            *c = 1.0 / fact;
        }
        let mut g = powf(&f, 0.5);
        to_derivatives(&mut g);
        for (n, d) in g.iter().enumerate() {
            assert!((d - 0.5f64.powi(n as i32)).abs() < 1e-14);
        }
        let sq = mul(&powf(&f, 0.5), &powf(&f, 0.5));
        for (a, b) in sq.iter().zip(&f) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
