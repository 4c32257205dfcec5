//! Quadrature rules and a small least-squares fit shared across modules.

use crate::error::{LabError, Result};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Simpson rule over uniformly spaced samples (odd count ≥ 3).
pub fn simpson_uniform(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(
        n >= 3 && n % 2 == 1,
        "Simpson needs an odd number of samples >= 3"
    );
    let mut s = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// Exp-sinh nodes (abscissa, weight) for ∫_0^∞.
fn exp_sinh_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let h = 1.0 / 24.0;
        let mut out = Vec::new();
        let mut k = -(5.0 / h) as i64;
        loop {
            let tau = k as f64 * h;
            let arg = 0.5 * PI * tau.sinh();
            if arg > 700.0 {
                break;
            }
            let x = arg.exp();
            let wt = h * 0.5 * PI * tau.cosh() * x;
            if x > 0.0 {
                out.push((x, wt));
            }
            k += 1;
        }
        out
    })
}

/// ∫_0^∞ f(u) du for integrands that decay at infinity.
pub fn integrate_half_line(f: impl Fn(f64) -> f64) -> f64 {
    let mut s = 0.0;
    for &(x, w) in exp_sinh_rule() {
        let v = f(x);
        if v == 0.0 && x > 1.0 {
            break;
        }
        s += w * v;
    }
    s
}

/// Least-squares polynomial in x; returns coefficients (constant first) and a pivot-ratio condition estimate.
pub(crate) fn poly_fit(xs: &[f64], ys: &[f64], degree: usize) -> Result<(Vec<f64>, f64)> {
    let cols = degree + 1;
    if xs.len() < cols {
        return Err(LabError::InvalidParameter(
            "not enough points for the fit".into(),
        ));
    }
    let scale = xs.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    let mut a = vec![vec![0.0; cols + 1]; cols];
    for (x, y) in xs.iter().zip(ys) {
        let u = x / scale;
        let pw: Vec<f64> = (0..cols).map(|j| u.powi(j as i32)).collect();
        for r in 0..cols {
            for c in 0..cols {
                a[r][c] += pw[r] * pw[c];
            }
            a[r][cols] += pw[r] * y;
        }
    }
    let mut pivots = Vec::new();
    for c in 0..cols {
        let piv = (c..cols)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap_or(c);
        a.swap(c, piv);
        let d = a[c][c];
        if d.abs() < 1e-300 {
            return Err(LabError::NoConvergence("singular fit".into()));
        }
        pivots.push(d.abs());
        let pivot_row = a[c].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != c {
                let f = row[c] / d;
                for (x, y) in row[c..].iter_mut().zip(&pivot_row[c..]) {
                    *x -= f * y;
                }
            }
        }
    }
    let coef = (0..cols)
        .map(|j| a[j][cols] / a[j][j] / scale.powi(j as i32))
        .collect();
    let cond = pivots.iter().cloned().fold(0.0, f64::max)
        / pivots.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((coef, cond))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre(10);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        let m18: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((m18 - 2.0 / 19.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(7);
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m4 - 0.4).abs() < 1e-14);
    }

    #[test]
    fn simpson_cubic_exact() {
        let h = 0.1;
        let v: Vec<f64> = (0..11).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson_uniform(&v, h) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn half_line_rule() {
        let v = integrate_half_line(|u| (-u).exp());
        assert!((v - 1.0).abs() < 1e-14);
        let v = integrate_half_line(|u| 1.0 / (1.0 + u * u));
        assert!((v - PI / 2.0).abs() < 1e-12, "{v}");
    }
}
