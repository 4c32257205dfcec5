//! Special functions: complex Γ and log Γ, Barnes G at integers, E₁, Ci,
//! Bernoulli numbers and Euler's constant.

use crate::error::{LabError, Result};
use crate::quad::integrate_half_line;
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, Zero};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Euler's constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Returns Euler's constant.
pub fn euler_gamma() -> f64 {
    EULER_GAMMA
}

/// Branch thresholds and tolerances for the special functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialFnConfig {
    pub target_abs_tol: f64,
    pub series_cutoff: f64,
}

impl Default for SpecialFnConfig {
    fn default() -> Self {
        Self {
            target_abs_tol: 1e-13,
            series_cutoff: 4.0,
        }
    }
}

const MAX_BERNOULLI: usize = 80;

fn bernoulli_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = vec![1.0];
        let two_pi = 2.0 * PI;
        for m in 1..=MAX_BERNOULLI {
            let s = 2.0 * m as f64;
            let zeta = match m {
                1 => PI * PI / 6.0,
                2 => PI.powi(4) / 90.0,
                _ => {
                    let mut acc = 0.0;
                    for n in (1..=2000).rev() {
                        acc += (n as f64).powf(-s);
                    }
                    acc + 2000f64.powf(1.0 - s) / (s - 1.0) - 0.5 * 2000f64.powf(-s)
                }
            };
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            // 2ζ(2m)/(2π)^{2m} computed as a running product to avoid overflow.
            out.push(sign * 2.0 * zeta * (-s * two_pi.ln()).exp());
        }
        out
    })
}

/// B_{2m}/(2m)! for 1 ≤ m ≤ 80; index 0 returns 1.
pub fn bernoulli_over_factorial(m: u32) -> f64 {
    bernoulli_table()[m as usize]
}

/// Bernoulli number B_{2m} as a float.
pub fn bernoulli_2m(m: u32) -> f64 {
    let fact: f64 = (1..=2 * m).map(|j| j as f64).product();
    bernoulli_over_factorial(m) * fact
}

fn is_nonpositive_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

const STIRLING: [f64; 12] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
    77683.0 / 5796.0,
    -236364091.0 / 1506960.0,
];

fn stirling(w: Complex64) -> Complex64 {
    let mut s = (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln();
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut p = inv;
    for c in STIRLING {
        s += c * p;
        p *= inv2;
    }
    s
}

/// log Γ(z), continuous off the non-positive real axis (the sum-of-logs branch).
pub fn ln_gamma_c(z: Complex64) -> Result<Complex64> {
    if is_nonpositive_integer(z) {
        return Err(LabError::Domain(format!("Γ has a pole at {}", z.re)));
    }
    let shift = if z.norm() < 18.0 || z.re < 0.5 {
        (18.0 - z.re).max(0.0).ceil() as usize
    } else {
        0
    };
    let mut corr = Complex64::new(0.0, 0.0);
    for j in 0..shift {
        corr += (z + j as f64).ln();
    }
    Ok(stirling(z + shift as f64) - corr)
}

/// Γ(z) for complex z, with the reflection formula for Re z < 1/2.
pub fn gamma_c(z: Complex64) -> Result<Complex64> {
    if is_nonpositive_integer(z) {
        return Err(LabError::Domain(format!("Γ has a pole at {}", z.re)));
    }
    if z.re < 0.5 && z.im.abs() < 30.0 {
        let one_minus = Complex64::new(1.0, 0.0) - z;
        let g = ln_gamma_c(one_minus)?.exp();
        return Ok(PI / ((PI * z).sin() * g));
    }
    Ok(ln_gamma_c(z)?.exp())
}

/// Real Γ for positive arguments.
pub fn gamma_real(x: f64) -> f64 {
    gamma_c(Complex64::new(x, 0.0))
        .map(|v| v.re)
        .unwrap_or(f64::NAN)
}

/// Barnes G(n) = Π_{j=1}^{n−2} j! as an exact integer.
pub fn barnes_g_exact(n: u32) -> BigUint {
    assert!(n >= 1, "Barnes G needs n >= 1");
    let mut g = BigUint::one();
    let mut fact = BigUint::one();
    for j in 1..n.saturating_sub(1) {
        fact *= j;
        g *= &fact;
    }
    g
}

/// Barnes G(n) at a positive integer, as a float.
pub fn barnes_g(n: u32) -> f64 {
    let g = barnes_g_exact(n);
    g.to_string().parse::<f64>().unwrap_or(f64::INFINITY)
}

/// g(k) = (k²)!·G(k+1)²/G(2k+1), computed exactly.
pub fn g_of_k(k: u32) -> Result<BigUint> {
    if k == 0 {
        return Err(LabError::InvalidParameter("g(k) needs k >= 1".into()));
    }
    let mut fact = BigUint::one();
    for j in 1..=(k * k) {
        fact *= j;
    }
    let gk = barnes_g_exact(k + 1);
    let num = fact * &gk * &gk;
    let den = barnes_g_exact(2 * k + 1);
    if !(&num % &den).is_zero() {
        return Err(LabError::Domain(format!("g({k}) is not integral")));
    }
    Ok(num / den)
}

/// log G(1+x) for real x > −1 (Taylor series about 0 plus the functional equation).
pub fn ln_barnes_g1p(x: f64) -> f64 {
    assert!(x > -1.0, "ln_barnes_g1p needs x > -1");
    if x > 0.5 {
        // G(1+x) = Γ(x)·G(x)
        return gamma_real(x).ln() + ln_barnes_g1p(x - 1.0);
    }
    let mut s = 0.5 * x * (2.0 * PI).ln() - 0.5 * (x + (1.0 + EULER_GAMMA) * x * x);
    let mut p = x * x * x;
    for k in 2..200u32 {
        let zk = crate::lfun::zeta_real(k as f64);
        let term = if k % 2 == 0 { zk } else { -zk } * p / (k + 1) as f64;
        s += term;
        if term.abs() < 1e-18 {
            break;
        }
        p *= x;
    }
    s
}

/// Power series E₁(z) = −γ − log z − Σ (−z)^n/(n·n!).
fn e1_series(z: Complex64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    let limit = 60 + 3 * z.norm() as usize;
    for n in 1..=limit {
        term *= -z / n as f64;
        let add = term / n as f64;
        sum += add;
        if n as f64 > z.norm() && add.norm() <= 1e-17 * sum.norm().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

/// Modified Lentz continued fraction for E₁.
fn e1_cf(z: Complex64, max_iter: usize) -> Option<Complex64> {
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 1..=max_iter {
        let an = -((i * i) as f64);
        b += 2.0;
        d = (an * d + b).inv();
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            return Some(h * (-z).exp());
        }
    }
    None
}

/// Exponential integral E₁(z), principal branch.
pub fn e1(z: Complex64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(LabError::Domain("E₁ is singular at 0".into()));
    }
    if z.norm() < 4.0 || z.re < -z.im.abs() {
        return Ok(e1_series(z));
    }
    e1_cf(z, 2000).ok_or_else(|| LabError::NoConvergence(format!("E₁ continued fraction at {z}")))
}

/// Cosine integral Ci(x) for x > 0.
pub fn ci(x: f64) -> Result<f64> {
    if x <= 0.0 || x.is_nan() {
        return Err(LabError::Domain(format!("Ci needs x > 0, got {x}")));
    }
    if x < 4.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        let x2 = x * x;
        for n in 1..60 {
            term *= -x2 / ((2 * n - 1) * (2 * n)) as f64;
            let add = term / (2 * n) as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        return Ok(EULER_GAMMA + x.ln() + sum);
    }
    let (f, g) = ci_si_auxiliary(x);
    Ok(f * x.sin() - g * x.cos())
}

/// Sine integral Si(x) for real x.
pub fn si(x: f64) -> f64 {
    if x < 0.0 {
        return -si(-x);
    }
    if x < 4.0 {
        return si_series(x);
    }
    let (f, g) = ci_si_auxiliary(x);
    PI / 2.0 - f * x.cos() - g * x.sin()
}

fn si_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut pow = x;
    let x2 = x * x;
    let mut fact = 1.0;
    for n in 0..60 {
        let k = 2 * n + 1;
        if n > 0 {
            fact *= ((k - 1) * k) as f64;
            pow *= -x2;
        }
        let add = pow / (fact * k as f64);
        sum += add;
        if add.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// Auxiliary functions f, g as Laplace integrals.
fn ci_si_auxiliary(x: f64) -> (f64, f64) {
    let f = integrate_half_line(|u| (-u).exp() / (1.0 + (u / x).powi(2))) / x;
    let g = integrate_half_line(|u| u * (-u).exp() / (1.0 + (u / x).powi(2))) / (x * x);
    (f, g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gamma_examples() {
        assert!((gamma_c(c(0.5, 0.0)).unwrap() / PI.sqrt() - 1.0).norm() < 1e-13);
        assert!((gamma_c(c(5.0, 0.0)).unwrap() - 24.0).norm() < 1e-12);
        // Oracle: Γ(1+i) = i·Γ(i); |Γ(1+i)|² = π/sinh π.
        let g = gamma_c(c(1.0, 1.0)).unwrap();
        assert!((g.norm_sqr() - PI / PI.sinh()).abs() < 1e-14);
        assert!((g - c(0.498_015_668_118_356, -0.154_949_828_301_811)).norm() < 1e-12);
        assert!(gamma_c(c(-3.0, 0.0)).is_err());
        assert!(gamma_c(c(0.0, 0.0)).is_err());
        assert!((gamma_c(c(-0.5, 0.0)).unwrap().re + 2.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn ln_gamma_large_imaginary_modulus() {
        // log|Γ(1/2 + iy)| = ½ log(π / cosh(πy)).
        for y in [10.0, 100.0, 1e4] {
            let v = ln_gamma_c(c(0.5, y)).unwrap();
            let expect =
                0.5 * PI.ln() - 0.5 * (PI * y) - 0.5 * (0.5 * (1.0 + (-2.0 * PI * y).exp())).ln();
            assert!((v.re - expect).abs() < 1e-9 * expect.abs().max(1.0), "{y}");
        }
    }

    #[test]
    fn barnes_examples() {
        assert_eq!(barnes_g(1), 1.0);
        assert_eq!(barnes_g(2), 1.0);
        assert_eq!(barnes_g(3), 1.0);
        assert_eq!(barnes_g(4), 2.0);
        assert_eq!(barnes_g(5), 12.0);
        for n in 2..30u32 {
            let mut gamma_n_minus = BigUint::one();
            for j in 1..n {
                gamma_n_minus *= j;
            }
            // G(n+1) = Γ(n)·G(n)
            assert_eq!(barnes_g_exact(n + 1), gamma_n_minus * barnes_g_exact(n));
        }
    }

    #[test]
    fn g_of_k_examples() {
        assert_eq!(g_of_k(1).unwrap(), BigUint::from(1u32));
        assert_eq!(g_of_k(2).unwrap(), BigUint::from(2u32));
        assert_eq!(g_of_k(3).unwrap(), BigUint::from(42u32));
        assert_eq!(g_of_k(4).unwrap(), BigUint::from(24024u32));
        assert!(g_of_k(0).is_err());
    }

    #[test]
    fn ln_barnes_real_matches_integers() {
        for n in 1..8u32 {
            let v = ln_barnes_g1p(n as f64);
            assert!((v - barnes_g(n + 1).ln()).abs() < 1e-10, "{n}");
        }
        // G(1/2) = 0.603244281209446..., G(3/2) = Γ(1/2)·G(1/2).
        assert!((ln_barnes_g1p(-0.5).exp() - 0.603_244_281_209_446).abs() < 1e-12);
        let g32 = PI.sqrt() * 0.603_244_281_209_446;
        assert!((ln_barnes_g1p(0.5).exp() - g32).abs() < 1e-12);
    }

    #[test]
    fn e1_examples() {
        // Oracle: alternating series summed to 60 terms.
        let mut s = 0.0;
        let mut t = 1.0;
        for n in 1..=60 {
            t *= -1.0 / n as f64;
            s += t / n as f64;
        }
        let oracle = -EULER_GAMMA - s;
        assert!((e1(c(1.0, 0.0)).unwrap().re - oracle).abs() < 1e-14);
        assert!((oracle - 0.219_383_934_395_520_3).abs() < 1e-15);
        let z = c(1e-8, 0.0);
        let small = e1(z).unwrap() + z.ln() + EULER_GAMMA;
        // The remainder is z − z²/4 + …, so it sits just under 1e-8.
        assert!(small.norm() < 1e-8 + 1e-14);
        assert!((small - z).norm() < 1e-14);
        assert!((e1(c(0.0, 2.0)).unwrap().re + ci(2.0).unwrap()).abs() < 1e-12);
        assert!(e1(c(0.0, 0.0)).is_err());
        // E₁(10) = 4.156968929685324e-6
        assert!((e1(c(10.0, 0.0)).unwrap().re - 4.156_968_929_685_324e-6).abs() < 1e-18);
    }

    #[test]
    fn e1_branch_switch_continuity() {
        for k in 0..32 {
            let th = -3.0 + 6.0 * k as f64 / 31.0;
            let z = Complex64::from_polar(4.0, th * 0.7);
            let a = e1_series(z);
            if let Some(b) = e1_cf(z, 5000) {
                assert!((a - b).norm() < 1e-11, "z={z} {a} {b}");
            }
        }
    }

    #[test]
    fn e1_negative_axis_branch() {
        // E₁(−x ± i0) = −Ei(x) ∓ iπ.
        let v = e1(c(-1.0, 0.0)).unwrap();
        assert!((v.re + 1.895_117_816_355_936_8).abs() < 1e-13);
        assert!((v.im + PI).abs() < 1e-13);
    }

    #[test]
    fn ci_examples() {
        assert!((ci(1.0).unwrap() - 0.337_403_922_900_968_1).abs() < 1e-14);
        assert!(ci(1000.0).unwrap().abs() < 1.1e-3);
        assert!(ci(0.0).is_err() && ci(-1.0).is_err());
        for x in [4.0, 5.5, 10.0, 37.0, 123.4, 1e3, 1e5, 1e6] {
            let a = ci(x).unwrap();
            let b = -e1(c(0.0, x)).unwrap().re;
            assert!((a - b).abs() < 1e-12, "x={x}: {a} vs {b}");
            let s = PI / 2.0 + e1(c(0.0, x)).unwrap().im;
            assert!((si(x) - s).abs() < 1e-12, "Si x={x}");
        }
        // Branch switch at 4: series and auxiliary forms agree.
        let (f, g) = ci_si_auxiliary(4.0);
        let aux = f * 4f64.sin() - g * 4f64.cos();
        let mut sum = 0.0;
        let mut term = 1.0;
        for n in 1..60 {
            term *= -16.0 / ((2 * n - 1) * (2 * n)) as f64;
            sum += term / (2 * n) as f64;
        }
        assert!((aux - (EULER_GAMMA + 4f64.ln() + sum)).abs() < 1e-11);
    }

    #[test]
    fn euler_constant_checks() {
        assert!((euler_gamma().exp() - 1.781_072_417_990_198).abs() < 1e-14);
        let n = 1_000_000;
        let h: f64 = (1..=n).map(|j| 1.0 / j as f64).sum();
        assert!(((h - (n as f64).ln()) - EULER_GAMMA).abs() < 1e-6);
    }

    #[test]
    fn bernoulli_values() {
        assert!((bernoulli_2m(1) - 1.0 / 6.0).abs() < 1e-15);
        assert!((bernoulli_2m(2) + 1.0 / 30.0).abs() < 1e-15);
        assert!((bernoulli_2m(6) - (-691.0 / 2730.0)).abs() < 1e-14);
        assert!((bernoulli_2m(10) - (-174611.0 / 330.0)).abs() < 1e-10);
    }
}
