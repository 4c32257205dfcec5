//! Arithmetic leading constants: generalized divisor coefficients, the
//! Euler products a(k), the θ-integral local factors and the ideal Mertens product.

use crate::error::{LabError, Result};
use crate::field::{l_one_chi, QuadraticField, SplitType};
use crate::lfun::{lchi_eval, zeta_minus_one};
use crate::primes::{mobius, primes_up_to};
use crate::special::EULER_GAMMA;
use num_complex::Complex64;
use std::f64::consts::PI;

/// d_k(p^m) = Γ(m+k)/(m!Γ(k)).
pub fn d_k(m: u32, k: f64) -> f64 {
    (1..=m).fold(1.0, |acc, j| acc * (j as f64 - 1.0 + k) / j as f64)
}

/// Decomposition data (g, e, f) of a rational prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalSplit {
    pub g: u32,
    pub e: u32,
    pub f: u32,
}

/// How rational primes decompose in the field.
#[derive(Debug, Clone)]
pub enum GaloisSplitData {
    /// Q itself: every prime has g = e = f = 1.
    Rational,
    Quadratic(QuadraticField),
}

impl GaloisSplitData {
    pub fn degree(&self) -> u32 {
        match self {
            Self::Rational => 1,
            Self::Quadratic(_) => 2,
        }
    }

    pub fn local(&self, p: u64) -> LocalSplit {
        match self {
            Self::Rational => LocalSplit { g: 1, e: 1, f: 1 },
            Self::Quadratic(fld) => match fld.split_type(p) {
                SplitType::Split => LocalSplit { g: 2, e: 1, f: 1 },
                SplitType::Inert => LocalSplit { g: 1, e: 1, f: 2 },
                SplitType::Ramified => LocalSplit { g: 1, e: 2, f: 1 },
            },
        }
    }

    fn ramified(&self) -> Vec<u64> {
        match self {
            Self::Rational => Vec::new(),
            Self::Quadratic(f) => f.ramified_primes(),
        }
    }
}

/// A truncated Euler product with a bound on the omitted primes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EulerProductValue {
    pub value: f64,
    pub cutoff: u64,
    pub tail_bound: f64,
}

/// Σ_m d_K(m)² y^m.
fn divisor_square_series(big_k: f64, y: f64) -> f64 {
    let mut s = 1.0;
    let mut d = 1.0;
    let mut pw = 1.0;
    for m in 1..100_000u32 {
        d *= (m as f64 - 1.0 + big_k) / m as f64;
        pw *= y;
        let term = d * d * pw;
        s += term;
        if term < 1e-18 * s && m as f64 > 2.0 * big_k {
            break;
        }
    }
    s
}

/// Σ_{m≥1} d_K(m)² y^m, accurate when y is small.
fn divisor_square_series_minus_one(big_k: f64, y: f64) -> f64 {
    if y > 0.01 {
        return divisor_square_series(big_k, y) - 1.0;
    }
    let mut s = 0.0;
    let mut d = 1.0;
    let mut pw = 1.0;
    for m in 1..10_000u32 {
        d *= (m as f64 - 1.0 + big_k) / m as f64;
        pw *= y;
        let term = d * d * pw;
        s += term;
        if term.abs() <= 1e-18 * s.abs() || term == 0.0 {
            break;
        }
    }
    s
}

/// log of the per-rational-prime factor (1 − p^{−f})^{g·n·k²} Σ_m d_{gk}(m)² p^{−fm}.
fn log_local_factor(p: u64, k: f64, ls: LocalSplit, n: u32) -> f64 {
    let y = (p as f64).powi(-(ls.f as i32));
    let expo = (ls.g * n) as f64 * k * k;
    expo * (-y).ln_1p() + divisor_square_series_minus_one(ls.g as f64 * k, y).ln_1p()
}

/// The local factor of a(k) at the rational prime p, grouping the g ideals above p.
pub fn local_factor(p: u64, k: f64, data: &GaloisSplitData) -> f64 {
    log_local_factor(p, k, data.local(p), data.degree()).exp()
}

/// Taylor coefficients of y ↦ A·log(1−y) + log Σ_m d_K(m)² y^m.
fn log_factor_coeffs(a: f64, big_k: f64, terms: usize) -> Vec<f64> {
    let mut c = vec![1.0; terms + 1];
    let mut d = 1.0;
    for (m, cm) in c.iter_mut().enumerate().skip(1) {
        d *= (m as f64 - 1.0 + big_k) / m as f64;
        *cm = d * d;
    }
    let mut l = vec![0.0; terms + 1];
    for n in 1..=terms {
        let mut acc = n as f64 * c[n];
        for i in 1..n {
            acc -= i as f64 * l[i] * c[n - i];
        }
        l[n] = acc / n as f64;
    }
    for (j, v) in l.iter_mut().enumerate().skip(1) {
        *v -= a / j as f64;
    }
    l
}

/// Σ_p p^{−s} for real s ≥ 2 via Möbius inversion of log ζ.
pub(crate) fn prime_zeta(s: f64) -> f64 {
    let mut acc = 0.0;
    for n in 1..64u64 {
        let mu = mobius(n);
        if mu == 0 {
            continue;
        }
        let z1 = zeta_minus_one(n as f64 * s);
        if z1 < 1e-300 {
            break;
        }
        acc += mu as f64 / n as f64 * z1.ln_1p();
    }
    acc
}

/// Σ_p χ(p) p^{−s} for real s ≥ 2.
pub(crate) fn prime_zeta_chi(s: f64, f: &QuadraticField) -> f64 {
    let ram = f.ramified_primes();
    let mut acc = 0.0;
    for n in 1..64u64 {
        let mu = mobius(n);
        let ns = n as f64 * s;
        if 2f64.powf(-ns) < 1e-300 {
            break;
        }
        if mu == 0 {
            continue;
        }
        let log_l = if n % 2 == 1 {
            let v = if ns > 60.0 {
                direct_l_minus_one(ns, f)
            } else {
                lchi_eval(Complex64::new(ns, 0.0), f).re - 1.0
            };
            v.ln_1p()
        } else {
            zeta_minus_one(ns).ln_1p()
                + ram
                    .iter()
                    .map(|&p| (-(p as f64).powf(-ns)).ln_1p())
                    .sum::<f64>()
        };
        acc += mu as f64 / n as f64 * log_l;
    }
    acc
}

fn direct_l_minus_one(s: f64, f: &QuadraticField) -> f64 {
    (2..64u64)
        .rev()
        .map(|n| f.chi(n) as f64 * (n as f64).powf(-s))
        .sum()
}

/// Prime head cutoff used by the Euler products.
pub const EULER_CUTOFF: u64 = 1_000_000;

/// a(k) = Π_p (1 − p^{−f})^{g n k²} Σ_m d_{gk}(m)² p^{−fm}.
pub fn a_k_galois(k: f64, data: &GaloisSplitData, tol: f64) -> Result<EulerProductValue> {
    a_k_galois_cut(k, data, tol, EULER_CUTOFF)
}

/// As `a_k_galois` with an explicit prime cutoff.
pub fn a_k_galois_cut(
    k: f64,
    data: &GaloisSplitData,
    tol: f64,
    cutoff: u64,
) -> Result<EulerProductValue> {
    if !(k > -0.5) {
        return Err(LabError::Domain(format!(
            "a(k) diverges for k <= -1/2, got {k}"
        )));
    }
    if !(tol > 0.0) {
        return Err(LabError::InvalidParameter(
            "tolerance must be positive".into(),
        ));
    }
    if k == 0.0 {
        return Ok(EulerProductValue {
            value: 1.0,
            cutoff,
            tail_bound: 0.0,
        });
    }
    let n = data.degree();
    let primes = primes_up_to(cutoff);
    let mut log_head = 0.0;
    let mut heads = [0.0f64; 2];
    for &p in &primes {
        let ls = data.local(p);
        log_head += log_local_factor(p, k, ls, n);
        let x2 = 1.0 / (p as f64 * p as f64);
        match (data, ls.g, ls.e) {
            (_, _, 2) => {}
            (GaloisSplitData::Rational, ..) | (_, 2, _) => heads[0] += x2,
            _ => heads[1] += x2,
        }
    }
    for p in data.ramified() {
        if p > cutoff {
            log_head += log_local_factor(p, k, data.local(p), n);
        }
    }
    // Classes of unramified primes beyond the cutoff: (split-like, inert) with their Taylor data in x = 1/p.
    let terms = 40;
    let (classes, sums2): (Vec<Vec<f64>>, [f64; 2]) = match data {
        GaloisSplitData::Rational => {
            let b = log_factor_coeffs(k * k, k, terms);
            (vec![b], [prime_zeta(2.0) - heads[0], 0.0])
        }
        GaloisSplitData::Quadratic(f) => {
            let split = log_factor_coeffs(4.0 * k * k, 2.0 * k, terms);
            let inert_y = log_factor_coeffs(2.0 * k * k, k, terms / 2);
            let mut inert = vec![0.0; terms + 1];
            for (j, v) in inert_y.iter().enumerate() {
                inert[2 * j] = *v;
            }
            let ram2: f64 = f
                .ramified_primes()
                .iter()
                .map(|&p| (p as f64).powi(-2))
                .sum();
            let all = prime_zeta(2.0) - ram2;
            let chi = prime_zeta_chi(2.0, f);
            let split_sum = 0.5 * (all + chi) - heads[0];
            let inert_sum = 0.5 * (all - chi) - heads[1];
            (vec![split, inert], [split_sum, inert_sum])
        }
    };
    let p0 = cutoff as f64;
    let mut log_tail = 0.0;
    let mut bound = 0.0;
    for (ci, b) in classes.iter().enumerate() {
        log_tail += b[2] * sums2[ci];
        bound += b[2].abs() * 1e-16 * (1.0 + p0.ln());
        for (j, bj) in b.iter().enumerate().skip(3) {
            let tail_j = 1.26 * j as f64 / (j as f64 - 1.0) * p0.powf(1.0 - j as f64) / p0.ln();
            bound += bj.abs() * tail_j;
        }
        debug_assert!(b[1].abs() < 1e-9);
    }
    let log_value = log_head + log_tail;
    let value = log_value.exp();
    let rounding = (primes.len() as f64).sqrt() * 4e-16 * log_value.abs().max(1.0);
    let tail_bound = value * ((bound + rounding).exp_m1());
    if tail_bound >= tol {
        return Err(LabError::TailTooLarge {
            bound: tail_bound,
            tol,
        });
    }
    Ok(EulerProductValue {
        value,
        cutoff,
        tail_bound,
    })
}

/// a(k) for a quadratic field as the product over split, inert and ramified primes.
pub fn a_k_quadratic(k: u32, f: &QuadraticField, tol: f64) -> Result<EulerProductValue> {
    a_k_galois(k as f64, &GaloisSplitData::Quadratic(f.clone()), tol)
}

/// Closed-form local factor for a quadratic field, written per splitting type.
pub fn quadratic_local_factor(p: u64, st: SplitType, k: u32) -> f64 {
    let x = 1.0 / p as f64;
    let kk = (k * k) as f64;
    let kf = k as f64;
    match st {
        SplitType::Split => (1.0 - x).powf(4.0 * kk) * divisor_square_series(2.0 * kf, x),
        SplitType::Inert => (1.0 - x * x).powf(2.0 * kk) * divisor_square_series(kf, x * x),
        SplitType::Ramified => (1.0 - x).powf(2.0 * kk) * divisor_square_series(kf, x),
    }
}

/// Prefactor multiplying the θ-integral in the local factor of b(k).
pub fn theta_prefactor(p: u64, st: SplitType, k: u32) -> f64 {
    let x = 1.0 / p as f64;
    let kk = (k * k) as f64;
    match st {
        SplitType::Split => (1.0 - x).powf(4.0 * kk),
        SplitType::Inert => (1.0 - x * x).powf(2.0 * kk),
        SplitType::Ramified => (1.0 - x).powf(2.0 * kk),
    }
}

/// B_p(0,0) = ∫₀¹ |1 − e(θ)p^{−1/2}|^{−2k} |1 − χ(p)e(θ)p^{−1/2}|^{−2k} dθ by periodic trapezoid.
/// The tolerance is relative once the value exceeds 1.
pub fn b_p_theta(p: u64, st: SplitType, k: u32, tol: f64) -> Result<f64> {
    let r = 1.0 / (p as f64).sqrt();
    let chi = match st {
        SplitType::Split => 1.0,
        SplitType::Inert => -1.0,
        SplitType::Ramified => 0.0,
    };
    let integrand = |theta: f64| {
        let c = (2.0 * PI * theta).cos();
        let a = 1.0 - 2.0 * r * c + r * r;
        let b = 1.0 - 2.0 * chi * r * c + chi * chi * r * r;
        (a * b).powi(-(k as i32))
    };
    let trapezoid =
        |n: usize| (0..n).map(|j| integrand(j as f64 / n as f64)).sum::<f64>() / n as f64;
    let mut n = 8usize;
    let mut prev = trapezoid(n);
    while n < 1 << 22 {
        n *= 2;
        let cur = trapezoid(n);
        if (cur - prev).abs() < tol / 4.0 * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(LabError::NoConvergence(format!(
        "theta integral at p={p} not converged with {n} nodes"
    )))
}

/// Per-prime comparison of the closed-form factor with the θ-integral.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LocalComparison {
    pub p: u64,
    pub split: SplitType,
    pub closed_form: f64,
    pub theta_integral: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AEqualsBReport {
    pub k: u32,
    pub prime_cut: u64,
    pub max_diff: f64,
    pub worst_prime: u64,
    pub rows: Vec<LocalComparison>,
}

/// Compares the two local forms for all p ≤ prime_cut.
pub fn a_equals_b_check(f: &QuadraticField, k: u32, prime_cut: u64) -> Result<AEqualsBReport> {
    if !(1..=3).contains(&k) {
        return Err(LabError::InvalidParameter(format!(
            "k must be 1..3, got {k}"
        )));
    }
    let mut rows = Vec::new();
    let (mut max_diff, mut worst_prime) = (0.0f64, 0);
    for p in primes_up_to(prime_cut) {
        let st = f.split_type(p);
        let closed_form = quadratic_local_factor(p, st, k);
        let theta_integral = theta_prefactor(p, st, k) * b_p_theta(p, st, k, 1e-13)?;
        let d = (closed_form - theta_integral).abs();
        if d > max_diff {
            max_diff = d;
            worst_prime = p;
        }
        rows.push(LocalComparison {
            p,
            split: st,
            closed_form,
            theta_integral,
        });
    }
    Ok(AEqualsBReport {
        k,
        prime_cut,
        max_diff,
        worst_prime,
        rows,
    })
}

/// Π_{N(p)≤X} (1 − 1/N(p))^{−1} together with its prediction residue·e^γ·log X.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MertensValue {
    pub product: f64,
    pub predicted: f64,
}

impl MertensValue {
    pub fn ratio(&self) -> f64 {
        self.product / self.predicted
    }
}

pub fn mertens_split_data(data: &GaloisSplitData, x: f64) -> Result<MertensValue> {
    if !(x >= 10.0) {
        return Err(LabError::InvalidParameter(format!(
            "Mertens product needs X >= 10, got {x}"
        )));
    }
    let mut log_prod = 0.0;
    for p in primes_up_to(x as u64) {
        let ls = data.local(p);
        let norm = (p as f64).powi(ls.f as i32);
        if norm <= x {
            log_prod -= ls.g as f64 * (-1.0 / norm).ln_1p();
        }
    }
    let residue = match data {
        GaloisSplitData::Rational => 1.0,
        GaloisSplitData::Quadratic(f) => l_one_chi(f),
    };
    Ok(MertensValue {
        product: log_prod.exp(),
        predicted: residue * EULER_GAMMA.exp() * x.ln(),
    })
}

/// The ideal Mertens product for a quadratic field.
pub fn mertens_ideal(f: &QuadraticField, x: f64) -> Result<MertensValue> {
    mertens_split_data(&GaloisSplitData::Quadratic(f.clone()), x)
}

/// Residue of ζ_K at s = 1, which is L(1,χ).
pub fn residue_chi_k(f: &QuadraticField) -> f64 {
    l_one_chi(f)
}
