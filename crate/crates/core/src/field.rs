//! Quadratic-field arithmetic: discriminants, the Kronecker character,
//! prime splitting, ideal counts and character sums.

use crate::error::{LabError, Result};
use crate::primes::{factorize, primes_up_to};
use crate::special::bernoulli_over_factorial;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Behaviour of a rational prime in a quadratic field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum SplitType {
    Split,
    Inert,
    Ramified,
}

/// A quadratic field described by its fundamental discriminant.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticField {
    pub d_k: i64,
    pub q: u64,
    pub parity_a: u8,
    pub r1: u8,
    pub r2: u8,
    chi_table: Vec<i8>,
}

/// One prime ideal, recorded through its norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimeIdeal {
    pub norm: u64,
    pub p: u64,
    pub split: SplitType,
    pub log_norm: f64,
}

/// Prime ideals of norm at most `cutoff`, sorted by norm.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimeIdealStream {
    pub ideals: Vec<PrimeIdeal>,
    pub cutoff: f64,
}

fn squarefree(n: u64) -> Option<u64> {
    factorize(n)
        .into_iter()
        .find(|&(_, e)| e > 1)
        .map(|(p, _)| p)
}

/// Checks that `d` is a fundamental discriminant, describing the failure otherwise.
pub fn validate_fundamental(d: i64) -> std::result::Result<(), String> {
    if d == 0 || d == 1 {
        return Err(format!("{d} is not a quadratic discriminant"));
    }
    match d.rem_euclid(4) {
        1 => match squarefree(d.unsigned_abs()) {
            Some(p) => Err(format!("d = {d} ≡ 1 mod 4 but is divisible by {p}²")),
            None => Ok(()),
        },
        0 => {
            let m = d / 4;
            let r = m.rem_euclid(4);
            if r != 2 && r != 3 {
                return Err(format!(
                    "d = {d} ≡ 0 mod 4 but d/4 = {m} ≡ {r} mod 4 (need 2 or 3)"
                ));
            }
            match squarefree(m.unsigned_abs()) {
                Some(p) => Err(format!("d/4 = {m} is divisible by {p}²")),
                None => Ok(()),
            }
        }
        r => Err(format!("d = {d} ≡ {r} mod 4 (need 0 or 1)")),
    }
}

/// Jacobi symbol (a/n) for odd positive n.
fn jacobi(a: i64, n: u64) -> i8 {
    debug_assert!(n % 2 == 1);
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut n = n;
    let mut sign = 1i8;
    while a != 0 {
        while a.is_multiple_of(2) {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        a %= n;
    }
    if n == 1 {
        sign
    } else {
        0
    }
}

fn kronecker_unchecked(d: i64, n: u64) -> i8 {
    let mut n = n;
    let mut val = 1i8;
    while n.is_multiple_of(2) {
        n /= 2;
        match d.rem_euclid(8) {
            1 | 7 => {}
            3 | 5 => val = -val,
            _ => return 0,
        }
    }
    val * jacobi(d, n)
}

/// Kronecker symbol (d/n) for a fundamental discriminant `d` and `n ≥ 1`.
pub fn kronecker(d: i64, n: u64) -> Result<i8> {
    validate_fundamental(d).map_err(|_| LabError::InvalidDiscriminant(d))?;
    if n == 0 {
        return Err(LabError::Domain("kronecker symbol needs n >= 1".into()));
    }
    Ok(kronecker_unchecked(d, n))
}

/// Builds the field with discriminant `d_k`.
pub fn build_field(d_k: i64) -> Result<QuadraticField> {
    validate_fundamental(d_k)
        .map_err(|msg| LabError::InvalidParameter(format!("invalid discriminant {d_k}: {msg}")))?;
    let abs = d_k.unsigned_abs();
    let q = if d_k.rem_euclid(4) == 2 { 4 * abs } else { abs };
    let chi_table = (0..q)
        .map(|n| {
            if n == 0 {
                0
            } else {
                kronecker_unchecked(d_k, n)
            }
        })
        .collect();
    let (parity_a, r1, r2) = if d_k > 0 { (0, 2, 0) } else { (1, 0, 2) };
    Ok(QuadraticField {
        d_k,
        q,
        parity_a,
        r1,
        r2,
        chi_table,
    })
}

impl QuadraticField {
    /// χ(n) via the period table.
    #[inline]
    pub fn chi(&self, n: u64) -> i8 {
        self.chi_table[(n % self.q) as usize]
    }

    /// χ(n) for an arbitrary integer, using χ(−1) = (−1)^a.
    pub fn chi_signed(&self, n: i64) -> i8 {
        let v = self.chi(n.unsigned_abs());
        if n < 0 && self.parity_a == 1 {
            -v
        } else {
            v
        }
    }

    /// Degree of the field over the rationals.
    pub fn degree(&self) -> u32 {
        2
    }

    /// Primes dividing the discriminant.
    pub fn ramified_primes(&self) -> Vec<u64> {
        factorize(self.d_k.unsigned_abs())
            .into_iter()
            .map(|(p, _)| p)
            .collect()
    }

    pub fn split_type(&self, p: u64) -> SplitType {
        split_type(p, self)
    }
}

/// Splitting behaviour of the rational prime `p`.
pub fn split_type(p: u64, f: &QuadraticField) -> SplitType {
    match f.chi(p) {
        1 => SplitType::Split,
        -1 => SplitType::Inert,
        _ => SplitType::Ramified,
    }
}

/// Number of integral ideals of norm `n`: Σ_{d|n} χ(d).
pub fn ideal_count(n: u64, f: &QuadraticField) -> u64 {
    assert!(n >= 1, "ideal_count needs n >= 1");
    factorize(n)
        .into_iter()
        .map(|(p, e)| match split_type(p, f) {
            SplitType::Split => e as u64 + 1,
            SplitType::Inert => u64::from(e % 2 == 0),
            SplitType::Ramified => 1,
        })
        .product()
}

/// Ideal counts f_K(1..=n) by the divisor convolution 1 * χ; index 0 is unused.
pub fn ideal_counts_up_to(n: usize, f: &QuadraticField) -> Vec<u32> {
    let mut out = vec![0u32; n + 1];
    for d in 1..=n {
        let c = f.chi(d as u64);
        if c == 0 {
            continue;
        }
        let mut m = d;
        while m <= n {
            out[m] = (out[m] as i64 + c as i64) as u32;
            m += d;
        }
    }
    out
}

/// Prime ideals of norm at most `x`, sorted by norm and then by rational prime.
pub fn prime_ideal_norms(f: &QuadraticField, x: f64) -> PrimeIdealStream {
    let mut ideals = Vec::new();
    let bound = if x.is_finite() && x >= 2.0 {
        x.floor() as u64
    } else {
        1
    };
    for p in primes_up_to(bound) {
        let st = split_type(p, f);
        let (norm, mult) = match st {
            SplitType::Split => (p, 2),
            SplitType::Ramified => (p, 1),
            SplitType::Inert => (p * p, 1),
        };
        if norm <= bound {
            for _ in 0..mult {
                ideals.push(PrimeIdeal {
                    norm,
                    p,
                    split: st,
                    log_norm: (norm as f64).ln(),
                });
            }
        }
    }
    ideals.sort_by(|a, b| a.norm.cmp(&b.norm).then(a.p.cmp(&b.p)));
    PrimeIdealStream { ideals, cutoff: x }
}

/// L(1, χ) from complete period blocks with an Euler–Maclaurin tail.
pub fn l_one_chi(f: &QuadraticField) -> f64 {
    let q = f.q as f64;
    let blocks = 64u64;
    let mut head = 0.0;
    for n in 1..blocks * f.q {
        let c = f.chi(n);
        if c != 0 {
            head += c as f64 / n as f64;
        }
    }
    // Σ_{b≥B} 1/(q(b+w)) summed against χ(a); the logarithmic parts cancel over a full period.
    let b = blocks as f64;
    let mut tail = 0.0;
    for a in 1..f.q {
        let c = f.chi(a);
        if c == 0 {
            continue;
        }
        let w = b + a as f64 / q;
        let mut s = -w.ln() + 0.5 / w;
        let mut pw = 1.0 / (w * w);
        for m in 1..=12 {
            s += bernoulli_over_factorial(m) * factorial_ratio(m) * pw;
            pw /= w * w;
        }
        tail += c as f64 * s;
    }
    head + tail / q
}

// (2m−1)!, so that B_{2m}/(2m)! · (2m−1)! = B_{2m}/(2m).
fn factorial_ratio(m: u32) -> f64 {
    (1..2 * m).map(|j| j as f64).product()
}

/// Gauss sum Σ_{n mod q} χ(n) e(n/q).
pub fn gauss_sum(f: &QuadraticField) -> Complex64 {
    let q = f.q as f64;
    (1..f.q)
        .map(|n| f.chi(n) as f64 * Complex64::from_polar(1.0, 2.0 * PI * n as f64 / q))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Legendre symbol by Euler's criterion; independent of the reciprocity code.
    fn legendre_oracle(a: i64, p: u64) -> i8 {
        let a = a.rem_euclid(p as i64) as u128;
        if a == 0 {
            return 0;
        }
        let p128 = p as u128;
        let mut r = 1u128;
        let mut b = a;
        let mut e = (p128 - 1) / 2;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % p128;
            }
            b = b * b % p128;
            e >>= 1;
        }
        if r == 1 {
            1
        } else {
            -1
        }
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker(-4, 1).unwrap(), 1);
        assert_eq!(kronecker(-4, 3).unwrap(), -1);
        assert_eq!(kronecker(-4, 2).unwrap(), 0);
        assert!(kronecker(3, 5).is_err());
        assert!(kronecker(-12, 5).is_err());
        assert!(kronecker(-4, 0).is_err());
    }

    #[test]
    fn kronecker_matches_euler_criterion_at_odd_primes() {
        for &d in &[-4i64, -3, 5, 8, -8, 12, -7, 13, -15, 21, 28, -20] {
            for p in primes_up_to(400).into_iter().filter(|&p| p > 2) {
                assert_eq!(
                    kronecker(d, p).unwrap(),
                    legendre_oracle(d, p),
                    "d={d} p={p}"
                );
            }
        }
    }

    #[test]
    fn build_field_examples() {
        let f = build_field(-4).unwrap();
        assert_eq!((f.q, f.parity_a, f.r1, f.r2), (4, 1, 0, 2));
        let f = build_field(5).unwrap();
        assert_eq!((f.q, f.parity_a, f.r1, f.r2), (5, 0, 2, 0));
        assert_eq!(build_field(-3).unwrap().q, 3);
        for bad in [0, 1, 2, 3, 9, -12, 20, 45, -1] {
            assert!(build_field(bad).is_err(), "{bad}");
        }
        let msg = build_field(-12).unwrap_err().to_string();
        assert!(msg.contains("mod 4"), "{msg}");
        let msg = build_field(45).unwrap_err().to_string();
        assert!(msg.contains("3²"), "{msg}");
    }

    #[test]
    fn split_types() {
        let f = build_field(-4).unwrap();
        assert_eq!(split_type(5, &f), SplitType::Split);
        assert_eq!(split_type(3, &f), SplitType::Inert);
        assert_eq!(split_type(2, &f), SplitType::Ramified);
    }

    #[test]
    fn ideal_count_examples() {
        let f = build_field(-4).unwrap();
        assert_eq!(ideal_count(1, &f), 1);
        assert_eq!(ideal_count(5, &f), 2);
        assert_eq!(ideal_count(3, &f), 0);
        let sieve = ideal_counts_up_to(2000, &f);
        for n in 1..=2000u64 {
            let oracle: i64 = (1..=n)
                .filter(|d| n % d == 0)
                .map(|d| f.chi(d) as i64)
                .sum();
            assert_eq!(sieve[n as usize] as i64, oracle);
            assert_eq!(ideal_count(n, &f) as i64, oracle);
        }
    }

    #[test]
    fn prime_ideal_norm_examples() {
        let f = build_field(-4).unwrap();
        let norms: Vec<u64> = prime_ideal_norms(&f, 5.0)
            .ideals
            .iter()
            .map(|i| i.norm)
            .collect();
        assert_eq!(norms, vec![2, 5, 5]);
        let norms: Vec<u64> = prime_ideal_norms(&f, 10.0)
            .ideals
            .iter()
            .map(|i| i.norm)
            .collect();
        assert_eq!(norms.iter().filter(|&&n| n == 9).count(), 1);
        let s = prime_ideal_norms(&f, 2.0);
        assert!(s.ideals.iter().all(|i| i.p == 2));
        assert!(prime_ideal_norms(&f, 1.5).ideals.is_empty());
    }

    #[test]
    fn l_one_examples() {
        let f = build_field(-4).unwrap();
        assert!((l_one_chi(&f) - PI / 4.0).abs() < 1e-13);
        let f = build_field(-3).unwrap();
        assert!((l_one_chi(&f) - PI / (3.0 * 3f64.sqrt())).abs() < 1e-13);
        let f = build_field(5).unwrap();
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((l_one_chi(&f) - 2.0 * golden.ln() / 5f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn gauss_sum_examples() {
        let g = gauss_sum(&build_field(-4).unwrap());
        assert!((g - Complex64::new(0.0, 2.0)).norm() < 1e-12);
        let g = gauss_sum(&build_field(5).unwrap());
        assert!((g - Complex64::new(5f64.sqrt(), 0.0)).norm() < 1e-12);
        for d in [-3i64, -4, 5, 8] {
            let f = build_field(d).unwrap();
            let g = gauss_sum(&f);
            assert!((g.norm_sqr() - f.q as f64).abs() < 1e-10);
            let sign = if f.parity_a == 1 { -1.0 } else { 1.0 };
            // G(χ̄) = G(χ) for real χ, so G·G = (−1)^a q.
            assert!((g * g - Complex64::new(sign * f.q as f64, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn orthogonality_and_multiplicativity() {
        for d in [-3i64, -4, 5, 8, -7, 12, -8, 13] {
            let f = build_field(d).unwrap();
            let s: i64 = (0..f.q).map(|n| f.chi(n) as i64).sum();
            assert_eq!(s, 0);
            for n in 1..=500u64 {
                for m in 1..=500u64 {
                    assert_eq!(f.chi(n * m), f.chi(n) * f.chi(m));
                }
            }
        }
    }

    #[test]
    fn ideal_count_mean_is_residue() {
        let f = build_field(-4).unwrap();
        let n = 1_000_000usize;
        let total: u64 = ideal_counts_up_to(n, &f).iter().map(|&c| c as u64).sum();
        let ratio = total as f64 / (l_one_chi(&f) * n as f64);
        assert!((ratio - 1.0).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn prime_ideals_match_euler_factorisation() {
        // The Dirichlet coefficient at N of Π (1 − N(p)^{-s})^{-1} must equal f_K(N).
        let f = build_field(-4).unwrap();
        let limit = 10_000usize;
        let mut coeffs = vec![0i64; limit + 1];
        coeffs[1] = 1;
        for ideal in prime_ideal_norms(&f, limit as f64).ideals {
            let n = ideal.norm as usize;
            let mut m = n;
            while m <= limit {
                coeffs[m] += coeffs[m / n];
                m += n;
            }
        }
        let fk = ideal_counts_up_to(limit, &f);
        for m in 1..=limit {
            assert_eq!(coeffs[m], fk[m] as i64, "norm {m}");
        }
    }
}
