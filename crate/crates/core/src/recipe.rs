//! Recipe machinery: permutation sums and their contour-integral form,
//! leading constants from Barnes G, moment predictions for products of
//! primitive L-functions, and coefficient-sum diagnostics.

use crate::error::{LabError, Result};
use crate::euler::{prime_zeta, prime_zeta_chi, EulerProductValue, EULER_CUTOFF};
use crate::field::{
    build_field, ideal_counts_up_to, kronecker, l_one_chi, validate_fundamental, QuadraticField,
};
use crate::lfun::zeta_eval;
use crate::primes::{factorize, primes_up_to};
use crate::quad::poly_fit;
use crate::special::{barnes_g_exact, g_of_k};
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// All τ of {1..2k} increasing on {1..k} and on {k+1..2k}, in lexicographic order.
pub fn xi_permutations(k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > 6 {
        return Err(LabError::InvalidParameter(format!(
            "permutation sums need 1 <= k <= 6, got {k}"
        )));
    }
    let n = 2 * k;
    let mut out = Vec::new();
    let mut pick: Vec<usize> = (1..=k).collect();
    loop {
        let rest = (1..=n).filter(|v| !pick.contains(v));
        out.push(pick.iter().copied().chain(rest).collect());
        let Some(i) = (0..k).rev().find(|&i| pick[i] < n - k + i + 1) else {
            break;
        };
        pick[i] += 1;
        for j in i + 1..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
    Ok(out)
}

/// The function f(s) with a simple pole of residue 1 at s = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ShiftKernel {
    /// 1/s + c.
    Reciprocal { c: f64 },
    /// ζ(1 + s).
    ZetaShift,
}

impl ShiftKernel {
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        match *self {
            Self::Reciprocal { c } => {
                if s == Complex64::new(0.0, 0.0) {
                    return Err(LabError::Domain("the shift kernel has a pole at 0".into()));
                }
                Ok(s.inv() + c)
            }
            Self::ZetaShift => zeta_eval(s + 1.0),
        }
    }
}

/// A weight F(a; b), symmetric within each half.
pub type ShiftWeight<'a> = &'a (dyn Fn(&[Complex64], &[Complex64]) -> Complex64 + Sync);

fn unit_weight(_: &[Complex64], _: &[Complex64]) -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Both sides of the permutation-sum/contour-integral identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub nodes: usize,
    pub refinement_change: f64,
}

impl ContourCheck {
    pub fn discrepancy(&self) -> f64 {
        (self.lhs - self.rhs).norm()
    }
}

/// Σ_{τ∈Ξ} K(α_τ) against its 2k-fold contour-integral form, with F ≡ 1.
pub fn contour_sum_check(
    kernel: ShiftKernel,
    k: usize,
    shifts: &[Complex64],
    radius: Option<f64>,
) -> Result<ContourCheck> {
    contour_sum_check_weighted(kernel, &unit_weight, k, shifts, radius)
}

pub fn contour_sum_check_weighted(
    kernel: ShiftKernel,
    weight: ShiftWeight,
    k: usize,
    shifts: &[Complex64],
    radius: Option<f64>,
) -> Result<ContourCheck> {
    if k == 0 || k > 2 {
        return Err(LabError::InvalidParameter(
            "the contour check supports k = 1, 2".into(),
        ));
    }
    if shifts.len() != 2 * k {
        return Err(LabError::InvalidParameter(format!(
            "expected {} shifts, got {}",
            2 * k,
            shifts.len()
        )));
    }
    let big = shifts.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let r = radius.unwrap_or(2.0 * big + 0.05);
    if big > r / 2.0 {
        return Err(LabError::InvalidParameter(format!(
            "shifts up to {big} do not fit inside radius/2 = {}",
            r / 2.0
        )));
    }
    let mut lhs = Complex64::new(0.0, 0.0);
    for tau in xi_permutations(k)? {
        let a: Vec<Complex64> = tau[..k].iter().map(|&i| shifts[i - 1]).collect();
        let b: Vec<Complex64> = tau[k..].iter().map(|&i| shifts[i - 1]).collect();
        let mut term = weight(&a, &b);
        for ai in &a {
            for bj in &b {
                term *= kernel.eval(ai - bj)?;
            }
        }
        lhs += term;
    }
    let m = if k == 1 { 64 } else { 32 };
    let coarse = contour_integral(kernel, weight, k, shifts, r, m)?;
    let rhs = contour_integral(kernel, weight, k, shifts, r, m + m / 2)?;
    let change = (rhs - coarse).norm();
    if change > 1e-6 * rhs.norm().max(1.0) {
        return Err(LabError::NoConvergence(format!(
            "contour quadrature changed by {change:.2e} under refinement"
        )));
    }
    Ok(ContourCheck {
        lhs,
        rhs,
        nodes: m + m / 2,
        refinement_change: change,
    })
}

/// (−1)^k/(k!²(2πi)^{2k}) ∮⋯∮ F(z)Π f(z_i − z_{k+j}) Δ²(z)/Π(z_i − α_j) dz by the periodic trapezoid rule.
/// The second half of the variables runs on a circle 5/4 larger so that no two nodes coincide.
fn contour_integral(
    kernel: ShiftKernel,
    weight: ShiftWeight,
    k: usize,
    shifts: &[Complex64],
    r: f64,
    m: usize,
) -> Result<Complex64> {
    let n = 2 * k;
    let nodes: Vec<Vec<Complex64>> = (0..n)
        .map(|v| {
            let rv = if v < k { r } else { 1.25 * r };
            (0..m)
                .map(|i| Complex64::from_polar(rv, std::f64::consts::TAU * i as f64 / m as f64))
                .collect()
        })
        .collect();
    let measure: Vec<Vec<Complex64>> = nodes
        .iter()
        .map(|zs| {
            zs.iter()
                .map(|&z| z / shifts.iter().map(|&a| z - a).product::<Complex64>())
                .collect()
        })
        .collect();
    // pair[a][b][i*m+j] carries (z_a − z_b)², times f(z_a − z_b) across the halves.
    let mut pair = vec![vec![Vec::new(); n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let mut tab = Vec::with_capacity(m * m);
            for i in 0..m {
                for j in 0..m {
                    let d = nodes[a][i] - nodes[b][j];
                    let mut v = d * d;
                    if a < k && b >= k {
                        v *= kernel.eval(d)?;
                    }
                    tab.push(v);
                }
            }
            pair[a][b] = tab;
        }
    }
    let mut idx = vec![0usize; n];
    let mut za = vec![Complex64::new(0.0, 0.0); k];
    let mut zb = vec![Complex64::new(0.0, 0.0); k];
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        let mut term = Complex64::new(1.0, 0.0);
        for v in 0..n {
            term *= measure[v][idx[v]];
            if v < k {
                za[v] = nodes[v][idx[v]];
            } else {
                zb[v - k] = nodes[v][idx[v]];
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                term *= pair[a][b][idx[a] * m + idx[b]];
            }
        }
        total += term * weight(&za, &zb);
        let mut v = 0;
        while v < n {
            idx[v] += 1;
            if idx[v] < m {
                break;
            }
            idx[v] = 0;
            v += 1;
        }
        if v == n {
            break;
        }
    }
    let kf: f64 = (1..=k).map(|j| j as f64).product();
    let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
    Ok(total * (sign / (kf * kf) / (m as f64).powi(n as i32)))
}

/// The shift-free contour integral with weight e^{Σ u_j − u_{k+j}}, scaled by 2^{−k²}; equals G(k+1)²/G(2k+1).
pub fn leading_constant_gk(k: usize) -> Result<f64> {
    if k == 0 || k > 2 {
        return Err(LabError::InvalidParameter(
            "leading constants are computed for k = 1, 2".into(),
        ));
    }
    let weight = |a: &[Complex64], b: &[Complex64]| {
        (a.iter().sum::<Complex64>() - b.iter().sum::<Complex64>()).exp()
    };
    let kernel = ShiftKernel::Reciprocal { c: 0.0 };
    let zero = vec![Complex64::new(0.0, 0.0); 2 * k];
    let m = if k == 1 { 32 } else { 24 };
    let coarse = contour_integral(kernel, &weight, k, &zero, 1.0, m)?;
    let fine = contour_integral(kernel, &weight, k, &zero, 1.0, m + m / 2)?;
    if (fine - coarse).norm() > 1e-8 * fine.norm() {
        return Err(LabError::NoConvergence(
            "leading-constant quadrature did not settle".into(),
        ));
    }
    Ok(fine.re / 2f64.powi((k * k) as i32))
}

/// G(k+1)²/G(2k+1) from exact Barnes values.
pub fn barnes_ratio(k: u32) -> f64 {
    let g = barnes_g_exact(k + 1);
    big_ratio(&(&g * &g), &barnes_g_exact(2 * k + 1))
}

fn big_ratio(num: &BigUint, den: &BigUint) -> f64 {
    let shift = num.bits().max(den.bits()).saturating_sub(900);
    let n = (num >> shift).to_f64().unwrap_or(f64::INFINITY);
    let d = (den >> shift).to_f64().unwrap_or(f64::INFINITY);
    n / d
}

/// Source of a primitive factor's Dirichlet coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffSource {
    One,
    Kronecker(i64),
}

impl CoeffSource {
    pub fn value(&self, n: u64) -> i64 {
        match *self {
            Self::One => 1,
            Self::Kronecker(d) => kronecker(d, n).map(i64::from).unwrap_or(0),
        }
    }

    fn discriminant(&self) -> Option<i64> {
        match *self {
            Self::One => None,
            Self::Kronecker(d) => Some(d),
        }
    }
}

impl TryFrom<String> for CoeffSource {
    type Error = LabError;

    fn try_from(s: String) -> Result<Self> {
        let s = s.trim();
        if s == "one" {
            return Ok(Self::One);
        }
        let d: i64 = s
            .strip_prefix("kronecker:")
            .and_then(|d| d.trim().parse().ok())
            .ok_or_else(|| LabError::Config(format!("unknown coefficient source {s:?}")))?;
        validate_fundamental(d).map_err(|m| LabError::Config(format!("kronecker:{d}: {m}")))?;
        Ok(Self::Kronecker(d))
    }
}

impl From<CoeffSource> for String {
    fn from(c: CoeffSource) -> String {
        match c {
            CoeffSource::One => "one".into(),
            CoeffSource::Kronecker(d) => format!("kronecker:{d}"),
        }
    }
}

impl Serialize for CoeffSource {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&String::from(*self))
    }
}

impl<'de> Deserialize<'de> for CoeffSource {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        CoeffSource::try_from(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// One primitive factor L_j raised to e_j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub e: u32,
    #[serde(rename = "Q")]
    pub conductor: f64,
    pub d: u32,
    pub coeff: CoeffSource,
}

/// L(s) = Π L_j(s)^{e_j} over distinct primitive factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonPrimitiveSpec {
    pub factors: Vec<FactorSpec>,
}

impl NonPrimitiveSpec {
    /// ζ_K = ζ · L(·, χ).
    pub fn dedekind(f: &QuadraticField) -> Self {
        Self {
            factors: vec![
                FactorSpec {
                    e: 1,
                    conductor: 1.0,
                    d: 1,
                    coeff: CoeffSource::One,
                },
                FactorSpec {
                    e: 1,
                    conductor: f.q as f64,
                    d: 1,
                    coeff: CoeffSource::Kronecker(f.d_k),
                },
            ],
        }
    }

    pub fn riemann() -> Self {
        Self {
            factors: vec![FactorSpec {
                e: 1,
                conductor: 1.0,
                d: 1,
                coeff: CoeffSource::One,
            }],
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: Self = toml::from_str(s).map_err(|e| LabError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.factors.is_empty() {
            return Err(LabError::Config("a spec needs at least one factor".into()));
        }
        for (i, f) in self.factors.iter().enumerate() {
            if f.e == 0 || f.d == 0 || !(f.conductor > 0.0) {
                return Err(LabError::Config(format!(
                    "factor {i}: e, d and Q must be positive"
                )));
            }
            for g in &self.factors[..i] {
                if g.coeff == f.coeff {
                    return Err(LabError::Config(format!(
                        "factor {i} repeats an earlier coefficient source"
                    )));
                }
            }
        }
        Ok(())
    }

    /// n_L = Σ e_j².
    pub fn n_l(&self) -> u32 {
        self.factors.iter().map(|f| f.e * f.e).sum()
    }
}

/// The multinomial (n_L k²; (e_1k)², …) times Π g(e_jk) d_j^{(e_jk)²}.
pub fn gl_multinomial(spec: &NonPrimitiveSpec, k: u32) -> Result<BigUint> {
    if k == 0 {
        return Err(LabError::InvalidParameter("g_L(k) needs k >= 1".into()));
    }
    let fact = |n: u32| (1..=n).fold(BigUint::one(), |a, j| a * j);
    let mut num = fact(spec.n_l() * k * k);
    let mut den = BigUint::one();
    for f in &spec.factors {
        let ek = f.e * k;
        den *= fact(ek * ek);
        num *= g_of_k(ek)?;
        num *= BigUint::from(f.d).pow(ek * ek);
    }
    if !(&num % &den).is_zero() {
        return Err(LabError::Domain("g_L(k) is not an integer".into()));
    }
    Ok(num / den)
}

fn fundamental_part(d: i64) -> i64 {
    let mut core: i64 = if d < 0 { -1 } else { 1 };
    for (p, e) in factorize(d.unsigned_abs()) {
        if e % 2 == 1 {
            core *= p as i64;
        }
    }
    if core.rem_euclid(4) == 1 {
        core
    } else {
        4 * core
    }
}

/// The Kronecker character Π_{j∈S} χ_{d_j}, written as χ_{D0} with the primes of Π d_j removed.
struct ProductCharacter {
    fundamental: Option<QuadraticField>,
    bad: Vec<u64>,
}

impl ProductCharacter {
    fn new(ds: &[i64]) -> Result<Self> {
        let mut prod = 1i64;
        let mut bad: Vec<u64> = Vec::new();
        for &d in ds {
            prod = prod.checked_mul(d).ok_or_else(|| {
                LabError::InvalidParameter("discriminant product overflows".into())
            })?;
            bad.extend(factorize(d.unsigned_abs()).into_iter().map(|x| x.0));
        }
        bad.sort_unstable();
        bad.dedup();
        let d0 = fundamental_part(prod);
        let fundamental = if d0 == 1 {
            None
        } else {
            Some(build_field(d0)?)
        };
        Ok(Self { fundamental, bad })
    }

    fn at(&self, p: u64) -> f64 {
        if self.bad.contains(&p) {
            return 0.0;
        }
        self.fundamental.as_ref().map_or(1.0, |f| f.chi(p) as f64)
    }

    fn fundamental_at(&self, p: u64) -> f64 {
        self.fundamental.as_ref().map_or(1.0, |f| f.chi(p) as f64)
    }

    fn l_one(&self) -> Result<f64> {
        let f = self
            .fundamental
            .as_ref()
            .ok_or_else(|| LabError::Domain("a principal character has a pole at s = 1".into()))?;
        Ok(l_one_chi(f)
            * self
                .bad
                .iter()
                .map(|&p| 1.0 - self.fundamental_at(p) / p as f64)
                .product::<f64>())
    }

    fn prime_zeta_two(&self) -> f64 {
        let full = match &self.fundamental {
            Some(f) => prime_zeta_chi(2.0, f),
            None => prime_zeta(2.0),
        };
        full - self
            .bad
            .iter()
            .map(|&p| self.fundamental_at(p) / (p * p) as f64)
            .sum::<f64>()
    }
}

/// Coefficients of Π_j (1 − c_j x)^{−m_j} up to x^depth.
fn local_coeffs(signs: &[f64], powers: &[u32], depth: usize) -> Vec<f64> {
    let mut out = vec![0.0; depth + 1];
    out[0] = 1.0;
    for (&c, &m) in signs.iter().zip(powers) {
        if c == 0.0 || m == 0 {
            continue;
        }
        let mut b = vec![0.0; depth + 1];
        b[0] = 1.0;
        for n in 1..=depth {
            b[n] = b[n - 1] * c * (m as f64 + n as f64 - 1.0) / n as f64;
        }
        let mut next = vec![0.0; depth + 1];
        for i in 0..=depth {
            if out[i] == 0.0 {
                continue;
            }
            for j in 0..=depth - i {
                next[i + j] += out[i] * b[j];
            }
        }
        out = next;
    }
    out
}

/// Σ_n α(p^n)² p^{−n} for local signs `signs`.
fn local_square_sum(signs: &[f64], powers: &[u32], p: f64) -> f64 {
    let mut depth = 16;
    loop {
        let a = local_coeffs(signs, powers, depth);
        let mut s = 0.0;
        let mut last = 0.0;
        let mut pw = 1.0;
        for v in &a {
            last = v * v * pw;
            s += last;
            pw /= p;
        }
        if last < 1e-20 * s || depth >= 4096 {
            return s;
        }
        depth *= 2;
    }
}

/// a_L(k) = Π_p (1 − 1/p)^{n_L k²} Σ_n |α_{L,k}(p^n)|²/p^n with a certified tail.
pub fn a_l_constant(spec: &NonPrimitiveSpec, k: u32, tol: f64) -> Result<EulerProductValue> {
    a_l_constant_cut(spec, k, tol, EULER_CUTOFF)
}

pub fn a_l_constant_cut(
    spec: &NonPrimitiveSpec,
    k: u32,
    tol: f64,
    cutoff: u64,
) -> Result<EulerProductValue> {
    spec.validate()?;
    if k == 0 {
        return Ok(EulerProductValue {
            value: 1.0,
            cutoff,
            tail_bound: 0.0,
        });
    }
    let sources: Vec<CoeffSource> = spec.factors.iter().map(|f| f.coeff).collect();
    let powers: Vec<u32> = spec.factors.iter().map(|f| f.e * k).collect();
    let nk2 = (spec.n_l() * k * k) as f64;
    let kk = (k * k) as f64;
    let largest = sources
        .iter()
        .filter_map(|c| c.discriminant())
        .map(|d| d.unsigned_abs())
        .max()
        .unwrap_or(1);
    if cutoff <= largest || cutoff < 1000 {
        return Err(LabError::InvalidParameter(
            "the prime cutoff must exceed every conductor and 1000".into(),
        ));
    }
    let mut pairs = Vec::new();
    for i in 0..sources.len() {
        for j in i + 1..sources.len() {
            let ds: Vec<i64> = [sources[i], sources[j]]
                .iter()
                .filter_map(|c| c.discriminant())
                .collect();
            let w = 2.0 * kk * (spec.factors[i].e * spec.factors[j].e) as f64;
            pairs.push((i, j, ProductCharacter::new(&ds)?, w));
        }
    }
    let log_b = |signs: &[f64], p: f64, pair_vals: &[f64]| -> f64 {
        let mut v = local_square_sum(signs, &powers, p).ln() + nk2 * (-1.0 / p).ln_1p();
        for (&(_, _, _, w), &c) in pairs.iter().zip(pair_vals) {
            v += w * (-c / p).ln_1p();
        }
        v
    };
    let mut head = 0.0;
    for p in primes_up_to(cutoff) {
        let signs: Vec<f64> = sources.iter().map(|c| c.value(p) as f64).collect();
        let pair_vals: Vec<f64> = pairs
            .iter()
            .map(|(i, j, _, _)| signs[*i] * signs[*j])
            .collect();
        head += log_b(&signs, p as f64, &pair_vals);
    }
    // Beyond the cutoff every χ_{d_j}(p) = ±1; expand the x² coefficient over sign patterns.
    let kron: Vec<usize> = (0..sources.len())
        .filter(|&j| sources[j].discriminant().is_some())
        .collect();
    let patterns = 1usize << kron.len();
    let mut ell2 = vec![0.0; patterns];
    let mut ell3_max: f64 = 0.0;
    for (mask, slot) in ell2.iter_mut().enumerate() {
        let mut signs = vec![1.0; sources.len()];
        for (b, &j) in kron.iter().enumerate() {
            if mask >> b & 1 == 1 {
                signs[j] = -1.0;
            }
        }
        let a = local_coeffs(&signs, &powers, 3);
        let s: Vec<f64> = a.iter().map(|v| v * v).collect();
        let mut l2 = s[2] - s[1] * s[1] / 2.0 - nk2 / 2.0;
        let mut l3 = s[3] - s[1] * s[2] + s[1].powi(3) / 3.0 - nk2 / 3.0;
        for &(i, j, _, w) in &pairs {
            let c = signs[i] * signs[j];
            l2 -= w * c * c / 2.0;
            l3 -= w * c * c * c / 3.0;
        }
        *slot = l2;
        ell3_max = ell3_max.max(l3.abs());
    }
    let mut tail = 0.0;
    let big_p = cutoff as f64;
    for subset in 0..patterns {
        let coef: f64 = (0..patterns)
            .map(|mask| {
                let parity = (mask & subset).count_ones() % 2;
                if parity == 1 {
                    -ell2[mask]
                } else {
                    ell2[mask]
                }
            })
            .sum::<f64>()
            / patterns as f64;
        if coef == 0.0 {
            continue;
        }
        let ds: Vec<i64> = kron
            .iter()
            .enumerate()
            .filter(|(b, _)| subset >> b & 1 == 1)
            .filter_map(|(_, &j)| sources[j].discriminant())
            .collect();
        let ch = ProductCharacter::new(&ds)?;
        let head_sum: f64 = primes_up_to(cutoff)
            .iter()
            .map(|&p| ch.at(p) / (p * p) as f64)
            .sum();
        tail += coef * (ch.prime_zeta_two() - head_sum);
    }
    let rest = 2.0 * ell3_max.max(1.0) * 1.26 / (2.0 * big_p * big_p * big_p.ln());
    let mut l_factor = 1.0;
    for (_, _, ch, w) in &pairs {
        l_factor *= ch.l_one()?.powf(*w);
    }
    let value = (head + tail).exp() * l_factor;
    let tail_bound = value * (rest.exp() - 1.0) + value * 1e-15 * (cutoff as f64).ln();
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

/// Dirichlet coefficients of L(s)^k for n ≤ N (index 0 unused).
pub fn alpha_lk(spec: &NonPrimitiveSpec, k: u32, n_max: usize) -> Result<Vec<i64>> {
    if n_max > 1_000_000 {
        return Err(LabError::InvalidParameter(
            "coefficient tables are limited to N <= 10^6".into(),
        ));
    }
    spec.validate()?;
    let mut acc = vec![0i64; n_max + 1];
    if n_max >= 1 {
        acc[1] = 1;
    }
    for f in &spec.factors {
        let base: Vec<i64> = (0..=n_max as u64)
            .map(|n| if n == 0 { 0 } else { f.coeff.value(n) })
            .collect();
        for _ in 0..f.e * k {
            let mut next = vec![0i64; n_max + 1];
            for d in 1..=n_max {
                let a = acc[d];
                if a == 0 {
                    continue;
                }
                for (m, &b) in base.iter().enumerate().skip(1).take(n_max / d) {
                    next[d * m] += a * b;
                }
            }
            acc = next;
        }
    }
    Ok(acc)
}

/// Predicted moment a_L(k) Π_j G(e_jk+1)²/G(2e_jk+1) (log Q_j T^{d_j})^{(e_jk)²}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjectureValue {
    pub value: f64,
    pub a_l: f64,
    pub barnes_factor: f64,
    pub log_power: u32,
}

pub fn conjecture_eval(spec: &NonPrimitiveSpec, k: u32, t: f64) -> Result<ConjectureValue> {
    let a_l = a_l_constant(spec, k, 1e-6)?.value;
    let mut barnes_factor = 1.0;
    let mut logs = 1.0;
    let mut log_power = 0;
    for f in &spec.factors {
        let ek = f.e * k;
        barnes_factor *= barnes_ratio(ek);
        logs *= (f.conductor * t.powi(f.d as i32))
            .ln()
            .powi((ek * ek) as i32);
        log_power += ek * ek;
    }
    Ok(ConjectureValue {
        value: a_l * barnes_factor * logs,
        a_l,
        barnes_factor,
        log_power,
    })
}

/// Σ_{n≤N}|α_{L,k}(n)|²/n and the leading coefficient of its polynomial-in-log fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoeffSumReport {
    pub n: usize,
    pub degree: u32,
    pub empirical: f64,
    pub fitted_leading: f64,
    pub predicted_leading: f64,
    pub ratio: f64,
    pub fit_points: Vec<(usize, f64)>,
    pub condition: f64,
}

pub fn coeff_sum_check(spec: &NonPrimitiveSpec, k: u32, n: usize) -> Result<CoeffSumReport> {
    if n < 64 {
        return Err(LabError::InvalidParameter(
            "coefficient sums need N >= 64".into(),
        ));
    }
    let alpha = alpha_lk(spec, k, n)?;
    let degree = spec.n_l() * k * k;
    let points = (degree as usize + 1).max(3);
    let cuts: Vec<usize> = (0..points).rev().map(|j| n >> j).collect();
    let mut partial = 0.0;
    let mut fit_points = Vec::new();
    let mut next = 0;
    for (m, &a) in alpha.iter().enumerate().skip(1) {
        partial += (a * a) as f64 / m as f64;
        while next < cuts.len() && cuts[next] == m {
            fit_points.push((m, partial));
            next += 1;
        }
    }
    let xs: Vec<f64> = fit_points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = fit_points.iter().map(|p| p.1).collect();
    let (coef, condition) = poly_fit(&xs, &ys, degree as usize)?;
    let fitted_leading = coef[degree as usize];
    let fact: f64 = (1..=degree).map(|j| j as f64).product();
    let predicted_leading = a_l_constant(spec, k, 1e-6)?.value / fact;
    Ok(CoeffSumReport {
        n,
        degree,
        empirical: partial,
        fitted_leading,
        predicted_leading,
        ratio: fitted_leading / predicted_leading,
        fit_points,
        condition,
    })
}

/// Prime sums of |α_L(p)|²/p against n_L log log x, and the cross-factor sums.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelbergRow {
    pub x: f64,
    pub regularity: f64,
    pub orthogonality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelbergReport {
    pub rows: Vec<SelbergRow>,
    pub regularity_band: f64,
    pub orthogonality_max: f64,
}

pub fn selberg_checks(spec: &NonPrimitiveSpec, x_max: f64) -> Result<SelbergReport> {
    if !(x_max >= 1e3) || x_max > 1e7 {
        return Err(LabError::InvalidParameter(
            "selberg checks need 10^3 <= x_max <= 10^7".into(),
        ));
    }
    spec.validate()?;
    let n_l = spec.n_l() as f64;
    let mut grid = Vec::new();
    let mut e = 3.0;
    while 10f64.powf(e) <= x_max * (1.0 + 1e-12) {
        grid.push(10f64.powf(e).round());
        e += 0.1;
    }
    let mut reg = 0.0;
    let mut cross = vec![0.0; spec.factors.len() * spec.factors.len()];
    let mut rows = Vec::new();
    let mut gi = 0;
    let m = spec.factors.len();
    let emit = |x: f64, reg: f64, cross: &[f64], rows: &mut Vec<SelbergRow>| {
        let worst = (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .map(|(i, j)| cross[i * m + j].abs())
            .fold(0.0, f64::max);
        rows.push(SelbergRow {
            x,
            regularity: reg - n_l * x.ln().ln(),
            orthogonality: worst,
        });
    };
    for p in primes_up_to(x_max as u64) {
        while gi < grid.len() && (p as f64) > grid[gi] {
            emit(grid[gi], reg, &cross, &mut rows);
            gi += 1;
        }
        let c: Vec<f64> = spec
            .factors
            .iter()
            .map(|f| f.coeff.value(p) as f64)
            .collect();
        let a: f64 = spec
            .factors
            .iter()
            .zip(&c)
            .map(|(f, v)| f.e as f64 * v)
            .sum();
        reg += a * a / p as f64;
        for i in 0..m {
            for j in i + 1..m {
                cross[i * m + j] += c[i] * c[j] / p as f64;
            }
        }
    }
    while gi < grid.len() {
        emit(grid[gi], reg, &cross, &mut rows);
        gi += 1;
    }
    let hi = rows
        .iter()
        .map(|r| r.regularity)
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = rows
        .iter()
        .map(|r| r.regularity)
        .fold(f64::INFINITY, f64::min);
    let orthogonality_max = rows.iter().map(|r| r.orthogonality).fold(0.0, f64::max);
    Ok(SelbergReport {
        rows,
        regularity_band: hi - lo,
        orthogonality_max,
    })
}

/// Σ_{m≤T} f_K(m)² on a geometric grid with the fitted c in c·T·log T.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChandraRow {
    #[serde(rename = "T")]
    pub t: f64,
    pub sum: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChandraReport {
    pub rows: Vec<ChandraRow>,
    /// c from Σ/T ≈ c log T + c′ over the grid.
    pub fitted_c: f64,
    pub lower_coefficient: f64,
    /// Relative change of Σ/(T log T) across the top decade.
    pub top_decade_drift: f64,
    /// Log-log slope of Σ/log T over the top decade.
    pub power: f64,
    /// Log-log slope of Σ itself over the top decade.
    pub raw_slope: f64,
}

pub fn chandra_nara_check(f: &QuadraticField, t_max: f64) -> Result<ChandraReport> {
    if !(t_max >= 1e4) || t_max > 1e7 {
        return Err(LabError::InvalidParameter(
            "the check needs 10^4 <= T_max <= 10^7".into(),
        ));
    }
    let n = t_max as usize;
    let counts = ideal_counts_up_to(n, f);
    let mut grid = Vec::new();
    let mut e = 3.0;
    while 10f64.powf(e) <= t_max * (1.0 + 1e-12) {
        grid.push(10f64.powf(e).round() as usize);
        e += 0.1;
    }
    let mut rows = Vec::new();
    let mut acc: u64 = 0;
    let mut gi = 0;
    for (m, &c) in counts.iter().enumerate().skip(1) {
        acc += (c as u64) * (c as u64);
        while gi < grid.len() && grid[gi] == m {
            let t = m as f64;
            rows.push(ChandraRow {
                t,
                sum: acc as f64,
                ratio: acc as f64 / (t * t.ln()),
            });
            gi += 1;
        }
    }
    let fit: Vec<&ChandraRow> = rows.iter().filter(|r| r.t >= 1e4).collect();
    let xs: Vec<f64> = fit.iter().map(|r| r.t.ln()).collect();
    let ys: Vec<f64> = fit.iter().map(|r| r.sum / r.t).collect();
    let (coef, _) = poly_fit(&xs, &ys, 1)?;
    let top = rows
        .last()
        .cloned()
        .ok_or_else(|| LabError::InvalidParameter("empty grid".into()))?;
    let bottom = rows
        .iter()
        .min_by(|a, b| {
            (a.t - top.t / 10.0)
                .abs()
                .total_cmp(&(b.t - top.t / 10.0).abs())
        })
        .cloned()
        .unwrap_or_else(|| top.clone());
    let dl = (top.t / bottom.t).ln();
    let power = ((top.sum / top.t.ln()) / (bottom.sum / bottom.t.ln())).ln() / dl;
    let raw_slope = (top.sum / bottom.sum).ln() / dl;
    Ok(ChandraReport {
        fitted_c: coef[1],
        lower_coefficient: coef[0],
        top_decade_drift: (top.ratio / bottom.ratio - 1.0).abs(),
        power,
        raw_slope,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_small() {
        let p1 = xi_permutations(1).unwrap();
        assert_eq!(p1, vec![vec![1, 2], vec![2, 1]]);
        let p2 = xi_permutations(2).unwrap();
        assert_eq!(p2.len(), 6);
        assert_eq!(p2[0], vec![1, 2, 3, 4]);
        assert_eq!(p2[5], vec![3, 4, 1, 2]);
        assert!(xi_permutations(7).is_err());
    }

    #[test]
    fn multinomial_examples() {
        let f = build_field(-4).unwrap();
        let zk = NonPrimitiveSpec::dedekind(&f);
        assert_eq!(gl_multinomial(&zk, 1).unwrap(), BigUint::from(2u32));
        assert_eq!(
            gl_multinomial(&NonPrimitiveSpec::riemann(), 2).unwrap(),
            BigUint::from(2u32)
        );
        assert_eq!(gl_multinomial(&zk, 2).unwrap(), BigUint::from(280u32));
    }

    #[test]
    fn barnes_ratios() {
        assert_eq!(barnes_ratio(1), 1.0);
        assert!((barnes_ratio(2) - 1.0 / 12.0).abs() < 1e-16);
        assert!((barnes_ratio(3) - 1.0 / 8640.0).abs() < 1e-18);
    }

    #[test]
    fn spec_parsing() {
        let s = "[[factors]]\ne = 1\nQ = 1.0\nd = 1\ncoeff = \"one\"\n\n[[factors]]\ne = 1\nQ = 4.0\nd = 1\ncoeff = \"kronecker:-4\"\n";
        let spec = NonPrimitiveSpec::from_toml_str(s).unwrap();
        assert_eq!(spec, NonPrimitiveSpec::dedekind(&build_field(-4).unwrap()));
        assert_eq!(spec.n_l(), 2);
        assert!(
            NonPrimitiveSpec::from_toml_str(&s.replace("kronecker:-4", "kronecker:3")).is_err()
        );
        assert!(NonPrimitiveSpec::from_toml_str(&s.replace("kronecker:-4", "one")).is_err());
        assert!(
            NonPrimitiveSpec::from_toml_str(&s.replace("e = 1\nQ = 4.0", "e = 0\nQ = 4.0"))
                .is_err()
        );
    }

    #[test]
    fn coefficient_tables() {
        let f = build_field(-4).unwrap();
        let zk = alpha_lk(&NonPrimitiveSpec::dedekind(&f), 1, 1000).unwrap();
        let counts = ideal_counts_up_to(1000, &f);
        assert!((1..=1000).all(|n| zk[n] == counts[n] as i64));
        assert_eq!(zk[5], 2);
        let d = alpha_lk(&NonPrimitiveSpec::riemann(), 2, 1000).unwrap();
        assert!((1..=1000).all(|n| d[n] == crate::primes::divisor_count(n as u64) as i64));
    }

    #[test]
    fn riemann_constant_is_one() {
        let a = a_l_constant(&NonPrimitiveSpec::riemann(), 1, 1e-8).unwrap();
        assert!((a.value - 1.0).abs() < 1e-10, "{}", a.value);
        assert_eq!(
            a_l_constant(&NonPrimitiveSpec::riemann(), 0, 1e-8)
                .unwrap()
                .value,
            1.0
        );
    }
}
