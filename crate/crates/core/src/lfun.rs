//! Evaluation of ζ(s), L(s,χ) and ζ_K(s) = ζ(s)L(s,χ) by Euler–Maclaurin
//! summation, Hardy-type rotations, and fast evaluation along uniform grids.

use crate::error::{LabError, Result};
use crate::field::QuadraticField;
use crate::special::{bernoulli_over_factorial, ln_gamma_c};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Which factor of ζ_K is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ComponentKind {
    Zeta,
    DirichletL,
}

/// One L-function factor of ζ_K with its functional-equation data.
#[derive(Debug, Clone, PartialEq)]
pub struct LComponent {
    pub kind: ComponentKind,
    pub field: Option<QuadraticField>,
    pub conductor: u64,
    pub parity: u8,
}

impl LComponent {
    pub fn zeta() -> Self {
        Self {
            kind: ComponentKind::Zeta,
            field: None,
            conductor: 1,
            parity: 0,
        }
    }

    pub fn dirichlet(f: &QuadraticField) -> Self {
        Self {
            kind: ComponentKind::DirichletL,
            field: Some(f.clone()),
            conductor: f.q,
            parity: f.parity_a,
        }
    }

    /// The two factors of ζ_K.
    pub fn factors_of(f: &QuadraticField) -> [LComponent; 2] {
        [Self::zeta(), Self::dirichlet(f)]
    }

    /// Short label used in cache headers.
    pub fn label(&self) -> &'static str {
        match self.kind {
            ComponentKind::Zeta => "zeta",
            ComponentKind::DirichletL => "Lchi",
        }
    }

    /// Discriminant of the character (1 for the trivial character of ζ).
    pub fn discriminant(&self) -> i64 {
        self.field.as_ref().map_or(1, |f| f.d_k)
    }

    /// Dirichlet coefficient at n.
    #[inline]
    pub fn coefficient(&self, n: u64) -> f64 {
        match &self.field {
            None => 1.0,
            Some(f) => f.chi(n) as f64,
        }
    }

    /// Value at s.
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        match &self.field {
            None => zeta_eval(s),
            Some(f) => Ok(lchi_eval(s, f)),
        }
    }

    /// log of the gamma factor (q/π)^{(s+a)/2} Γ((s+a)/2).
    pub fn ln_gamma_factor(&self, s: Complex64) -> Result<Complex64> {
        let w = (s + self.parity as f64) * 0.5;
        Ok(w * (self.conductor as f64 / PI).ln() + ln_gamma_c(w)?)
    }

    /// Phase θ(t) rotating the value on the critical line to the real axis.
    pub fn theta(&self, t: f64) -> f64 {
        let s = Complex64::new(0.5, t);
        self.ln_gamma_factor(s).map(|v| v.im).unwrap_or(0.0)
    }

    /// Rotated real function e^{iθ(t)}·L(1/2+it).
    pub fn hardy_value(&self, t: f64) -> f64 {
        let v = self.eval(Complex64::new(0.5, t)).unwrap_or_default();
        (hardy_rotation(t, self) * v).re
    }
}

#[inline]
fn phi_expm1(z: Complex64) -> Complex64 {
    // (e^z − 1)/z
    if z.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..30 {
            term *= z / k as f64;
            sum += term;
            if term.norm() < 1e-18 {
                break;
            }
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Σ_{j≥0} (w+j)^{−s} by Euler–Maclaurin at the base point w; with `regular`
/// the 1/(s−1) pole part is removed, which is what a character-weighted sum needs.
pub(crate) fn em_tail(s: Complex64, w: f64, regular: bool) -> Complex64 {
    let lw = w.ln();
    let w_s = (-s * lw).exp();
    let lead = if regular {
        -lw * phi_expm1((Complex64::new(1.0, 0.0) - s) * lw)
    } else {
        w * w_s / (s - 1.0)
    };
    let mut total = lead + 0.5 * w_s;
    let inv_w2 = 1.0 / (w * w);
    let mut power = w_s / w;
    let mut poch = s;
    let mut prev = f64::INFINITY;
    for m in 1..=80u32 {
        let term = bernoulli_over_factorial(m) * poch * power;
        let mag = term.norm();
        total += term;
        if mag <= 1e-17 * total.norm() || mag > prev {
            break;
        }
        prev = mag;
        let a = 2.0 * m as f64 - 1.0;
        poch *= (s + a) * (s + a + 1.0);
        power *= inv_w2;
    }
    total
}

/// Number of leading terms summed directly before the Euler–Maclaurin tail.
#[inline]
pub(crate) fn em_cutoff(s: Complex64) -> usize {
    ((s.im.abs() + 2.0 * s.re.abs()) / PI).ceil() as usize + 12
}

/// Riemann ζ(s).
pub fn zeta_eval(s: Complex64) -> Result<Complex64> {
    if s == Complex64::new(1.0, 0.0) {
        return Err(LabError::Domain("ζ has a pole at s = 1".into()));
    }
    let n = em_cutoff(s);
    let mut head = Complex64::new(0.0, 0.0);
    for k in (1..n).rev() {
        head += (-s * (k as f64).ln()).exp();
    }
    Ok(head + em_tail(s, n as f64, false))
}

/// ζ(x) for real x > 1.
pub fn zeta_real(x: f64) -> f64 {
    if x >= 40.0 {
        return 1.0 + zeta_minus_one(x);
    }
    zeta_eval(Complex64::new(x, 0.0))
        .map(|v| v.re)
        .unwrap_or(f64::INFINITY)
}

/// ζ(x) − 1 for real x ≥ 2, without cancellation.
pub fn zeta_minus_one(x: f64) -> f64 {
    assert!(x >= 2.0);
    if x < 40.0 {
        let n = 12usize;
        let mut s = 0.0;
        for k in (2..n).rev() {
            s += (k as f64).powf(-x);
        }
        return s + em_tail(Complex64::new(x, 0.0), n as f64, false).re;
    }
    let mut s = 0.0;
    for k in (2..40).rev() {
        s += (k as f64).powf(-x);
    }
    s
}

/// Dirichlet L(s,χ) through the per-residue-class Hurwitz decomposition.
pub fn lchi_eval(s: Complex64, f: &QuadraticField) -> Complex64 {
    let q = f.q;
    let m = em_cutoff(s) as u64;
    let mut head = Complex64::new(0.0, 0.0);
    for n in (1..q * m).rev() {
        let c = f.chi(n);
        if c != 0 {
            head += c as f64 * (-s * (n as f64).ln()).exp();
        }
    }
    head + lchi_tail(s, f, m)
}

/// q^{−s} Σ_a χ(a) ζ(s, M + a/q).
fn lchi_tail(s: Complex64, f: &QuadraticField, m: u64) -> Complex64 {
    let q = f.q as f64;
    let mut tail = Complex64::new(0.0, 0.0);
    for a in 1..f.q {
        let c = f.chi(a);
        if c != 0 {
            tail += c as f64 * em_tail(s, m as f64 + a as f64 / q, true);
        }
    }
    tail * (-s * q.ln()).exp()
}

/// Dedekind ζ_K(s) = ζ(s)·L(s,χ).
pub fn zeta_k_eval(s: Complex64, f: &QuadraticField) -> Result<Complex64> {
    Ok(zeta_eval(s)? * lchi_eval(s, f))
}

/// e^{iθ(t)} making the component real on the critical line.
pub fn hardy_rotation(t: f64, c: &LComponent) -> Complex64 {
    Complex64::from_polar(1.0, c.theta(t))
}

/// |1 − Λ(1−s)/Λ(s)| for the completed function (root number +1).
pub fn functional_equation_residual(c: &LComponent, s: Complex64) -> Result<f64> {
    let one = Complex64::new(1.0, 0.0);
    let g = (c.ln_gamma_factor(one - s)? - c.ln_gamma_factor(s)?).exp();
    let ratio = g * c.eval(one - s)? / c.eval(s)?;
    Ok((ratio - 1.0).norm())
}

/// Dirichlet polynomial Σ c_n n^{−σ−it} evaluated along t0, t0+h, ... in panels,
/// by rotating each term with the fixed unit factor n^{−ih}.
#[derive(Debug, Clone)]
pub struct DirichletPoly {
    logs: Vec<f64>,
    amps: Vec<f64>,
}

const PANEL: usize = 1024;
const LANES: usize = 8;

impl DirichletPoly {
    /// Terms with indices `1..n_max` and coefficients `coef(n)`; zero terms dropped.
    pub fn new(n_max: usize, sigma: f64, coef: impl Fn(u64) -> f64) -> Self {
        let mut logs = Vec::new();
        let mut amps = Vec::new();
        for n in 1..n_max as u64 {
            let c = coef(n);
            if c != 0.0 {
                let l = (n as f64).ln();
                logs.push(l);
                amps.push(c * (-sigma * l).exp());
            }
        }
        Self { logs, amps }
    }

    /// From explicit (n, a_n) pairs with weight a_n n^{−σ}.
    pub fn from_terms(terms: &[(u64, f64)], sigma: f64) -> Self {
        let logs = terms
            .iter()
            .map(|&(n, _)| (n as f64).ln())
            .collect::<Vec<_>>();
        let amps = terms
            .iter()
            .zip(&logs)
            .map(|(&(_, a), &l)| a * (-sigma * l).exp())
            .collect();
        Self { logs, amps }
    }

    pub fn len(&self) -> usize {
        self.logs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logs.is_empty()
    }

    /// Direct evaluation at a single height, restricted to the first `terms` entries.
    pub fn eval_prefix(&self, t: f64, terms: usize) -> Complex64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (l, a) in self.logs[..terms].iter().zip(&self.amps[..terms]) {
            let (s, c) = (t * l).sin_cos();
            re += a * c;
            im -= a * s;
        }
        Complex64::new(re, im)
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.eval_prefix(t, self.len())
    }

    /// Values at t0 + j·h for j < count, using the first `terms` entries.
    pub fn eval_grid_prefix(&self, t0: f64, h: f64, count: usize, terms: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(count);
        let logs = &self.logs[..terms];
        let amps = &self.amps[..terms];
        let padded = terms.div_ceil(LANES) * LANES;
        let mut zr = vec![0.0; padded];
        let mut zi = vec![0.0; padded];
        let mut rr = vec![0.0; padded];
        let mut ri = vec![0.0; padded];
        for (i, &l) in logs.iter().enumerate() {
            let (s, c) = (h * l).sin_cos();
            rr[i] = c;
            ri[i] = -s;
        }
        let mut j = 0;
        while j < count {
            let t = t0 + j as f64 * h;
            for i in 0..terms {
                let (s, c) = (t * logs[i]).sin_cos();
                zr[i] = amps[i] * c;
                zi[i] = -amps[i] * s;
            }
            let stop = (j + PANEL).min(count);
            for _ in j..stop {
                out.push(rotate_and_sum(&mut zr, &mut zi, &rr, &ri));
            }
            j = stop;
        }
        out
    }

    pub fn eval_grid(&self, t0: f64, h: f64, count: usize) -> Vec<Complex64> {
        self.eval_grid_prefix(t0, h, count, self.len())
    }
}

#[inline(never)]
fn lane_sum(v: &[f64]) -> f64 {
    let mut acc = [0.0f64; LANES];
    for c in v.chunks_exact(LANES) {
        for l in 0..LANES {
            acc[l] += c[l];
        }
    }
    acc.iter().sum()
}

#[inline(never)]
fn rotate(zr: &mut [f64], zi: &mut [f64], rr: &[f64], ri: &[f64]) {
    for (((a, b), c), d) in zr.iter_mut().zip(zi.iter_mut()).zip(rr).zip(ri) {
        let x = *a;
        let y = *b;
        *a = x * c - y * d;
        *b = x * d + y * c;
    }
}

/// Returns Σ z_n and then advances z_n ← z_n·r_n; lengths are multiples of `LANES`.
fn rotate_and_sum(zr: &mut [f64], zi: &mut [f64], rr: &[f64], ri: &[f64]) -> Complex64 {
    let s = Complex64::new(lane_sum(zr), lane_sum(zi));
    rotate(zr, zi, rr, ri);
    s
}

/// Grid evaluator for one component on the line Re s = σ.
#[derive(Debug, Clone)]
pub struct ComponentGrid {
    comp: LComponent,
    sigma: f64,
    poly: DirichletPoly,
    t_abs_max: f64,
}

impl ComponentGrid {
    /// Prepares an evaluator valid for |t| ≤ t_abs_max.
    pub fn new(comp: &LComponent, sigma: f64, t_abs_max: f64) -> Self {
        let cut = em_cutoff(Complex64::new(sigma, t_abs_max)) * comp.conductor as usize;
        let poly = DirichletPoly::new(cut, sigma, |n| comp.coefficient(n));
        Self {
            comp: comp.clone(),
            sigma,
            poly,
            t_abs_max,
        }
    }

    fn tail(&self, s: Complex64, cut: usize) -> Complex64 {
        match &self.comp.field {
            None => em_tail(s, cut as f64, false),
            Some(f) => lchi_tail(s, f, (cut as u64) / f.q),
        }
    }

    /// Values at t0 + j·h, j < count.
    pub fn eval_grid(&self, t0: f64, h: f64, count: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(count);
        let q = self.comp.conductor as usize;
        let mut j = 0;
        while j < count {
            let stop = (j + PANEL).min(count);
            let ta = (t0 + j as f64 * h).abs();
            let tb = (t0 + (stop - 1) as f64 * h).abs();
            let tm = ta.max(tb);
            assert!(tm <= self.t_abs_max + 1e-9, "grid exceeds prepared height");
            let cut = em_cutoff(Complex64::new(self.sigma, tm)) * q;
            let terms = self
                .poly
                .logs
                .partition_point(|&l| l < (cut as f64).ln() - 1e-12);
            let heads = self
                .poly
                .eval_grid_prefix(t0 + j as f64 * h, h, stop - j, terms);
            for (i, hv) in heads.into_iter().enumerate() {
                let s = Complex64::new(self.sigma, t0 + (j + i) as f64 * h);
                out.push(hv + self.tail(s, cut));
            }
            j = stop;
        }
        out
    }

    /// Rotated real values on the critical line.
    pub fn hardy_grid(&self, t0: f64, h: f64, count: usize) -> Vec<f64> {
        self.eval_grid(t0, h, count)
            .into_iter()
            .enumerate()
            .map(|(j, v)| (hardy_rotation(t0 + j as f64 * h, &self.comp) * v).re)
            .collect()
    }

    /// Single-point value.
    pub fn eval(&self, t: f64) -> Complex64 {
        let q = self.comp.conductor as usize;
        let cut = em_cutoff(Complex64::new(self.sigma, t.abs())) * q;
        let terms = self
            .poly
            .logs
            .partition_point(|&l| l < (cut as f64).ln() - 1e-12);
        self.poly.eval_prefix(t, terms) + self.tail(Complex64::new(self.sigma, t), cut)
    }

    pub fn component(&self) -> &LComponent {
        &self.comp
    }
}
