//! Mean values over [T, 2T] of ζ_K, P_K and Z_K, the splitting diagnostic,
//! the Montgomery–Vaughan check, and the weights and local factors of the
//! twisted second-moment main term.

use crate::error::{LabError, Result};
use crate::euler::{a_k_galois, GaloisSplitData};
use crate::field::{gauss_sum, l_one_chi, QuadraticField, SplitType};
use crate::hybrid::{
    alpha_local, euler_terms, kernel_build, EulerVariant, HybridConfig, HybridEvaluator,
};
use crate::lfun::{zeta_real, ComponentGrid, DirichletPoly, LComponent};
use crate::primes::{factorize, primes_up_to};
use crate::quad::poly_fit;
use crate::special::EULER_GAMMA;
use crate::zeros::ZeroTable;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Which function's |·|^{2k} is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Integrand {
    ZetaK,
    EulerProduct,
    HadamardProduct,
    ZetaKOverEuler,
}

impl Integrand {
    pub fn label(self) -> &'static str {
        match self {
            Self::ZetaK => "zetaK",
            Self::EulerProduct => "P",
            Self::HadamardProduct => "Z",
            Self::ZetaKOverEuler => "zetaK_Pinv",
        }
    }
}

/// A 1/T-normalized moment over [T, 2T].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MomentResult {
    pub integrand: Integrand,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "X")]
    pub x: f64,
    pub k: f64,
    pub value: f64,
    pub predicted: Option<f64>,
    pub ratio: Option<f64>,
    pub grid_step: f64,
    pub n_points: usize,
}

impl MomentResult {
    pub const CSV_HEADER: &'static str = "T,X,k,value,predicted,ratio,grid_step,n_points";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        format!(
            "{},{},{},{:.12e},{},{},{:.9e},{}",
            self.t,
            self.x,
            self.k,
            self.value,
            opt(self.predicted),
            opt(self.ratio),
            self.grid_step,
            self.n_points
        )
    }
}

/// Largest admissible grid step 0.05/log(qT).
pub fn max_grid_step(f: &QuadraticField, t: f64) -> f64 {
    0.05 / (f.q as f64 * t).ln()
}

const CHUNK: usize = 1 << 16;

/// Everything needed to sample the integrands on a grid.
#[derive(Debug, Clone)]
pub struct MomentContext {
    pub field: QuadraticField,
    pub x: f64,
    pub euler: EulerVariant,
    pub workers: usize,
    euler_terms: Vec<(u64, f64)>,
    hybrid: Option<HybridEvaluator>,
}

impl MomentContext {
    /// Context without zeros; Z-type integrands are unavailable.
    pub fn new(field: &QuadraticField, x: f64, euler: EulerVariant) -> Result<Self> {
        let kernel = kernel_build(x)?;
        Ok(Self {
            field: field.clone(),
            x,
            euler,
            workers: 1,
            euler_terms: euler_terms(field, &kernel, euler),
            hybrid: None,
        })
    }

    /// Context whose P variant and zero window come from `cfg`.
    pub fn with_zeros(field: &QuadraticField, cfg: HybridConfig, zeros: ZeroTable) -> Result<Self> {
        let euler = cfg.euler;
        let x = cfg.x;
        let h = HybridEvaluator::new(field, cfg, zeros)?;
        Ok(Self {
            field: field.clone(),
            x,
            euler,
            workers: 1,
            euler_terms: euler_terms(field, &h.kernel, euler),
            hybrid: Some(h),
        })
    }

    pub fn workers(mut self, n: usize) -> Self {
        self.workers = n.max(1);
        self
    }

    fn hybrid(&self) -> Result<&HybridEvaluator> {
        self.hybrid
            .as_ref()
            .ok_or_else(|| LabError::InvalidParameter("this integrand needs a zero table".into()))
    }

    /// ln|F(1/2+it)|² at t0 + j·h, j < count.
    fn log_square(
        &self,
        which: Integrand,
        t_top: f64,
        t0: f64,
        h: f64,
        count: usize,
    ) -> Result<Vec<f64>> {
        let zeta_k = |out: &mut Vec<f64>| {
            for comp in LComponent::factors_of(&self.field) {
                let g = ComponentGrid::new(&comp, 0.5, t_top);
                for (o, v) in out.iter_mut().zip(g.eval_grid(t0, h, count)) {
                    *o += v.norm_sqr().ln();
                }
            }
        };
        let log_p = |out: &mut Vec<f64>, sign: f64| {
            let poly = DirichletPoly::from_terms(&self.euler_terms, 0.5);
            for (o, v) in out.iter_mut().zip(poly.eval_grid(t0, h, count)) {
                *o += sign * 2.0 * v.re;
            }
        };
        let mut out = vec![0.0; count];
        match which {
            Integrand::ZetaK => zeta_k(&mut out),
            Integrand::EulerProduct => log_p(&mut out, 1.0),
            Integrand::ZetaKOverEuler => {
                zeta_k(&mut out);
                log_p(&mut out, -1.0);
            }
            Integrand::HadamardProduct => {
                for (o, v) in out
                    .iter_mut()
                    .zip(self.hybrid()?.log_z_re_grid(t0, h, count)?)
                {
                    *o += 2.0 * v;
                }
            }
        }
        Ok(out)
    }
}

/// (1/T)∫_T^{2T} |F(1/2+it)|^{2k} dt by Simpson's rule.
pub fn moment_integral(
    which: Integrand,
    ctx: &MomentContext,
    t: f64,
    k: f64,
    grid_step: Option<f64>,
) -> Result<MomentResult> {
    if !(t >= 100.0) {
        return Err(LabError::InvalidParameter(format!(
            "moments need T >= 100, got {t}"
        )));
    }
    let bound = max_grid_step(&ctx.field, t);
    let step = grid_step.unwrap_or(bound);
    if !(step > 0.0) || step > bound * (1.0 + 1e-12) {
        return Err(LabError::InvalidParameter(format!(
            "grid step {step} exceeds 0.05/log(qT) = {bound:.6}"
        )));
    }
    let mut n = (t / step).ceil() as usize;
    n += n % 2;
    let h = t / n as f64;
    let count = n + 1;
    if matches!(which, Integrand::HadamardProduct) {
        let hy = ctx.hybrid()?;
        let need = 2.0 * t + hy.config.zero_window;
        if !hy.zeros().covers(need) {
            return Err(LabError::InvalidParameter(format!(
                "zero table reaches {} but the integral needs {need}",
                hy.zeros().t_max
            )));
        }
    }
    let chunks: Vec<(usize, usize)> = (0..count)
        .step_by(CHUNK)
        .map(|a| (a, (a + CHUNK).min(count)))
        .collect();
    let partial = |&(a, b): &(usize, usize)| -> Result<f64> {
        let ls = ctx.log_square(which, 2.0 * t, t + a as f64 * h, h, b - a)?;
        let mut s = 0.0;
        for (i, v) in ls.into_iter().enumerate() {
            let j = a + i;
            let w = if j == 0 || j == n {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            s += w * (k * v).exp();
        }
        Ok(s)
    };
    let sums: Vec<Result<f64>> = if ctx.workers <= 1 {
        chunks.iter().map(partial).collect()
    } else {
        let mut slots: Vec<Option<Result<f64>>> = (0..chunks.len()).map(|_| None).collect();
        std::thread::scope(|sc| {
            let handles: Vec<_> = (0..ctx.workers)
                .map(|w| {
                    let chunks = &chunks;
                    let partial = &partial;
                    sc.spawn(move || {
                        (w..chunks.len())
                            .step_by(ctx.workers)
                            .map(|c| (c, partial(&chunks[c])))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for hd in handles {
                for (c, r) in hd.join().expect("moment worker panicked") {
                    slots[c] = Some(r);
                }
            }
        });
        slots
            .into_iter()
            .map(|s| s.expect("chunk evaluated"))
            .collect()
    };
    let mut total = 0.0;
    for s in sums {
        total += s?;
    }
    let value = total / (3.0 * n as f64);
    let predicted = predicted_moment(which, ctx, t, k)?;
    let ratio = predicted.filter(|p| *p > 0.0).map(|p| value / p);
    Ok(MomentResult {
        integrand: which,
        t,
        x: ctx.x,
        k,
        value,
        predicted,
        ratio,
        grid_step: h,
        n_points: count,
    })
}

/// (6/π²) L(1,χ)² Π_{p|d_K}(1+1/p)^{−1} log² T.
pub fn motohashi_main_term(f: &QuadraticField, t: f64) -> f64 {
    motohashi_constant(f) * t.ln().powi(2)
}

pub fn motohashi_constant(f: &QuadraticField) -> f64 {
    let l1 = l_one_chi(f);
    let ram: f64 = f
        .ramified_primes()
        .iter()
        .map(|&p| 1.0 / (1.0 + 1.0 / p as f64))
        .product();
    6.0 / (PI * PI) * l1 * l1 * ram
}

/// Quadratic-in-log-T fit of the second moment of ζ_K against the main term.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MotohashiFit {
    pub heights: Vec<f64>,
    pub moments: Vec<f64>,
    /// I₁(T) / (C log² T) at each height.
    pub ratios: Vec<f64>,
    pub leading: f64,
    pub linear: f64,
    pub constant: f64,
    pub main_constant: f64,
}

impl MotohashiFit {
    pub fn leading_ratio(&self) -> f64 {
        self.leading / self.main_constant
    }

    /// Whether |ratio − 1| shrinks strictly as T grows.
    pub fn improving(&self) -> bool {
        self.ratios
            .windows(2)
            .all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs())
    }
}

pub fn motohashi_fit(f: &QuadraticField, heights: &[f64], workers: usize) -> Result<MotohashiFit> {
    if heights.len() < 3 {
        return Err(LabError::InvalidParameter(
            "a quadratic fit needs at least three heights".into(),
        ));
    }
    let ctx = MomentContext::new(f, 16.0, EulerVariant::Sharp)?.workers(workers);
    let mut moments = Vec::with_capacity(heights.len());
    for &t in heights {
        moments.push(moment_integral(Integrand::ZetaK, &ctx, t, 1.0, None)?.value);
    }
    let logs: Vec<f64> = heights.iter().map(|t| t.ln()).collect();
    let (coef, _) = poly_fit(&logs, &moments, 2)?;
    let ratios = heights
        .iter()
        .zip(&moments)
        .map(|(&t, &m)| m / motohashi_main_term(f, t))
        .collect();
    Ok(MotohashiFit {
        heights: heights.to_vec(),
        moments,
        ratios,
        leading: coef[2],
        linear: coef[1],
        constant: coef[0],
        main_constant: motohashi_constant(f),
    })
}

/// a(k) L(1,χ)^{2k²} (e^γ log X)^{2k²}.
pub fn euler_moment_prediction(f: &QuadraticField, x: f64, k: f64) -> Result<f64> {
    let a = a_k_galois(k, &GaloisSplitData::Quadratic(f.clone()), 1e-6)?.value;
    let e = 2.0 * k * k;
    Ok(a * l_one_chi(f).powf(e) * (EULER_GAMMA.exp() * x.ln()).powf(e))
}

/// log T · log qT / (e^γ log X)².
pub fn hadamard_moment_prediction(f: &QuadraticField, t: f64, x: f64) -> f64 {
    t.ln() * (f.q as f64 * t).ln() / (EULER_GAMMA.exp() * x.ln()).powi(2)
}

fn predicted_moment(which: Integrand, ctx: &MomentContext, t: f64, k: f64) -> Result<Option<f64>> {
    if k == 0.0 {
        return Ok(Some(1.0));
    }
    Ok(match which {
        Integrand::ZetaK if k == 1.0 => Some(motohashi_main_term(&ctx.field, t)),
        Integrand::EulerProduct => Some(euler_moment_prediction(&ctx.field, ctx.x, k)?),
        Integrand::HadamardProduct | Integrand::ZetaKOverEuler if k == 1.0 => {
            Some(hadamard_moment_prediction(&ctx.field, t, ctx.x))
        }
        _ => None,
    })
}

/// The three moments behind the splitting conjecture.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SplittingReport {
    pub zeta_k: MomentResult,
    pub euler: MomentResult,
    pub hadamard: MomentResult,
    pub ratio: f64,
}

/// I_k / (moment of P × moment of Z).
pub fn splitting_ratio(ctx: &MomentContext, t: f64, k: f64) -> Result<SplittingReport> {
    let zeta_k = moment_integral(Integrand::ZetaK, ctx, t, k, None)?;
    let euler = moment_integral(Integrand::EulerProduct, ctx, t, k, None)?;
    let hadamard = moment_integral(Integrand::HadamardProduct, ctx, t, k, None)?;
    let ratio = zeta_k.value / (euler.value * hadamard.value);
    Ok(SplittingReport {
        zeta_k,
        euler,
        hadamard,
        ratio,
    })
}

/// Moment of the sharp P_K against a(k)χ_K^{2k²}(e^γ log X)^{2k²}.
pub fn theorem2_check(f: &QuadraticField, t: f64, x: f64, k: f64) -> Result<MomentResult> {
    let ctx = MomentContext::new(f, x, EulerVariant::Sharp)?;
    moment_integral(Integrand::EulerProduct, &ctx, t, k, None)
}

/// Second moment of Z_K against log T·log qT/(e^γ log X)².
pub fn theorem3_check(
    f: &QuadraticField,
    t: f64,
    cfg: HybridConfig,
    zeros: ZeroTable,
) -> Result<MomentResult> {
    let ctx = MomentContext::with_zeros(f, cfg, zeros)?;
    moment_integral(Integrand::HadamardProduct, &ctx, t, 1.0, None)
}

/// Empirical mean square of a Dirichlet polynomial against the diagonal Σ|a(n)|²/n.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MeanValueCheck {
    pub empirical: f64,
    pub diagonal: f64,
}

impl MeanValueCheck {
    pub fn ratio(&self) -> f64 {
        self.empirical / self.diagonal
    }
}

/// (1/T)∫_T^{2T} |Σ a(n) n^{−1/2−it}|² dt versus Σ|a(n)|²/n.
pub fn mv_mean_value(coeffs: &[(u64, f64)], t: f64) -> Result<MeanValueCheck> {
    let n_max = coeffs.iter().map(|c| c.0).max().unwrap_or(1);
    if (n_max as f64) > t.sqrt() {
        return Err(LabError::InvalidParameter(format!(
            "polynomial length {n_max} exceeds T^(1/2)"
        )));
    }
    let diagonal = coeffs.iter().map(|&(n, a)| a * a / n as f64).sum();
    let poly = DirichletPoly::from_terms(coeffs, 0.5);
    let step = (0.5 / ((n_max + 1) as f64).ln()).min(0.1);
    let mut n = (t / step).ceil() as usize;
    n += n % 2;
    let h = t / n as f64;
    let mut total = 0.0;
    let mut j = 0;
    while j <= n {
        let stop = (j + CHUNK).min(n + 1);
        for (i, v) in poly
            .eval_grid(t + j as f64 * h, h, stop - j)
            .into_iter()
            .enumerate()
        {
            let idx = j + i;
            let w = if idx == 0 || idx == n {
                1.0
            } else if idx % 2 == 1 {
                4.0
            } else {
                2.0
            };
            total += w * v.norm_sqr();
        }
        j = stop;
    }
    Ok(MeanValueCheck {
        empirical: total / (3.0 * n as f64),
        diagonal,
    })
}

fn is_norm(n: u64, f: &QuadraticField) -> bool {
    factorize(n)
        .iter()
        .all(|&(p, e)| f.split_type(p) != SplitType::Inert || e % 2 == 0)
}

/// μ′ on norms: −1 on N(p), 0 on higher powers, multiplicative.
pub fn mobius_prime(n: u64, f: &QuadraticField) -> Result<i8> {
    if n == 0 || !is_norm(n, f) {
        return Err(LabError::InvalidParameter(format!(
            "{n} is not a norm in Q(sqrt({}))",
            f.d_k
        )));
    }
    let mut v = 1i8;
    for (p, e) in factorize(n) {
        let unit = if f.split_type(p) == SplitType::Inert {
            2
        } else {
            1
        };
        if e == unit {
            v = -v;
        } else {
            return Ok(0);
        }
    }
    Ok(v)
}

/// δ(h) = Π_{p|h split}(1 + h_p(1 − 1/p)/(1 + 1/p)), or 0 when the inert part is not a square.
pub fn delta_weight(h: u64, f: &QuadraticField) -> f64 {
    let mut v = 1.0;
    for (p, e) in factorize(h) {
        let pf = p as f64;
        match f.split_type(p) {
            SplitType::Split => v *= 1.0 + e as f64 * (1.0 - 1.0 / pf) / (1.0 + 1.0 / pf),
            SplitType::Inert if e % 2 == 1 => return 0.0,
            _ => {}
        }
    }
    v
}

/// δ′(m) = Π_{split}(1 + m_p(p−1)/(p+1)) Π_{inert}(1 + m_p(p+1)/(p−1)).
pub fn delta_prime_weight(m: u64, f: &QuadraticField) -> f64 {
    let mut v = 1.0;
    for (p, e) in factorize(m) {
        let pf = p as f64;
        match f.split_type(p) {
            SplitType::Split => v *= 1.0 + e as f64 * (pf - 1.0) / (pf + 1.0),
            SplitType::Inert => v *= 1.0 + e as f64 * (pf + 1.0) / (pf - 1.0),
            SplitType::Ramified => {}
        }
    }
    v
}

/// Number of ideals of norm p^e.
fn local_ideal_count(st: SplitType, e: u32) -> f64 {
    match st {
        SplitType::Split => (e + 1) as f64,
        SplitType::Inert => e.is_multiple_of(2) as u8 as f64,
        SplitType::Ramified => 1.0,
    }
}

/// B_{0,0,0,0,h,k}(0) by direct summation of the local j-series.
pub fn b_shift_zero(h: u64, k: u64, f: &QuadraticField) -> Result<f64> {
    if num_integer::gcd(h, k) != 1 {
        return Err(LabError::InvalidParameter(format!(
            "({h},{k}) are not coprime"
        )));
    }
    let mut primes: Vec<u64> = factorize(h * k).into_iter().map(|(p, _)| p).collect();
    primes.sort_unstable();
    let mut v = 1.0;
    for p in primes {
        let st = f.split_type(p);
        let hp = factorize(h)
            .into_iter()
            .find(|x| x.0 == p)
            .map_or(0, |x| x.1);
        let kp = factorize(k)
            .into_iter()
            .find(|x| x.0 == p)
            .map_or(0, |x| x.1);
        let x = 1.0 / p as f64;
        let (mut num, mut den) = (0.0, 0.0);
        let mut pw = 1.0;
        for j in 0..10_000u32 {
            let a = local_ideal_count(st, kp + j) * local_ideal_count(st, hp + j) * pw;
            let b = local_ideal_count(st, j).powi(2) * pw;
            num += a;
            den += b;
            if j > 4 && a.max(b) < 1e-17 * den {
                break;
            }
            pw *= x;
        }
        v *= num / den;
    }
    Ok(v)
}

/// Ḡ(χ) L(1,χ)⁴/L(2,χ²) δ′(m)δ′(n).
pub fn zprime_zero(m: u64, n: u64, f: &QuadraticField) -> Complex64 {
    let l1 = l_one_chi(f);
    let l2 = zeta_real(2.0)
        * f.ramified_primes()
            .iter()
            .map(|&p| 1.0 - 1.0 / (p * p) as f64)
            .product::<f64>();
    gauss_sum(f).conj() * (l1.powi(4) / l2 * delta_prime_weight(m, f) * delta_prime_weight(n, f))
}

/// The c₂ main term and the size of its omitted O-term.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct C2Term {
    pub value: f64,
    pub error_bound: f64,
}

pub fn c2_main_term(h: u64, k: u64, f: &QuadraticField, t: f64) -> Result<C2Term> {
    if h == 0 || k == 0 || !(t >= 100.0) {
        return Err(LabError::InvalidParameter(
            "c2 needs h, k >= 1 and T >= 100".into(),
        ));
    }
    let g = num_integer::gcd(h, k);
    let (hk, kh) = (h / g, k / g);
    let pre = motohashi_constant(f) * delta_weight(hk, f) * delta_weight(kh, f);
    Ok(C2Term {
        value: pre * t.ln() * (f.q as f64 * t).ln(),
        error_bound: pre * t.ln() * ((hk * kh) as f64).ln(),
    })
}

/// Whether a prime-ideal norm P lies at most √X or in (√X, X].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum GRegime {
    Low,
    High,
}

/// G at the prime-ideal norm P = p (split, ramified) or p² (inert).
pub fn euler_factor_g(p: u64, st: SplitType, regime: GRegime, f: &QuadraticField) -> f64 {
    let norm = if st == SplitType::Inert { p * p } else { p };
    let x = match regime {
        GRegime::Low => (norm * norm) as f64,
        GRegime::High => norm as f64,
    };
    let unit = if st == SplitType::Inert { 2 } else { 1 };
    let a1 = alpha_local(p, unit, st, x);
    let a2 = alpha_local(p, 2 * unit, st, x);
    let d1 = delta_weight(norm, f);
    let d2 = delta_weight(norm * norm, f);
    let pf = norm as f64;
    1.0 + (2.0 * a1 * d1 + a1 * a1) / pf
        + (2.0 * a2 * d2 + a2 * a2 + 2.0 * a1 * a2 * d1) / (pf * pf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SumMethod {
    Nested,
    Euler,
}

/// The main sum with the number of terms it visited.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MainSum {
    pub value: f64,
    pub terms: usize,
}

/// Elements of W(X) up to `cap`, ascending.
pub fn w_smooth_up_to(f: &QuadraticField, x: f64, cap: u64) -> Vec<u64> {
    let gens: Vec<u64> = primes_up_to(x as u64)
        .into_iter()
        .filter_map(|p| match f.split_type(p) {
            SplitType::Inert if ((p * p) as f64) <= x => Some(p * p),
            SplitType::Inert => None,
            _ => Some(p),
        })
        .collect();
    let mut out = vec![1u64];
    for g in gens {
        let mut next = Vec::new();
        for &n in &out {
            let mut m = n;
            while let Some(v) = m.checked_mul(g).filter(|v| *v <= cap) {
                next.push(v);
                m = v;
            }
        }
        out.extend(next);
    }
    out.sort_unstable();
    out
}

fn alpha_of(n: u64, f: &QuadraticField, x: f64) -> f64 {
    factorize(n)
        .into_iter()
        .map(|(p, e)| alpha_local(p, e, f.split_type(p), x))
        .product()
}

/// S = Σ_g 1/g Σ_l μ′(l)/l² (Σ_m α(glm)δ(lm)/m)², nested with g ≤ Y, l ≤ Y/g, m ≤ Y/gl, or as Π G.
pub fn main_sum_s(f: &QuadraticField, x: f64, method: SumMethod, cap: u64) -> Result<MainSum> {
    match method {
        SumMethod::Euler => {
            let mut v = 1.0;
            let mut terms = 0;
            let rx = x.sqrt();
            for p in primes_up_to(x as u64) {
                let st = f.split_type(p);
                let norm = if st == SplitType::Inert {
                    (p * p) as f64
                } else {
                    p as f64
                };
                if norm > x {
                    continue;
                }
                let regime = if norm <= rx {
                    GRegime::Low
                } else {
                    GRegime::High
                };
                v *= euler_factor_g(p, st, regime, f);
                terms += 1;
            }
            Ok(MainSum { value: v, terms })
        }
        SumMethod::Nested => {
            if cap > 100_000 {
                return Err(LabError::InvalidParameter(
                    "nested caps are limited to 10^5".into(),
                ));
            }
            let w = w_smooth_up_to(f, x, cap);
            let mut total = 0.0;
            let mut terms = 0;
            for &g in &w {
                let mut inner_g = 0.0;
                for &l in w.iter().take_while(|&&l| l <= cap / g) {
                    let mu = mobius_prime(l, f)?;
                    if mu == 0 {
                        continue;
                    }
                    let mut s = 0.0;
                    for &m in w.iter().take_while(|&&m| m <= cap / (g * l)) {
                        let a = alpha_of(g * l * m, f, x);
                        if a != 0.0 {
                            s += a * delta_weight(l * m, f) / m as f64;
                        }
                        terms += 1;
                    }
                    inner_g += mu as f64 / (l * l) as f64 * s * s;
                }
                total += inner_g / g as f64;
            }
            Ok(MainSum {
                value: total,
                terms,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::build_field;

    fn gauss() -> QuadraticField {
        build_field(-4).unwrap()
    }

    #[test]
    fn weights() {
        let f = gauss();
        assert_eq!(mobius_prime(5, &f).unwrap(), -1);
        assert_eq!(mobius_prime(9, &f).unwrap(), -1);
        assert_eq!(mobius_prime(25, &f).unwrap(), 0);
        assert_eq!(mobius_prime(2, &f).unwrap(), -1);
        assert!(mobius_prime(3, &f).is_err());
        assert!((delta_weight(5, &f) - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(delta_weight(3, &f), 0.0);
        assert_eq!(delta_weight(9, &f), 1.0);
        assert!((delta_prime_weight(5, &f) - 5.0 / 3.0).abs() < 1e-15);
        assert!((delta_prime_weight(3, &f) - 3.0).abs() < 1e-15);
        assert_eq!(delta_prime_weight(1, &f), 1.0);
    }

    #[test]
    fn mobius_divisor_identity() {
        let f = gauss();
        let norms: Vec<u64> = (1..=500).filter(|&n| is_norm(n, &f)).collect();
        for &h in &norms {
            for &k in &norms {
                let s: i32 = norms
                    .iter()
                    .take_while(|&&d| d <= h.min(k))
                    .filter(|&&d| h % d == 0 && k % d == 0)
                    .map(|&d| mobius_prime(d, &f).unwrap() as i32)
                    .sum();
                assert_eq!(s, (num_integer::gcd(h, k) == 1) as i32, "h={h} k={k}");
            }
        }
    }

    #[test]
    fn b_at_zero_shift() {
        let f = gauss();
        assert!((b_shift_zero(5, 1, &f).unwrap() - 5.0 / 3.0).abs() < 1e-12);
        assert!(b_shift_zero(3, 1, &f).unwrap().abs() < 1e-12);
        assert_eq!(b_shift_zero(1, 1, &f).unwrap(), 1.0);
        assert!(b_shift_zero(6, 4, &f).is_err());
    }

    #[test]
    fn zprime_and_c2() {
        let f = gauss();
        let l2 = zeta_real(2.0) * 0.75;
        let z = zprime_zero(1, 1, &f);
        let expect = Complex64::new(0.0, -2.0) * (PI / 4.0).powi(4) / l2;
        assert!((z - expect).norm() < 1e-12);
        assert!((zprime_zero(5, 1, &f) / z - delta_prime_weight(5, &f)).norm() < 1e-12);
        assert!((zprime_zero(5, 9, &f).norm() - zprime_zero(9, 5, &f).norm()).abs() < 1e-15);
        let t = 1e4;
        let c11 = c2_main_term(1, 1, &f, t).unwrap().value;
        assert!((c11 - motohashi_constant(&f) * t.ln() * (4.0 * t).ln()).abs() < 1e-12 * c11);
        assert_eq!(c2_main_term(3, 1, &f, t).unwrap().value, 0.0);
        let r = c2_main_term(10, 4, &f, t).unwrap().value / c11;
        assert!((r - delta_weight(5, &f) * delta_weight(2, &f)).abs() < 1e-12);
    }

    #[test]
    fn g_factor_examples() {
        let f = gauss();
        // 13 is split in Q(i); 3 is inert.
        let g = euler_factor_g(13, SplitType::Split, GRegime::Low, &f);
        let x: f64 = 1.0 / 13.0;
        assert!((g - (1.0 - x).powi(4) / (1.0 - x * x)).abs() < 1e-15);
        assert!((euler_factor_g(2, SplitType::Ramified, GRegime::Low, &f) - 0.5).abs() < 1e-15);
        assert!(
            (euler_factor_g(3, SplitType::Inert, GRegime::Low, &f) - (1.0 - 1.0 / 9.0)).abs()
                < 1e-15
        );
    }

    #[test]
    fn main_sum_agreement() {
        let f = gauss();
        let e = main_sum_s(&f, 10.0, SumMethod::Euler, 0).unwrap().value;
        let n = main_sum_s(&f, 10.0, SumMethod::Nested, 100_000)
            .unwrap()
            .value;
        assert!((n / e - 1.0).abs() < 0.02, "{n} {e}");
        assert!(main_sum_s(&f, 10.0, SumMethod::Nested, 200_000).is_err());
    }

    #[test]
    fn trivial_mean_values() {
        let mv = mv_mean_value(&[(1, 1.0)], 1e4).unwrap();
        assert!((mv.empirical - 1.0).abs() < 1e-12 && mv.diagonal == 1.0);
        let ones: Vec<(u64, f64)> = (1..=50).map(|n| (n, 1.0)).collect();
        assert!((mv_mean_value(&ones, 1e5).unwrap().ratio() - 1.0).abs() < 0.05);
        assert!(mv_mean_value(&ones, 100.0).is_err());
        let f = gauss();
        let ctx = MomentContext::new(&f, 16.0, EulerVariant::Sharp).unwrap();
        let r = moment_integral(Integrand::EulerProduct, &ctx, 1000.0, 0.0, None).unwrap();
        assert_eq!(r.value, 1.0);
        assert!(moment_integral(Integrand::EulerProduct, &ctx, 1000.0, 1.0, Some(1.0)).is_err());
        assert!(moment_integral(Integrand::HadamardProduct, &ctx, 1000.0, 1.0, None).is_err());
        assert!(moment_integral(Integrand::EulerProduct, &ctx, 50.0, 1.0, None).is_err());
    }
}
