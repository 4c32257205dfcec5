//! The smoothing kernel and its transforms, truncated Euler and Hadamard
//! products, the hybrid-product and explicit-formula residuals, and the
//! coefficients of P_K^{-1}.

use crate::error::{LabError, Result};
use crate::field::{prime_ideal_norms, QuadraticField, SplitType};
use crate::lfun::{lchi_eval, zeta_eval, zeta_k_eval};
use crate::primes::{factorize, primes_up_to};
use crate::quad::gauss_legendre;
use crate::special::{e1, EULER_GAMMA};
use crate::zeros::ZeroTable;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Profile of the mass-one kernel on its support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum KernelShape {
    /// C·exp(−1/(1−w²)).
    #[default]
    Bump,
    /// C·cos²(πw/2).
    SineSquared,
}

/// The kernel u on [e^{1−1/X}, e] with quadrature nodes for its transforms.
#[derive(Debug, Clone)]
pub struct SmoothingKernel {
    pub x_param: f64,
    pub lo: f64,
    pub hi: f64,
    pub shape: KernelShape,
    norm: f64,
    nodes: Vec<f64>,
    log_nodes: Vec<f64>,
    weights: Vec<f64>,
    log_moments: Vec<f64>,
    loglog_moment: f64,
}

const TANH_STEP: f64 = 1.0 / 128.0;
const TANH_RANGE: f64 = 3.6;
const SERIES_RADIUS: f64 = 2.5;

fn bump_profile(w: f64) -> f64 {
    if w.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - w * w)).exp()
    }
}

fn sine_profile(w: f64) -> f64 {
    if w.abs() >= 1.0 {
        0.0
    } else {
        (0.5 * PI * w).cos().powi(2)
    }
}

/// Nodes w_j and weights ω_j with Σ ω_j g(w_j) ≈ ∫_{−1}^{1} profile(w) g(w) dw.
fn profile_rule(shape: KernelShape) -> Vec<(f64, f64)> {
    match shape {
        KernelShape::Bump => {
            // w = tanh τ turns the profile into exp(−cosh² τ).
            let k = (TANH_RANGE / TANH_STEP) as i64;
            (-k..=k)
                .map(|j| {
                    let tau = j as f64 * TANH_STEP;
                    let c = tau.cosh();
                    (tau.tanh(), TANH_STEP * (-c * c).exp() / (c * c))
                })
                .collect()
        }
        KernelShape::SineSquared => {
            let (x, w) = gauss_legendre(160);
            x.into_iter()
                .zip(w)
                .map(|(x, w)| (x, w * sine_profile(x)))
                .collect()
        }
    }
}

/// Builds the kernel for the parameter X ≥ 2.
pub fn kernel_build(x: f64) -> Result<SmoothingKernel> {
    kernel_build_shape(x, KernelShape::Bump)
}

pub fn kernel_build_shape(x: f64, shape: KernelShape) -> Result<SmoothingKernel> {
    if !(x >= 2.0) || !x.is_finite() {
        return Err(LabError::InvalidParameter(format!(
            "kernel needs X >= 2, got {x}"
        )));
    }
    let lo = (1.0 - 1.0 / x).exp();
    let hi = std::f64::consts::E;
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let rule = profile_rule(shape);
    let profile_mass: f64 = rule.iter().map(|&(_, w)| w).sum();
    let norm = 1.0 / (half * profile_mass);
    let nodes: Vec<f64> = rule.iter().map(|&(w, _)| mid + half * w).collect();
    let weights: Vec<f64> = rule.iter().map(|&(_, w)| w / profile_mass).collect();
    let log_nodes: Vec<f64> = nodes.iter().map(|x| x.ln()).collect();
    let mut log_moments = Vec::with_capacity(80);
    for n in 0..80 {
        log_moments.push(
            log_nodes
                .iter()
                .zip(&weights)
                .map(|(l, w)| w * l.powi(n))
                .sum(),
        );
    }
    let loglog_moment = log_nodes
        .iter()
        .zip(&weights)
        .map(|(l, w)| w * l.ln())
        .sum();
    Ok(SmoothingKernel {
        x_param: x,
        lo,
        hi,
        shape,
        norm,
        nodes,
        log_nodes,
        weights,
        log_moments,
        loglog_moment,
    })
}

impl SmoothingKernel {
    fn to_w(&self, x: f64) -> f64 {
        (2.0 * x - (self.hi + self.lo)) / (self.hi - self.lo)
    }

    /// Kernel value u(x).
    pub fn u(&self, x: f64) -> f64 {
        let w = self.to_w(x);
        let p = match self.shape {
            KernelShape::Bump => bump_profile(w),
            KernelShape::SineSquared => sine_profile(w),
        };
        self.norm * p
    }

    /// ∫u over the support by the stored rule.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// v(t) = ∫_t^∞ u(x) dx.
    pub fn v(&self, t: f64) -> f64 {
        if t <= self.lo {
            return 1.0;
        }
        if t >= self.hi {
            return 0.0;
        }
        let w0 = self.to_w(t);
        let half = 0.5 * (self.hi - self.lo);
        match self.shape {
            KernelShape::SineSquared => {
                let part = 0.5 * (1.0 - w0) - (PI * w0).sin() / (2.0 * PI);
                self.norm * half * part
            }
            KernelShape::Bump => {
                let t0 = w0.atanh();
                let t1 = TANH_RANGE.max(t0 + 0.5);
                let (gx, gw) = gauss_legendre(64);
                let h = 0.5 * (t1 - t0);
                let mut s = 0.0;
                for (x, w) in gx.iter().zip(&gw) {
                    let tau = t0 + h * (x + 1.0);
                    let c = tau.cosh();
                    s += w * (-c * c).exp() / (c * c);
                }
                self.norm * half * h * s
            }
        }
    }

    /// Mellin transform û(z) = ∫u(x) x^{z−1} dx.
    pub fn u_hat(&self, z: Complex64) -> Complex64 {
        let zm1 = z - 1.0;
        self.log_nodes
            .iter()
            .zip(&self.weights)
            .map(|(&l, &w)| w * (zm1 * l).exp())
            .sum()
    }

    /// U(z) = ∫u(x) E₁(z log x) dx.
    pub fn u_cap(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() < 1e-12 {
            return Err(LabError::Domain("U is singular at 0".into()));
        }
        if z.norm() <= SERIES_RADIUS {
            return Ok(self.u_cap_series(z));
        }
        let mut s = Complex64::new(0.0, 0.0);
        for (&l, &w) in self.log_nodes.iter().zip(&self.weights) {
            s += w * e1(z * l)?;
        }
        Ok(s)
    }

    /// U(z) + log z, an entire function, by its Taylor series.
    fn u_cap_series(&self, z: Complex64) -> Complex64 {
        let mut s = Complex64::new(-EULER_GAMMA - self.loglog_moment, 0.0) - z.ln();
        let mut p = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for n in 1..self.log_moments.len() {
            p *= -z;
            fact *= n as f64;
            let term = p * self.log_moments[n] / (n as f64 * fact);
            s -= term;
            if term.norm() < 1e-18 {
                break;
            }
        }
        s
    }

    /// Table of U(iy) for |y| ≤ y_max with cubic Hermite interpolation.
    pub fn imag_table(&self, y_max: f64) -> UImagTable {
        UImagTable::new(self, y_max)
    }

    /// Kernel quadrature nodes (x, weight·u) for external use.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

const TABLE_STEP: f64 = 1.0 / 32.0;
const RESEED: usize = 512;

/// U(iy) on a uniform grid, built by integrating dU(iy)/dy = −û(1−iy)/y with Simpson's rule.
#[derive(Debug, Clone)]
pub struct UImagTable {
    kernel: SmoothingKernel,
    y_max: f64,
    values: Vec<Complex64>,
    slopes: Vec<Complex64>,
}

impl UImagTable {
    fn new(k: &SmoothingKernel, y_max: f64) -> Self {
        let y0 = SERIES_RADIUS;
        let n = ((y_max.max(y0) - y0) / TABLE_STEP).ceil() as usize + 2;
        let half = 0.5 * TABLE_STEP;
        // û(1−iy) at y0 + j·half via per-node rotations.
        let mut phase: Vec<Complex64> = Vec::new();
        let mut step: Vec<Complex64> = k
            .log_nodes
            .iter()
            .map(|&l| Complex64::from_polar(1.0, -half * l))
            .collect();
        let seed = |y: f64| -> Vec<Complex64> {
            k.log_nodes
                .iter()
                .zip(&k.weights)
                .map(|(&l, &w)| Complex64::from_polar(w, -y * l))
                .collect()
        };
        let mut dudy = Vec::with_capacity(2 * n + 1);
        for j in 0..=2 * n {
            let y = y0 + j as f64 * half;
            if j % RESEED == 0 {
                phase = seed(y);
                step = k
                    .log_nodes
                    .iter()
                    .map(|&l| Complex64::from_polar(1.0, -half * l))
                    .collect();
            }
            let uh: Complex64 = phase.iter().sum();
            dudy.push(-uh / y);
            for (p, r) in phase.iter_mut().zip(&step) {
                *p *= r;
            }
        }
        let mut values = Vec::with_capacity(n + 1);
        let mut slopes = Vec::with_capacity(n + 1);
        let mut acc = k.u_cap_series(Complex64::new(0.0, y0));
        for i in 0..=n {
            if i > 0 {
                acc += TABLE_STEP / 6.0 * (dudy[2 * i - 2] + 4.0 * dudy[2 * i - 1] + dudy[2 * i]);
            }
            values.push(acc);
            slopes.push(dudy[2 * i]);
        }
        Self {
            kernel: k.clone(),
            y_max: y0 + n as f64 * TABLE_STEP,
            values,
            slopes,
        }
    }

    /// Re U(iy), the even part.
    pub fn eval_re(&self, y: f64) -> f64 {
        let a = y.abs();
        if a <= SERIES_RADIUS || a >= self.y_max {
            return self.eval(a).map(|v| v.re).unwrap_or(f64::INFINITY);
        }
        let x = (a - SERIES_RADIUS) / TABLE_STEP;
        let i = (x as usize).min(self.values.len() - 2);
        let t = x - i as f64;
        let t2 = t * t;
        let t3 = t2 * t;
        self.values[i].re * (2.0 * t3 - 3.0 * t2 + 1.0)
            + self.slopes[i].re * TABLE_STEP * (t3 - 2.0 * t2 + t)
            + self.values[i + 1].re * (3.0 * t2 - 2.0 * t3)
            + self.slopes[i + 1].re * TABLE_STEP * (t3 - t2)
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    /// U(iy); |y| beyond the table falls back to direct quadrature.
    pub fn eval(&self, y: f64) -> Result<Complex64> {
        let a = y.abs();
        let v = if a <= SERIES_RADIUS {
            return self.kernel.u_cap(Complex64::new(0.0, y));
        } else if a >= self.y_max {
            self.kernel.u_cap(Complex64::new(0.0, a))?
        } else {
            let x = (a - SERIES_RADIUS) / TABLE_STEP;
            let i = (x as usize).min(self.values.len() - 2);
            let t = x - i as f64;
            let (p0, p1) = (self.values[i], self.values[i + 1]);
            let (m0, m1) = (self.slopes[i] * TABLE_STEP, self.slopes[i + 1] * TABLE_STEP);
            let t2 = t * t;
            let t3 = t2 * t;
            p0 * (2.0 * t3 - 3.0 * t2 + 1.0)
                + m0 * (t3 - 2.0 * t2 + t)
                + p1 * (3.0 * t2 - 2.0 * t3)
                + m1 * (t3 - t2)
        };
        Ok(if y < 0.0 { v.conj() } else { v })
    }
}

/// Which Euler product is paired with Z_K.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum EulerVariant {
    /// Weights v(e^{log N(a)/log X}); the product for which the identity has no X^{−σ} term.
    #[default]
    Smoothed,
    /// Sharp cutoff N(a) ≤ X.
    Sharp,
}

/// Parameters of the hybrid product.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridConfig {
    pub x: f64,
    pub zero_window: f64,
    pub l: u32,
    pub euler: EulerVariant,
    pub shape: KernelShape,
}

impl HybridConfig {
    pub fn new(x: f64) -> Self {
        Self {
            x,
            zero_window: default_window(x),
            l: 4,
            euler: EulerVariant::Smoothed,
            shape: KernelShape::Bump,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x >= 2.0) {
            return Err(LabError::InvalidParameter(format!(
                "X must be >= 2, got {}",
                self.x
            )));
        }
        let min = 20.0 / self.x.ln();
        if self.zero_window < min {
            return Err(LabError::InvalidParameter(format!(
                "zero window {} below 20/log X = {min:.3}",
                self.zero_window
            )));
        }
        Ok(())
    }
}

/// Default half-width of the zero window.
pub fn default_window(x: f64) -> f64 {
    160.0 * x / x.ln()
}

/// Prime-ideal powers a = p^m with N(a) ≤ X as (norm, multiplicity m, log N(p)).
fn ideal_powers(f: &QuadraticField, x: f64) -> Vec<(f64, u32, f64)> {
    let mut out = Vec::new();
    for ideal in prime_ideal_norms(f, x).ideals {
        let n = ideal.norm as f64;
        let mut m = 1;
        let mut nm = n;
        while nm <= x * (1.0 + 1e-15) {
            out.push((nm, m, ideal.log_norm));
            m += 1;
            nm *= n;
        }
    }
    out
}

/// log P_K(s,X) with the sharp cutoff.
pub fn log_p_eval(s: Complex64, f: &QuadraticField, x: f64) -> Complex64 {
    ideal_powers(f, x)
        .into_iter()
        .map(|(nm, m, _)| (-s * nm.ln()).exp() / m as f64)
        .sum()
}

/// P_K(s,X) = exp Σ_{N(a)≤X} Λ(a)/(N(a)^s log N(a)).
pub fn p_eval(s: Complex64, f: &QuadraticField, x: f64) -> Complex64 {
    log_p_eval(s, f, x).exp()
}

/// log P̃_K(s,X), each term weighted by v(e^{log N(a)/log X}).
pub fn log_p_smoothed(s: Complex64, f: &QuadraticField, k: &SmoothingKernel) -> Complex64 {
    let lx = k.x_param.ln();
    ideal_powers(f, k.x_param)
        .into_iter()
        .map(|(nm, m, _)| k.v((nm.ln() / lx).exp()) * (-s * nm.ln()).exp() / m as f64)
        .sum()
}

pub fn p_smoothed(s: Complex64, f: &QuadraticField, k: &SmoothingKernel) -> Complex64 {
    log_p_smoothed(s, f, k).exp()
}

/// The Euler product terms as a Dirichlet polynomial: (N(a), weight) with log P = Σ weight·N(a)^{−s}.
pub fn euler_terms(
    f: &QuadraticField,
    k: &SmoothingKernel,
    variant: EulerVariant,
) -> Vec<(u64, f64)> {
    let lx = k.x_param.ln();
    let mut out: Vec<(u64, f64)> = Vec::new();
    for (nm, m, _) in ideal_powers(f, k.x_param) {
        let w = match variant {
            EulerVariant::Sharp => 1.0,
            EulerVariant::Smoothed => k.v((nm.ln() / lx).exp()),
        } / m as f64;
        let n = nm.round() as u64;
        match out.iter_mut().find(|(a, _)| *a == n) {
            Some(e) => e.1 += w,
            None => out.push((n, w)),
        }
    }
    out.sort_by_key(|e| e.0);
    out.retain(|e| e.1 != 0.0);
    out
}

/// Zero ordinates (with reflections below 0) within `w` of `t`.
pub fn zeros_in_window(zeros: &ZeroTable, t: f64, w: f64) -> Result<Vec<f64>> {
    if !zeros.covers(t + w) {
        return Err(LabError::InvalidParameter(format!(
            "zero table reaches {} but the window needs {}",
            zeros.t_max,
            t + w
        )));
    }
    let mut out: Vec<f64> = zeros.window(t - w, t + w).to_vec();
    if t - w < 0.0 {
        out.extend(zeros.window(0.0, w - t).iter().map(|g| -g));
    }
    Ok(out)
}

/// log Z_K(s,X) = −Σ_{|t−γ|≤W} U((s−ρ) log X).
pub fn log_z_eval(
    s: Complex64,
    k: &SmoothingKernel,
    window: f64,
    zeros: &ZeroTable,
) -> Result<Complex64> {
    let lx = k.x_param.ln();
    let mut acc = Complex64::new(0.0, 0.0);
    for g in zeros_in_window(zeros, s.im, window)? {
        let rho = Complex64::new(0.5, g);
        acc -= k.u_cap((s - rho) * lx)?;
    }
    Ok(acc)
}

/// Z_K(s,X).
pub fn z_eval(
    s: Complex64,
    f: &QuadraticField,
    cfg: &HybridConfig,
    zeros: &ZeroTable,
) -> Result<Complex64> {
    let _ = f;
    cfg.validate()?;
    let k = kernel_build_shape(cfg.x, cfg.shape)?;
    Ok(log_z_eval(s, &k, cfg.zero_window, zeros)?.exp())
}

/// Evaluator holding a kernel, the zero table and the Euler terms for repeated use.
#[derive(Debug, Clone)]
pub struct HybridEvaluator {
    pub field: QuadraticField,
    pub config: HybridConfig,
    pub kernel: SmoothingKernel,
    zeros: ZeroTable,
    euler: Vec<(u64, f64)>,
    table: UImagTable,
}

impl HybridEvaluator {
    pub fn new(field: &QuadraticField, config: HybridConfig, zeros: ZeroTable) -> Result<Self> {
        config.validate()?;
        let kernel = kernel_build_shape(config.x, config.shape)?;
        let euler = euler_terms(field, &kernel, config.euler);
        let table = kernel.imag_table((config.zero_window + 1.0) * config.x.ln());
        Ok(Self {
            field: field.clone(),
            config,
            kernel,
            zeros,
            euler,
            table,
        })
    }

    pub fn zeros(&self) -> &ZeroTable {
        &self.zeros
    }

    pub fn log_p(&self, s: Complex64) -> Complex64 {
        self.euler
            .iter()
            .map(|&(n, w)| w * (-s * (n as f64).ln()).exp())
            .sum()
    }

    /// log Z_K(s,X); on the critical line the tabulated U(iy) is used.
    pub fn log_z(&self, s: Complex64) -> Result<Complex64> {
        if s.re != 0.5 {
            return log_z_eval(s, &self.kernel, self.config.zero_window, &self.zeros);
        }
        let lx = self.kernel.x_param.ln();
        let mut acc = Complex64::new(0.0, 0.0);
        for g in zeros_in_window(&self.zeros, s.im, self.config.zero_window)? {
            acc -= self.table.eval((s.im - g) * lx)?;
        }
        Ok(acc)
    }

    /// Re log Z_K(1/2 + it) at t0 + j·h for j < count, sliding the zero window along the grid.
    pub fn log_z_re_grid(&self, t0: f64, h: f64, count: usize) -> Result<Vec<f64>> {
        let w = self.config.zero_window;
        let t_end = t0 + h * count.saturating_sub(1) as f64;
        if !self.zeros.covers(t_end + w) {
            return Err(LabError::InvalidParameter(format!(
                "zero table reaches {} but the grid needs {}",
                self.zeros.t_max,
                t_end + w
            )));
        }
        let mut ords: Vec<f64> = self
            .zeros
            .window(0.0, (w - t0).max(0.0))
            .iter()
            .rev()
            .map(|g| -g)
            .collect();
        ords.extend_from_slice(self.zeros.window(t0 - w, t_end + w));
        let lx = self.kernel.x_param.ln();
        let (mut lo, mut hi) = (0usize, 0usize);
        let mut out = Vec::with_capacity(count);
        for j in 0..count {
            let t = t0 + j as f64 * h;
            while lo < ords.len() && ords[lo] < t - w {
                lo += 1;
            }
            while hi < ords.len() && ords[hi] <= t + w {
                hi += 1;
            }
            let mut acc = 0.0;
            for &g in &ords[lo..hi] {
                acc -= self.table.eval_re((t - g) * lx);
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// |ζ_K − P·Z| / (|ζ_K| + 1e-12) at 1/2 + it.
    pub fn residual(&self, t: f64) -> Result<f64> {
        let s = Complex64::new(0.5, t);
        let zk = zeta_k_eval(s, &self.field)?;
        let pz = (self.log_p(s) + self.log_z(s)?).exp();
        Ok((zk - pz).norm() / (zk.norm() + 1e-12))
    }
}

/// Relative hybrid-product residual at 1/2 + it.
pub fn hybrid_residual(
    t: f64,
    f: &QuadraticField,
    cfg: &HybridConfig,
    zeros: &ZeroTable,
) -> Result<f64> {
    if t < 2.0 {
        return Err(LabError::InvalidParameter(
            "hybrid residual needs t >= 2".into(),
        ));
    }
    HybridEvaluator::new(f, cfg.clone(), zeros.clone())?.residual(t)
}

/// Terms of the explicit formula, kept separate for inspection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplicitFormulaTerms {
    pub log_derivative: Complex64,
    pub prime_sum: Complex64,
    pub zero_sum: Complex64,
    pub trivial_even: Complex64,
    pub trivial_odd: Complex64,
    pub pole: Complex64,
}

impl ExplicitFormulaTerms {
    /// Right-hand side minus left-hand side.
    pub fn difference(&self) -> Complex64 {
        self.prime_sum
            - self.zero_sum
            - self.trivial_even
            - self.trivial_odd
            - self.pole
            - self.log_derivative
    }

    pub fn residual(&self) -> f64 {
        self.difference().norm()
    }
}

/// Logarithmic derivative −ζ_K′/ζ_K by a Cauchy integral on a small circle.
pub fn neg_log_derivative_zeta_k(s: Complex64, f: &QuadraticField) -> Result<Complex64> {
    let r = 0.05;
    let m = 24;
    let mut d = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let e = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64);
        let z = s + r * e;
        let v = zeta_eval(z)? * lchi_eval(z, f);
        d += v / e;
    }
    let deriv = d / (m as f64 * r);
    Ok(-deriv / zeta_k_eval(s, f)?)
}

/// All terms of the smoothed explicit formula at s; zeros up to `zeros.t_max` are used.
pub fn explicit_formula_terms(
    s: Complex64,
    f: &QuadraticField,
    k: &SmoothingKernel,
    zeros: &ZeroTable,
) -> Result<ExplicitFormulaTerms> {
    let lx = k.x_param.ln();
    let log_derivative = neg_log_derivative_zeta_k(s, f)?;
    let mut prime_sum = Complex64::new(0.0, 0.0);
    for (nm, _, log_np) in ideal_powers(f, k.x_param) {
        prime_sum += log_np * (-s * nm.ln()).exp() * k.v((nm.ln() / lx).exp());
    }
    let mut zero_sum = Complex64::new(0.0, 0.0);
    for &g in zeros.ordinates() {
        for gg in [g, -g] {
            let d = s - Complex64::new(0.5, gg);
            zero_sum += k.u_hat(1.0 - d * lx) / d;
        }
    }
    // Trivial zeros: order r1 + r2/2 at −2m (m ≥ 1), r2/2 at −(2j+1), r1 + r2/2 − 1 at 0.
    let pairs = f.r2 as f64 / 2.0;
    let even_mult = f.r1 as f64 + pairs;
    let mut trivial_even = Complex64::new(0.0, 0.0);
    let mut trivial_odd = Complex64::new(0.0, 0.0);
    for m in 0..200 {
        let mult = if m == 0 { even_mult - 1.0 } else { even_mult };
        let d = s + 2.0 * m as f64;
        if mult != 0.0 {
            trivial_even += mult * k.u_hat(1.0 - d * lx) / d;
        }
        let d = s + (2 * m + 1) as f64;
        trivial_odd += pairs * k.u_hat(1.0 - d * lx) / d;
    }
    let d = s - 1.0;
    let pole = -k.u_hat(1.0 - d * lx) / d;
    Ok(ExplicitFormulaTerms {
        log_derivative,
        prime_sum,
        zero_sum,
        trivial_even,
        trivial_odd,
        pole,
    })
}

/// |RHS − LHS| of the smoothed explicit formula.
pub fn explicit_formula_residual(
    s: Complex64,
    f: &QuadraticField,
    k: &SmoothingKernel,
    zeros: &ZeroTable,
) -> Result<f64> {
    if s.re < 1.2 {
        return Err(LabError::InvalidParameter(format!(
            "explicit formula check needs Re s >= 1.2, got {}",
            s.re
        )));
    }
    Ok(explicit_formula_terms(s, f, k, zeros)?.residual())
}

/// Coefficients α(n) of the Dirichlet series approximating P_K(s,X)^{−1}.
#[derive(Debug, Clone)]
pub struct AlphaCoeffs {
    pub x: f64,
    pub n_max: u64,
    field: QuadraticField,
    values: Vec<f64>,
}

/// α at a prime power p^e for the given splitting and cutoff X.
pub fn alpha_local(p: u64, e: u32, st: SplitType, x: f64) -> f64 {
    let pf = p as f64;
    let rx = x.sqrt();
    match st {
        SplitType::Split => match e {
            0 => 1.0,
            _ if pf > x => 0.0,
            1 => -2.0,
            2 => {
                if pf <= rx {
                    1.0
                } else {
                    2.0
                }
            }
            _ => 0.0,
        },
        SplitType::Inert => {
            let norm = pf * pf;
            match e {
                0 => 1.0,
                _ if norm > x => 0.0,
                2 => -1.0,
                4 => {
                    if norm <= rx {
                        0.0
                    } else {
                        0.5
                    }
                }
                _ => 0.0,
            }
        }
        SplitType::Ramified => match e {
            0 => 1.0,
            _ if pf > x => 0.0,
            1 => -1.0,
            2 => {
                if pf <= rx {
                    0.0
                } else {
                    0.5
                }
            }
            _ => 0.0,
        },
    }
}

impl AlphaCoeffs {
    pub fn get(&self, n: u64) -> f64 {
        if n == 0 || n > self.n_max {
            return 0.0;
        }
        self.values[n as usize]
    }

    /// Membership in W(X): n is a norm and every prime-ideal norm dividing it is ≤ X.
    pub fn in_w(&self, n: u64) -> bool {
        in_w(n, &self.field, self.x)
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, v)| **v != 0.0)
            .map(|(n, &v)| (n as u64, v))
    }
}

/// W(X) membership for a positive integer.
pub fn in_w(n: u64, f: &QuadraticField, x: f64) -> bool {
    factorize(n)
        .into_iter()
        .all(|(p, e)| match f.split_type(p) {
            SplitType::Inert => e % 2 == 0 && (p * p) as f64 <= x,
            _ => p as f64 <= x,
        })
}

/// α(n) for n ≤ N_max from the local table.
pub fn p_inverse_coeffs(f: &QuadraticField, x: f64, n_max: u64) -> Result<AlphaCoeffs> {
    if n_max > 1_000_000 {
        return Err(LabError::InvalidParameter(
            "N_max must be at most 10^6".into(),
        ));
    }
    let mut values = vec![0.0; n_max as usize + 1];
    if n_max >= 1 {
        values[1] = 1.0;
    }
    // Multiplicative build: extend by each prime power in turn.
    for p in primes_up_to(n_max) {
        let st = f.split_type(p);
        let mut pe = p;
        let mut e = 1;
        let mut locals = Vec::new();
        while pe <= n_max {
            locals.push((pe, alpha_local(p, e, st, x)));
            if pe > n_max / p {
                break;
            }
            pe *= p;
            e += 1;
        }
        for m in (1..=n_max / p).rev() {
            if m % p == 0 || values[m as usize] == 0.0 {
                continue;
            }
            for &(pe, a) in &locals {
                let n = m.saturating_mul(pe);
                if n > n_max {
                    break;
                }
                values[n as usize] = values[m as usize] * a;
            }
        }
    }
    Ok(AlphaCoeffs {
        x,
        n_max,
        field: f.clone(),
        values,
    })
}
