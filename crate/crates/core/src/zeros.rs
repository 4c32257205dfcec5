//! Critical-line zeros: sign-change scanning of the rotated real function,
//! refinement, count audits, and the plain-text zero cache.

use crate::error::{LabError, Result};
use crate::field::QuadraticField;
use crate::lfun::{hardy_rotation, ComponentGrid, ComponentKind, LComponent};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Where a table of ordinates came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroSource {
    Zeta,
    Lchi { d_k: i64, q: u64 },
    Merged { d_k: i64, q: u64 },
}

impl ZeroSource {
    pub fn of(c: &LComponent) -> Self {
        match &c.field {
            None => ZeroSource::Zeta,
            Some(f) => ZeroSource::Lchi { d_k: f.d_k, q: f.q },
        }
    }
}

/// Sorted zero ordinates, stored on a fixed 10⁻¹² grid so the text form is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroTable {
    pub source: ZeroSource,
    pub t_max: f64,
    pub step: f64,
    picos: Vec<i64>,
    ordinates: Vec<f64>,
}

const SCALE: f64 = 1e12;

impl ZeroTable {
    /// Builds a table from raw ordinates (rounded to 12 decimals and sorted).
    pub fn new(source: ZeroSource, t_max: f64, step: f64, ordinates: Vec<f64>) -> Self {
        let mut picos: Vec<i64> = ordinates
            .iter()
            .map(|&g| (g * SCALE).round() as i64)
            .collect();
        picos.sort_unstable();
        Self::from_picos(source, t_max, step, picos)
    }

    fn from_picos(source: ZeroSource, t_max: f64, step: f64, picos: Vec<i64>) -> Self {
        let ordinates = picos.iter().map(|&p| p as f64 / SCALE).collect();
        Self {
            source,
            t_max,
            step,
            picos,
            ordinates,
        }
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    pub fn len(&self) -> usize {
        self.ordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordinates.is_empty()
    }

    /// Ordinates in [lo, hi].
    pub fn window(&self, lo: f64, hi: f64) -> &[f64] {
        let a = self.ordinates.partition_point(|&g| g < lo);
        let b = self.ordinates.partition_point(|&g| g <= hi);
        &self.ordinates[a..b.max(a)]
    }

    /// Whether the table is complete up to `hi`.
    pub fn covers(&self, hi: f64) -> bool {
        self.t_max >= hi
    }

    /// Restriction to ordinates ≤ t_max.
    pub fn truncated(&self, t_max: f64) -> Self {
        let b = self.ordinates.partition_point(|&g| g <= t_max);
        Self::from_picos(
            self.source,
            t_max.min(self.t_max),
            self.step,
            self.picos[..b].to_vec(),
        )
    }

    /// Serialises to the cache text format.
    pub fn to_text(&self) -> Result<String> {
        let (label, d_k, q) = match self.source {
            ZeroSource::Zeta => ("zeta", 1, 1),
            ZeroSource::Lchi { d_k, q } => ("Lchi", d_k, q),
            ZeroSource::Merged { .. } => {
                return Err(LabError::Cache(
                    "merged tables are not cached; cache the factors".into(),
                ))
            }
        };
        let mut out = format!(
            "# component={label} d_K={d_k} q={q} t_max={} step={}\n",
            self.t_max, self.step
        );
        for &p in &self.picos {
            let sign = if p < 0 { "-" } else { "" };
            let a = p.unsigned_abs();
            let _ = writeln!(
                out,
                "{sign}{}.{:012}",
                a / 1_000_000_000_000,
                a % 1_000_000_000_000
            );
        }
        Ok(out)
    }

    /// Parses the cache text format.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| LabError::Cache("empty file".into()))?;
        let body = header
            .strip_prefix("# ")
            .ok_or_else(|| LabError::Cache(format!("bad header: {header}")))?;
        let mut label = None;
        let (mut d_k, mut q, mut t_max, mut step) = (None, None, None, None);
        for field in body.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| LabError::Cache(format!("bad header field: {field}")))?;
            let bad = |_| LabError::Cache(format!("bad value for {k}: {v}"));
            match k {
                "component" => label = Some(v.to_string()),
                "d_K" => d_k = Some(v.parse::<i64>().map_err(|e| bad(e.to_string()))?),
                "q" => q = Some(v.parse::<u64>().map_err(|e| bad(e.to_string()))?),
                "t_max" => t_max = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "step" => step = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                _ => return Err(LabError::Cache(format!("unknown header key {k}"))),
            }
        }
        let missing = |k: &str| LabError::Cache(format!("header lacks {k}"));
        let d_k = d_k.ok_or_else(|| missing("d_K"))?;
        let q = q.ok_or_else(|| missing("q"))?;
        let source = match label.as_deref() {
            Some("zeta") => ZeroSource::Zeta,
            Some("Lchi") => ZeroSource::Lchi { d_k, q },
            other => return Err(LabError::Cache(format!("unknown component {other:?}"))),
        };
        let mut picos = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            picos.push(parse_fixed12(line).ok_or_else(|| {
                LabError::Cache(format!("line {}: not a 12-decimal ordinate: {line}", i + 2))
            })?);
        }
        if picos.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LabError::Cache("ordinates not strictly increasing".into()));
        }
        Ok(Self::from_picos(
            source,
            t_max.ok_or_else(|| missing("t_max"))?,
            step.ok_or_else(|| missing("step"))?,
            picos,
        ))
    }

    /// Writes via a sibling temporary file and a rename.
    pub fn write(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        std::fs::write(&tmp, self.to_text()?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn parse_fixed12(s: &str) -> Option<i64> {
    let (neg, s) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s),
    };
    let (int, frac) = s.split_once('.')?;
    if frac.len() != 12 || int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let v = int.parse::<i64>().ok()?.checked_mul(1_000_000_000_000)? + frac.parse::<i64>().ok()?;
    Some(if neg { -v } else { v })
}

/// Mean zero density (1/π)·log(q·t/2π), in the normalisation that counts ±γ.
pub fn zero_density_expected(c: &LComponent, t: f64) -> f64 {
    (c.conductor as f64 * t / (2.0 * PI)).ln() / PI
}

/// Smooth part of the zero-counting function N(t) = #{0 < γ ≤ t}.
pub fn expected_zero_count(c: &LComponent, t: f64) -> f64 {
    let offset = match c.kind {
        ComponentKind::Zeta => 1.0,
        ComponentKind::DirichletL => 0.0,
    };
    c.theta(t) / PI + offset
}

/// Largest admissible scan step for heights up to t_max.
pub fn max_scan_step(c: &LComponent, t_max: f64) -> f64 {
    0.25 / (c.conductor as f64 * t_max + 10.0).ln()
}

const INTERP: usize = 12;

/// Lagrange interpolation through `INTERP` samples starting at index `i0`, evaluated at
/// fractional position `x` (in steps from i0); returns value and derivative in steps.
fn interp(vals: &[f64], i0: usize, x: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut dv = 0.0;
    for j in 0..INTERP {
        let mut l = 1.0;
        let mut dl = 0.0;
        for m in 0..INTERP {
            if m != j {
                let den = j as f64 - m as f64;
                dl = dl * (x - m as f64) / den + l / den;
                l *= (x - m as f64) / den;
            }
        }
        v += vals[i0 + j] * l;
        dv += vals[i0 + j] * dl;
    }
    (v, dv)
}

fn illinois(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    tol: f64,
) -> f64 {
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c);
        if fc == 0.0 || (b - a).abs() < tol {
            return c;
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (a + b)
}

/// Zeros located from uniformly spaced rotated values starting at t0.
fn zeros_from_samples(grid: &ComponentGrid, t0: f64, h: f64, vals: &[f64], t_hi: f64) -> Vec<f64> {
    let comp = grid.component().clone();
    let exact = |t: f64| (hardy_rotation(t, &comp) * grid.eval(t)).re;
    let n = vals.len();
    let mut out = Vec::new();
    for i in 0..n.saturating_sub(1) {
        let (fa, fb) = (vals[i], vals[i + 1]);
        if fa == 0.0 {
            out.push(t0 + i as f64 * h);
            continue;
        }
        if fa.signum() == fb.signum() || fb == 0.0 {
            continue;
        }
        let i0 = (i + 1)
            .saturating_sub(INTERP / 2)
            .min(n.saturating_sub(INTERP));
        let root = if n >= INTERP {
            let x = illinois(
                |x| interp(vals, i0, x).0,
                (i - i0) as f64,
                (i + 1 - i0) as f64,
                fa,
                fb,
                1e-13,
            );
            let g0 = t0 + (i0 as f64 + x) * h;
            let d = interp(vals, i0, x).1 / h;
            let g1 = g0 - exact(g0) / d;
            let lo = t0 + i as f64 * h;
            if g1 > lo && g1 < lo + h {
                g1
            } else {
                illinois(exact, lo, lo + h, fa, fb, 1e-11)
            }
        } else {
            let lo = t0 + i as f64 * h;
            illinois(exact, lo, lo + h, fa, fb, 1e-11)
        };
        if root > 0.0 && root <= t_hi {
            out.push(root);
        }
    }
    out
}

/// Finds all critical-line zeros of `c` with 0 < γ ≤ t_max.
pub fn find_zeros(c: &LComponent, t_max: f64, step: f64) -> Result<ZeroTable> {
    let bound = max_scan_step(c, t_max);
    if !(step > 0.0 && step <= bound * (1.0 + 1e-12)) {
        return Err(LabError::InvalidParameter(format!(
            "scan step {step} exceeds 0.25/log(q·t_max+10) = {bound:.6}"
        )));
    }
    let source = ZeroSource::of(c);
    if t_max <= 0.0 {
        return Ok(ZeroTable::new(source, t_max.max(0.0), step, Vec::new()));
    }
    let count = (t_max / step).ceil() as usize + 2;
    let grid = ComponentGrid::new(c, 0.5, count as f64 * step + 1.0);
    let vals = grid.hardy_grid(0.0, step, count);
    let mut zeros = zeros_from_samples(&grid, 0.0, step, &vals, t_max);

    // Rescan wide gaps finely, where a close pair could hide between grid points.
    let mut extra = Vec::new();
    let mut prev = 0.0;
    for &g in zeros.iter().chain(std::iter::once(&t_max)) {
        if expected_zero_count(c, g) - expected_zero_count(c, prev) > 2.2 {
            let fine = step / 8.0;
            let m = ((g - prev) / fine).ceil() as usize + 1;
            let sub = grid.hardy_grid(prev, fine, m);
            for z in zeros_from_samples(&grid, prev, fine, &sub, t_max) {
                if z > prev + 1e-9 && z < g - 1e-9 {
                    extra.push(z);
                }
            }
        }
        prev = g;
    }
    zeros.extend(extra);
    zeros.sort_by(f64::total_cmp);
    zeros.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let expected = expected_zero_count(c, t_max);
    if t_max >= 2.0 && (zeros.len() as f64 - expected).abs() > 2.0 {
        return Err(LabError::MissedZeros {
            component: c.label().into(),
            found: zeros.len(),
            expected,
        });
    }
    Ok(ZeroTable::new(source, t_max, step, zeros))
}

/// Sorted union of the zeros of ζ and L(·,χ).
pub fn merged_zeros(f: &QuadraticField, t_max: f64, step: f64) -> Result<ZeroTable> {
    let [z, l] = LComponent::factors_of(f);
    let a = find_zeros(&z, t_max, step)?;
    let b = find_zeros(&l, t_max, step)?;
    Ok(merge_tables(f, &a, &b))
}

/// Merges two factor tables, keeping multiplicity.
pub fn merge_tables(f: &QuadraticField, a: &ZeroTable, b: &ZeroTable) -> ZeroTable {
    let mut picos = a.picos.clone();
    picos.extend_from_slice(&b.picos);
    picos.sort_unstable();
    ZeroTable::from_picos(
        ZeroSource::Merged { d_k: f.d_k, q: f.q },
        a.t_max.min(b.t_max),
        a.step.max(b.step),
        picos,
    )
}

/// File name used for a component's cache.
pub fn cache_path(dir: &Path, c: &LComponent) -> PathBuf {
    match &c.field {
        None => dir.join("zeros_zeta.txt"),
        Some(f) => dir.join(format!("zeros_lchi_{}.txt", f.d_k)),
    }
}

/// Loads a cached table reaching t_max, or computes and stores one.
pub fn load_or_compute(
    dir: &Path,
    c: &LComponent,
    t_max: f64,
    step: Option<f64>,
) -> Result<ZeroTable> {
    let path = cache_path(dir, c);
    if path.exists() {
        let table = ZeroTable::read(&path)?;
        if table.source != ZeroSource::of(c) {
            return Err(LabError::Cache(format!(
                "{} holds a different component",
                path.display()
            )));
        }
        if table.covers(t_max) {
            return Ok(table);
        }
    }
    let step = step.unwrap_or_else(|| max_scan_step(c, t_max));
    let table = find_zeros(c, t_max, step)?;
    std::fs::create_dir_all(dir)?;
    table.write(&path)?;
    Ok(table)
}

/// Cached factor tables merged into the zero set of ζ_K.
pub fn load_or_compute_merged(dir: &Path, f: &QuadraticField, t_max: f64) -> Result<ZeroTable> {
    let [z, l] = LComponent::factors_of(f);
    let a = load_or_compute(dir, &z, t_max, None)?.truncated(t_max);
    let b = load_or_compute(dir, &l, t_max, None)?.truncated(t_max);
    Ok(merge_tables(f, &a, &b))
}
