//! Batch experiments: configuration, check execution and CSV/JSON reports.

use crate::error::{LabError, Result};
use crate::euler::{a_k_galois, mertens_ideal, GaloisSplitData};
use crate::field::{build_field, l_one_chi, QuadraticField};
use crate::hybrid::{default_window, HybridConfig, HybridEvaluator};
use crate::lfun::LComponent;
use crate::moments::{
    moment_integral, splitting_ratio, theorem2_check, theorem3_check, Integrand, MomentContext,
};
use crate::recipe::{
    a_l_constant, chandra_nara_check, coeff_sum_check, contour_sum_check, gl_multinomial,
    leading_constant_gk, selberg_checks, NonPrimitiveSpec, ShiftKernel,
};
use crate::special::g_of_k;
use crate::zeros::{
    expected_zero_count, load_or_compute, load_or_compute_merged, max_scan_step, ZeroTable,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Hybrid,
    Moment,
    Splitting,
    Theorem2,
    Theorem3,
    Constants,
    Recipe,
    CoeffSums,
}

impl Check {
    pub const ALL: [Check; 8] = [
        Check::Hybrid,
        Check::Moment,
        Check::Splitting,
        Check::Theorem2,
        Check::Theorem3,
        Check::Constants,
        Check::Recipe,
        Check::CoeffSums,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Hybrid => "hybrid",
            Check::Moment => "moment",
            Check::Splitting => "splitting",
            Check::Theorem2 => "theorem2",
            Check::Theorem3 => "theorem3",
            Check::Constants => "constants",
            Check::Recipe => "recipe",
            Check::CoeffSums => "coeff-sums",
        }
    }

    fn needs_zeros(self) -> bool {
        matches!(self, Check::Hybrid | Check::Splitting | Check::Theorem3)
    }
}

/// Everything a run needs; every field can come from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "d_K")]
    pub d_k: i64,
    #[serde(rename = "T")]
    pub t: Vec<f64>,
    #[serde(rename = "X")]
    pub x: Vec<f64>,
    pub k: Vec<f64>,
    pub t_max: Option<f64>,
    pub step: Option<f64>,
    pub grid_step: Option<f64>,
    pub cache_dir: PathBuf,
    pub out: Option<PathBuf>,
    pub format: ReportFormat,
    pub workers: usize,
    pub deterministic: bool,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d_k: -4,
            t: vec![1000.0],
            x: vec![16.0],
            k: vec![1.0],
            t_max: None,
            step: None,
            grid_step: None,
            cache_dir: PathBuf::from("zero-cache"),
            out: None,
            format: ReportFormat::Csv,
            workers: 1,
            deterministic: true,
            seed: 20_240_601,
            checks: Check::ALL.to_vec(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        build_field(self.d_k)?;
        if self.t.is_empty() || self.x.is_empty() || self.k.is_empty() || self.checks.is_empty() {
            return Err(LabError::Config(
                "T, X, k and checks must be nonempty".into(),
            ));
        }
        if let Some(t) = self.t.iter().find(|t| !(**t >= 100.0)) {
            return Err(LabError::Config(format!("T = {t} is below 100")));
        }
        if let Some(x) = self.x.iter().find(|x| !(**x >= 2.0)) {
            return Err(LabError::Config(format!("X = {x} is below 2")));
        }
        if let Some(k) = self.k.iter().find(|k| !(**k >= 0.0)) {
            return Err(LabError::Config(format!("k = {k} is negative")));
        }
        if self.workers == 0 {
            return Err(LabError::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// Height the merged zero table must reach for the selected checks.
    pub fn zero_height(&self) -> Option<f64> {
        if !self.checks.iter().any(|c| c.needs_zeros()) {
            return None;
        }
        let t = self.t.iter().cloned().fold(0.0, f64::max);
        let w = self
            .x
            .iter()
            .map(|&x| default_window(x))
            .fold(0.0, f64::max);
        let need = 2.0 * t + w + 1.0;
        Some(self.t_max.map_or(need, |m| m.max(need)))
    }
}

/// One line of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub check: String,
    #[serde(rename = "d_K")]
    pub d_k: i64,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    #[serde(rename = "X")]
    pub x: Option<f64>,
    pub k: Option<f64>,
    pub quantity: String,
    /// JSON has no NaN; a failed row's value is written as null and read back as NaN.
    #[serde(deserialize_with = "nan_from_null")]
    pub value: f64,
    pub reference: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub pass: bool,
    pub detail: String,
}

fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl ReportRow {
    fn new(check: Check, d_k: i64, quantity: &str, value: f64) -> Self {
        Self {
            check: check.name().into(),
            d_k,
            t: None,
            x: None,
            k: None,
            quantity: quantity.into(),
            value,
            reference: None,
            lo: None,
            hi: None,
            pass: value.is_finite(),
            detail: String::new(),
        }
    }

    fn at(mut self, t: Option<f64>, x: Option<f64>, k: Option<f64>) -> Self {
        self.t = t;
        self.x = x;
        self.k = k;
        self
    }

    fn reference(mut self, r: f64) -> Self {
        self.reference = Some(r);
        self
    }

    /// Pass iff lo ≤ value ≤ hi.
    fn band(mut self, lo: Option<f64>, hi: Option<f64>) -> Self {
        self.lo = lo;
        self.hi = hi;
        self.pass = self.value.is_finite()
            && lo.is_none_or(|l| self.value >= l)
            && hi.is_none_or(|h| self.value <= h);
        self
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }

    fn failed(check: Check, d_k: i64, quantity: &str, err: &LabError) -> Self {
        let mut r = Self::new(check, d_k, quantity, f64::NAN);
        r.pass = false;
        r.detail = err.to_string();
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn write_to<W: Write>(&self, format: ReportFormat, mut w: W) -> Result<()> {
        match format {
            ReportFormat::Csv => {
                let mut cw = csv::Writer::from_writer(w);
                for r in &self.rows {
                    cw.serialize(r).map_err(|e| LabError::Io(e.to_string()))?;
                }
                cw.flush()?;
            }
            ReportFormat::Json => {
                serde_json::to_writer_pretty(&mut w, &self.rows)
                    .map_err(|e| LabError::Io(e.to_string()))?;
                writeln!(w)?;
            }
        }
        Ok(())
    }

    pub fn to_string(&self, format: ReportFormat) -> Result<String> {
        let mut buf = Vec::new();
        self.write_to(format, &mut buf)?;
        String::from_utf8(buf).map_err(|e| LabError::Io(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let rows = rd
            .deserialize()
            .collect::<std::result::Result<Vec<ReportRow>, _>>()
            .map_err(|e| LabError::Io(e.to_string()))?;
        Ok(Self { rows })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rows = serde_json::from_str(text).map_err(|e| LabError::Io(e.to_string()))?;
        Ok(Self { rows })
    }

    /// Writes to `out`, or stdout when absent.
    pub fn emit(&self, format: ReportFormat, out: Option<&Path>) -> Result<()> {
        match out {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)?;
                }
                self.write_to(format, std::io::BufWriter::new(std::fs::File::create(p)?))
            }
            None => self.write_to(format, std::io::stdout().lock()),
        }
    }
}

/// Per-component outcome of a zero-cache refresh.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroCacheEntry {
    pub path: PathBuf,
    pub t_max: f64,
    pub count: usize,
    pub expected: f64,
}

/// Computes or verifies both component zero caches up to `t_max`.
pub fn cmd_zeros(
    d_k: i64,
    t_max: f64,
    step: Option<f64>,
    cache_dir: &Path,
) -> Result<Vec<ZeroCacheEntry>> {
    let f = build_field(d_k)?;
    if !(t_max > 0.0) {
        return Err(LabError::InvalidParameter("t_max must be positive".into()));
    }
    let mut out = Vec::new();
    for c in LComponent::factors_of(&f) {
        if let Some(s) = step {
            let bound = max_scan_step(&c, t_max);
            if !(s > 0.0) || s > bound {
                return Err(LabError::InvalidParameter(format!(
                    "scan step {s} is too coarse for {} up to {t_max} (at most {bound:.5})",
                    c.label()
                )));
            }
        }
        let table = load_or_compute(cache_dir, &c, t_max, step)?;
        let count = table.window(0.0, t_max).len();
        let expected = expected_zero_count(&c, t_max);
        if (count as f64 - expected).abs() > 2.5 {
            return Err(LabError::MissedZeros {
                component: c.label().into(),
                found: count,
                expected,
            });
        }
        out.push(ZeroCacheEntry {
            path: crate::zeros::cache_path(cache_dir, &c),
            t_max: table.t_max,
            count,
            expected,
        });
    }
    Ok(out)
}

/// Height of the largest Mertens product reported by `cmd_constants`.
pub const MERTENS_HEIGHT: f64 = 1e6;

/// A row of the constants table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsRow {
    #[serde(rename = "d_K")]
    pub d_k: i64,
    pub k: f64,
    pub a_k: f64,
    pub a_k_tail: f64,
    pub a_l: Option<f64>,
    pub a_l_tail: Option<f64>,
    pub chi_power: f64,
    pub g_k: Option<String>,
    pub g_l: Option<String>,
    pub l_one_chi: f64,
    pub mertens_x: f64,
    pub mertens_ratio: f64,
}

/// a(k), a_L(k), L(1,χ)^{2k²}, g(k), g_L(k) and the Mertens ratio for each k.
pub fn cmd_constants(d_k: i64, ks: &[f64]) -> Result<Vec<ConstantsRow>> {
    let f = build_field(d_k)?;
    let l1 = l_one_chi(&f);
    let mertens = mertens_ideal(&f, MERTENS_HEIGHT)?;
    let spec = NonPrimitiveSpec::dedekind(&f);
    let data = GaloisSplitData::Quadratic(f.clone());
    let mut rows = Vec::new();
    for &k in ks {
        let a = a_k_galois(k, &data, 1e-6)?;
        let integral = k.fract() == 0.0;
        let (a_l, a_l_tail, g_k, g_l) = if integral && k == 0.0 {
            (
                Some(1.0),
                Some(0.0),
                Some("1".to_string()),
                Some("1".to_string()),
            )
        } else if integral {
            let kk = k as u32;
            let al = a_l_constant(&spec, kk, 1e-6)?;
            (
                Some(al.value),
                Some(al.tail_bound),
                Some(g_of_k(kk)?.to_string()),
                Some(gl_multinomial(&spec, kk)?.to_string()),
            )
        } else {
            (None, None, None, None)
        };
        rows.push(ConstantsRow {
            d_k,
            k,
            a_k: a.value,
            a_k_tail: a.tail_bound,
            a_l,
            a_l_tail,
            chi_power: l1.powf(2.0 * k * k),
            g_k,
            g_l,
            l_one_chi: l1,
            mertens_x: MERTENS_HEIGHT,
            mertens_ratio: mertens.ratio(),
        });
    }
    Ok(rows)
}

pub fn write_constants<W: Write>(
    rows: &[ConstantsRow],
    format: ReportFormat,
    mut w: W,
) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut cw = csv::Writer::from_writer(w);
            for r in rows {
                cw.serialize(r).map_err(|e| LabError::Io(e.to_string()))?;
            }
            cw.flush()?;
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut w, rows).map_err(|e| LabError::Io(e.to_string()))?;
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Number of random heights per hybrid row.
pub const HYBRID_SAMPLES: usize = 200;

enum Job {
    Hybrid { t: f64, x: f64, seed: u64 },
    Moment { t: f64, k: f64 },
    Splitting { t: f64, x: f64, k: f64 },
    Theorem2 { t: f64, k: f64 },
    Theorem3 { t: f64, x: f64 },
    Constants { k: f64 },
    Recipe,
    CoeffSums,
}

struct Shared<'a> {
    cfg: &'a ExperimentConfig,
    field: QuadraticField,
    zeros: Option<ZeroTable>,
}

impl Shared<'_> {
    fn zeros(&self) -> Result<ZeroTable> {
        self.zeros
            .clone()
            .ok_or_else(|| LabError::InvalidParameter("no zero table loaded".into()))
    }
}

fn plan(cfg: &ExperimentConfig, seed: u64) -> Vec<Job> {
    let mut jobs = Vec::new();
    for &check in &cfg.checks {
        match check {
            Check::Hybrid => {
                for &t in &cfg.t {
                    for &x in &cfg.x {
                        jobs.push(Job::Hybrid {
                            t,
                            x,
                            seed: seed ^ (t.to_bits().rotate_left(7)) ^ x.to_bits(),
                        });
                    }
                }
            }
            Check::Moment => {
                for &t in &cfg.t {
                    for &k in &cfg.k {
                        jobs.push(Job::Moment { t, k });
                    }
                }
            }
            Check::Splitting => {
                for &t in &cfg.t {
                    for &x in &cfg.x {
                        for &k in &cfg.k {
                            jobs.push(Job::Splitting { t, x, k });
                        }
                    }
                }
            }
            Check::Theorem2 => {
                for &t in &cfg.t {
                    for &k in &cfg.k {
                        jobs.push(Job::Theorem2 { t, k });
                    }
                }
            }
            Check::Theorem3 => {
                for &t in &cfg.t {
                    for &x in &cfg.x {
                        jobs.push(Job::Theorem3 { t, x });
                    }
                }
            }
            Check::Constants => {
                for &k in &cfg.k {
                    jobs.push(Job::Constants { k });
                }
            }
            Check::Recipe => jobs.push(Job::Recipe),
            Check::CoeffSums => jobs.push(Job::CoeffSums),
        }
    }
    jobs
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (pos - i as f64) * (sorted[j] - sorted[i])
}

fn run_job(job: &Job, sh: &Shared) -> Vec<ReportRow> {
    let d = sh.cfg.d_k;
    let f = &sh.field;
    let grid = sh.cfg.grid_step;
    match *job {
        Job::Hybrid { t, x, seed } => {
            let go = || -> Result<Vec<ReportRow>> {
                let h = HybridEvaluator::new(f, HybridConfig::new(x), sh.zeros()?)?;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let mut res = Vec::with_capacity(HYBRID_SAMPLES);
                for _ in 0..HYBRID_SAMPLES {
                    res.push(h.residual(rng.random_range(t..2.0 * t))?);
                }
                res.sort_by(f64::total_cmp);
                let at = |r: ReportRow| {
                    r.at(Some(t), Some(x), None)
                        .detail(format!("{HYBRID_SAMPLES} heights in [T,2T], seed {seed}"))
                };
                Ok(vec![
                    at(
                        ReportRow::new(Check::Hybrid, d, "median_residual", quantile(&res, 0.5))
                            .band(None, Some(0.05)),
                    ),
                    at(
                        ReportRow::new(Check::Hybrid, d, "p95_residual", quantile(&res, 0.95))
                            .band(None, Some(0.15)),
                    ),
                ])
            };
            go().unwrap_or_else(|e| {
                vec![
                    ReportRow::failed(Check::Hybrid, d, "median_residual", &e).at(
                        Some(t),
                        Some(x),
                        None,
                    ),
                ]
            })
        }
        Job::Moment { t, k } => {
            let go = || -> Result<ReportRow> {
                let ctx = MomentContext::new(f, sh.cfg.x[0], Default::default())?;
                let m = moment_integral(Integrand::ZetaK, &ctx, t, k, grid)?;
                let mut r =
                    ReportRow::new(Check::Moment, d, "I_k", m.value).at(Some(t), None, Some(k));
                if let Some(p) = m.predicted {
                    r = r.reference(p);
                }
                Ok(r.detail(format!("n_points {} grid_step {}", m.n_points, m.grid_step)))
            };
            vec![go().unwrap_or_else(|e| {
                ReportRow::failed(Check::Moment, d, "I_k", &e).at(Some(t), None, Some(k))
            })]
        }
        Job::Splitting { t, x, k } => {
            let go = || -> Result<ReportRow> {
                let ctx = MomentContext::with_zeros(f, HybridConfig::new(x), sh.zeros()?)?;
                let s = splitting_ratio(&ctx, t, k)?;
                Ok(
                    ReportRow::new(Check::Splitting, d, "splitting_ratio", s.ratio)
                        .at(Some(t), Some(x), Some(k))
                        .reference(1.0)
                        .band(Some(0.7), Some(1.4))
                        .detail(format!(
                            "I_k {} P {} Z {}",
                            s.zeta_k.value, s.euler.value, s.hadamard.value
                        )),
                )
            };
            vec![go().unwrap_or_else(|e| {
                ReportRow::failed(Check::Splitting, d, "splitting_ratio", &e).at(
                    Some(t),
                    Some(x),
                    Some(k),
                )
            })]
        }
        Job::Theorem2 { t, k } => {
            let mut rows = Vec::new();
            let mut ratios = Vec::new();
            for &x in &sh.cfg.x {
                match theorem2_check(f, t, x, k) {
                    Ok(m) => {
                        let ratio = m.ratio.unwrap_or(f64::NAN);
                        ratios.push(ratio);
                        rows.push(
                            ReportRow::new(Check::Theorem2, d, "ratio", ratio)
                                .at(Some(t), Some(x), Some(k))
                                .reference(1.0)
                                .band(Some(0.8), Some(1.25))
                                .detail(format!(
                                    "moment {} prediction {}",
                                    m.value,
                                    m.predicted.unwrap_or(f64::NAN)
                                )),
                        );
                    }
                    Err(e) => rows.push(ReportRow::failed(Check::Theorem2, d, "ratio", &e).at(
                        Some(t),
                        Some(x),
                        Some(k),
                    )),
                }
            }
            if ratios.len() >= 2 {
                let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
                rows.push(
                    ReportRow::new(Check::Theorem2, d, "x_drift", hi / lo - 1.0)
                        .at(Some(t), None, Some(k))
                        .band(None, Some(0.15))
                        .detail("max/min - 1 across X"),
                );
            }
            rows
        }
        Job::Theorem3 { t, x } => {
            let go = || -> Result<ReportRow> {
                let m = theorem3_check(f, t, HybridConfig::new(x), sh.zeros()?)?;
                Ok(
                    ReportRow::new(Check::Theorem3, d, "ratio", m.ratio.unwrap_or(f64::NAN))
                        .at(Some(t), Some(x), Some(1.0))
                        .reference(1.0)
                        .band(Some(0.6), Some(1.5))
                        .detail(format!(
                            "moment {} prediction {}",
                            m.value,
                            m.predicted.unwrap_or(f64::NAN)
                        )),
                )
            };
            vec![go().unwrap_or_else(|e| {
                ReportRow::failed(Check::Theorem3, d, "ratio", &e).at(Some(t), Some(x), Some(1.0))
            })]
        }
        Job::Constants { k } => match cmd_constants(d, &[k]) {
            Ok(c) => {
                let c = &c[0];
                let mut rows = vec![ReportRow::new(Check::Constants, d, "a_k", c.a_k)
                    .at(None, None, Some(k))
                    .detail(format!("tail {:e}", c.a_k_tail))];
                if let Some(al) = c.a_l {
                    let target = c.a_k * c.chi_power;
                    rows.push(
                        ReportRow::new(Check::Constants, d, "a_L_over_a_chi", al / target)
                            .at(None, None, Some(k))
                            .reference(1.0)
                            .band(Some(1.0 - 1e-8), Some(1.0 + 1e-8)),
                    );
                }
                rows.push(
                    ReportRow::new(Check::Constants, d, "mertens_ratio", c.mertens_ratio)
                        .at(None, Some(c.mertens_x), None)
                        .reference(1.0),
                );
                rows
            }
            Err(e) => {
                vec![ReportRow::failed(Check::Constants, d, "a_k", &e).at(None, None, Some(k))]
            }
        },
        Job::Recipe => {
            let mut rows = Vec::new();
            let c = |a: f64, b: f64| Complex64::new(a, b);
            let cases: [(&str, ShiftKernel, usize, Vec<Complex64>, f64); 3] = [
                (
                    "contour_k1_reciprocal",
                    ShiftKernel::Reciprocal { c: 0.0 },
                    1,
                    vec![c(1e-3, 0.0), c(-1e-3, 0.0)],
                    1e-6,
                ),
                (
                    "contour_k1_zeta",
                    ShiftKernel::ZetaShift,
                    1,
                    vec![c(0.01, 0.02), c(-0.013, 0.004)],
                    1e-5,
                ),
                (
                    "contour_k2_zeta",
                    ShiftKernel::ZetaShift,
                    2,
                    vec![
                        c(0.01, 0.02),
                        c(-0.013, 0.004),
                        c(0.005, -0.011),
                        c(-0.002, -0.017),
                    ],
                    1e-5,
                ),
            ];
            for (name, kernel, k, shifts, tol) in cases {
                rows.push(match contour_sum_check(kernel, k, &shifts, None) {
                    Ok(r) => ReportRow::new(Check::Recipe, d, name, r.discrepancy())
                        .at(None, None, Some(k as f64))
                        .band(None, Some(tol)),
                    Err(e) => ReportRow::failed(Check::Recipe, d, name, &e),
                });
            }
            for (k, target) in [(1usize, 1.0), (2, 1.0 / 12.0)] {
                rows.push(match leading_constant_gk(k) {
                    Ok(v) => ReportRow::new(Check::Recipe, d, "leading_constant", v)
                        .at(None, None, Some(k as f64))
                        .reference(target)
                        .band(Some(target - 1e-4), Some(target + 1e-4)),
                    Err(e) => ReportRow::failed(Check::Recipe, d, "leading_constant", &e),
                });
            }
            let spec = NonPrimitiveSpec::dedekind(f);
            for k in 1..=3u32 {
                rows.push(match gl_multinomial(&spec, k) {
                    Ok(g) => ReportRow::new(
                        Check::Recipe,
                        d,
                        "g_L",
                        g.to_string().parse().unwrap_or(f64::INFINITY),
                    )
                    .at(None, None, Some(k as f64))
                    .detail(g.to_string()),
                    Err(e) => ReportRow::failed(Check::Recipe, d, "g_L", &e),
                });
            }
            rows
        }
        Job::CoeffSums => {
            let spec = NonPrimitiveSpec::dedekind(f);
            let mut rows = Vec::new();
            rows.push(match coeff_sum_check(&spec, 1, 1_000_000) {
                Ok(r) => ReportRow::new(Check::CoeffSums, d, "coeff_sum_leading_ratio", r.ratio)
                    .at(None, None, Some(1.0))
                    .reference(1.0)
                    .band(Some(0.7), Some(1.3))
                    .detail(format!(
                        "fitted {} predicted {} condition {:.3e}",
                        r.fitted_leading, r.predicted_leading, r.condition
                    )),
                Err(e) => ReportRow::failed(Check::CoeffSums, d, "coeff_sum_leading_ratio", &e),
            });
            match selberg_checks(&spec, 1e7) {
                Ok(s) => {
                    rows.push(
                        ReportRow::new(
                            Check::CoeffSums,
                            d,
                            "selberg_regularity_band",
                            s.regularity_band,
                        )
                        .band(None, Some(1.5)),
                    );
                    rows.push(
                        ReportRow::new(
                            Check::CoeffSums,
                            d,
                            "selberg_orthogonality_max",
                            s.orthogonality_max,
                        )
                        .band(None, Some(1.0)),
                    );
                }
                Err(e) => rows.push(ReportRow::failed(
                    Check::CoeffSums,
                    d,
                    "selberg_regularity_band",
                    &e,
                )),
            }
            match chandra_nara_check(f, 1e7) {
                Ok(c) => {
                    rows.push(
                        ReportRow::new(Check::CoeffSums, d, "chandra_power", c.power)
                            .reference(1.0)
                            .band(Some(0.98), Some(1.02)),
                    );
                    rows.push(
                        ReportRow::new(
                            Check::CoeffSums,
                            d,
                            "chandra_top_decade_drift",
                            c.top_decade_drift,
                        )
                        .band(None, Some(0.1)),
                    );
                    rows.push(
                        ReportRow::new(Check::CoeffSums, d, "chandra_c", c.fitted_c)
                            .detail(format!("lower coefficient {}", c.lower_coefficient)),
                    );
                }
                Err(e) => rows.push(ReportRow::failed(Check::CoeffSums, d, "chandra_power", &e)),
            }
            rows
        }
    }
}

/// Runs every selected check over the config grid; rows come out in config order.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let field = build_field(cfg.d_k)?;
    let zeros = match cfg.zero_height() {
        Some(h) => Some(load_or_compute_merged(&cfg.cache_dir, &field, h)?),
        None => None,
    };
    let seed = if cfg.deterministic {
        cfg.seed
    } else {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(cfg.seed)
    };
    let jobs = plan(cfg, seed);
    let sh = Shared { cfg, field, zeros };
    let mut slots: Vec<Vec<ReportRow>> = (0..jobs.len()).map(|_| Vec::new()).collect();
    if cfg.workers <= 1 {
        for (slot, job) in slots.iter_mut().zip(&jobs) {
            *slot = run_job(job, &sh);
        }
    } else {
        std::thread::scope(|sc| {
            let handles: Vec<_> = (0..cfg.workers)
                .map(|w| {
                    let (jobs, sh) = (&jobs, &sh);
                    sc.spawn(move || {
                        (w..jobs.len())
                            .step_by(cfg.workers)
                            .map(|i| (i, run_job(&jobs[i], sh)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, rows) in h.join().expect("report worker panicked") {
                    slots[i] = rows;
                }
            }
        });
    }
    Ok(Report {
        rows: slots.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let cfg = ExperimentConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
        let partial = ExperimentConfig::from_toml_str(
            "d_K = 5\nX = [10.0, 25.0]\nchecks = [\"coeff-sums\"]\n",
        )
        .unwrap();
        assert_eq!(partial.d_k, 5);
        assert_eq!(partial.x, vec![10.0, 25.0]);
        assert_eq!(partial.checks, vec![Check::CoeffSums]);
        assert!(ExperimentConfig::from_toml_str("checks = [\"bogus\"]").is_err());
        assert!(ExperimentConfig::from_toml_str("colour = 1").is_err());
        let mut bad = ExperimentConfig::default();
        bad.t.clear();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn report_formats_agree() {
        let rows = vec![
            ReportRow::new(Check::Moment, -4, "I_k", 19.697_701_234_567_89)
                .at(Some(1000.0), None, Some(1.0))
                .reference(11.9),
            ReportRow::new(Check::Recipe, -4, "g_L", 2.0).detail("a, b"),
            ReportRow::new(Check::Hybrid, -4, "median_residual", 0.2).band(None, Some(0.05)),
        ];
        let rep = Report { rows };
        assert!(!rep.all_pass());
        let csv = rep.to_string(ReportFormat::Csv).unwrap();
        let json = rep.to_string(ReportFormat::Json).unwrap();
        assert_eq!(Report::from_csv(&csv).unwrap(), rep);
        assert_eq!(Report::from_json(&json).unwrap(), rep);
        assert!(csv.starts_with("check,d_K,T,X,k,quantity,value,reference,lo,hi,pass,detail\n"));
    }

    #[test]
    fn constants_rows() {
        let rows = cmd_constants(-4, &[0.0, 1.0]).unwrap();
        let z = &rows[0];
        assert_eq!((z.a_k, z.a_l, z.chi_power), (1.0, Some(1.0), 1.0));
        assert_eq!(z.g_k.as_deref(), Some("1"));
        let one = &rows[1];
        assert!((one.l_one_chi - std::f64::consts::PI / 4.0).abs() < 1e-10);
        assert_eq!(one.g_k.as_deref(), Some("1"));
        assert_eq!(one.g_l.as_deref(), Some("2"));
    }
}
