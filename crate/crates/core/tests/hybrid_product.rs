use dedekind_lab::field::{build_field, QuadraticField};
use dedekind_lab::hybrid::*;
use dedekind_lab::lfun::zeta_k_eval;
use dedekind_lab::zeros::{load_or_compute_merged, ZeroTable};
use num_complex::Complex64;
use std::path::PathBuf;
use std::sync::OnceLock;

fn gaussian() -> QuadraticField {
    build_field(-4).unwrap()
}

fn zeros() -> &'static ZeroTable {
    static Z: OnceLock<ZeroTable> = OnceLock::new();
    Z.get_or_init(|| {
        let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("zero-cache");
        load_or_compute_merged(&dir, &gaussian(), 3000.0).unwrap()
    })
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn explicit_formula_holds() {
    let f = gaussian();
    let k = kernel_build(16.0).unwrap();
    assert!(explicit_formula_residual(c(1.5, 30.0), &f, &k, zeros()).unwrap() < 1e-3);
    assert!(explicit_formula_residual(c(2.0, 0.0), &f, &k, zeros()).unwrap() < 1e-4);
    assert!(explicit_formula_residual(c(1.1, 0.0), &f, &k, zeros()).is_err());
}

#[test]
fn pole_term_isolation() {
    let f = gaussian();
    let k = kernel_build(16.0).unwrap();
    let s = c(1.1, 0.0);
    let t = explicit_formula_terms(s, &f, &k, zeros()).unwrap();
    let with = t.residual();
    let without = (t.difference() + t.pole).norm();
    let expected = (k.u_hat(c(1.0 - 0.1 * 16f64.ln(), 0.0)) / 0.1).norm();
    assert!(with < 1e-6, "{with}");
    assert!((without - expected).abs() < 1e-6 + 1e-3 * expected);
    // The form −χ_K û(...)/(s−1) does not balance the identity.
    let chi_k = dedekind_lab::field::l_one_chi(&f);
    let literal = (t.difference() + t.pole - chi_k * t.pole).norm();
    assert!(literal > 0.1, "{literal}");
}

#[test]
fn trivial_zero_multiplicities() {
    // At X = 2 the trivial-zero terms are large enough to resolve their orders.
    for d in [-4, 5, -3, 8] {
        let f = build_field(d).unwrap();
        let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("zero-cache");
        let z = load_or_compute_merged(&dir, &f, 600.0).unwrap();
        let k = kernel_build(2.0).unwrap();
        let t = explicit_formula_terms(c(1.4, 5.0), &f, &k, &z).unwrap();
        assert!(t.residual() < 1e-6, "d={d} {}", t.residual());
    }
}

#[test]
fn window_doubling() {
    let k = kernel_build(16.0).unwrap();
    let w = default_window(16.0);
    let s = c(0.5, 1000.3);
    let a = log_z_eval(s, &k, w, zeros()).unwrap();
    let b = log_z_eval(s, &k, 2.0 * w, zeros()).unwrap();
    assert!((a - b).norm() < 1e-2);
}

#[test]
fn z_vanishes_linearly_at_zero() {
    let f = gaussian();
    let cfg = HybridConfig::new(4.0);
    let gamma = zeros().ordinates()[0];
    let rho = c(0.5, gamma);
    let r1 = z_eval(rho + 1e-4, &f, &cfg, zeros()).unwrap().norm() / 1e-4;
    let r2 = z_eval(rho + 1e-5, &f, &cfg, zeros()).unwrap().norm() / 1e-5;
    assert!((r1 / r2 - 1.0).abs() < 1e-3, "{r1} {r2}");
    assert!(z_eval(c(0.5, 10.0), &f, &cfg, zeros()).unwrap().is_finite());
}

#[test]
fn coverage_is_enforced() {
    let f = gaussian();
    let cfg = HybridConfig::new(16.0);
    assert!(z_eval(c(0.5, 2900.0), &f, &cfg, zeros()).is_err());
    let mut narrow = cfg.clone();
    narrow.zero_window = 1.0;
    assert!(narrow.validate().is_err());
}

#[test]
fn hybrid_residual_small_and_decaying() {
    let f = gaussian();
    let h = HybridEvaluator::new(&f, HybridConfig::new(16.0), zeros().clone()).unwrap();
    assert!(h.residual(1000.0).unwrap() < 0.05);
    assert!(
        (hybrid_residual(1000.0, &f, &HybridConfig::new(16.0), zeros()).unwrap()
            - h.residual(1000.0).unwrap())
        .abs()
            < 1e-15
    );
    let median = |t0: f64| {
        let mut r: Vec<f64> = (0..21)
            .map(|i| h.residual(t0 + 0.37 * i as f64).unwrap())
            .collect();
        r.sort_by(f64::total_cmp);
        r[10]
    };
    assert!(median(1300.0) < median(200.0));
    for &g in zeros().window(1000.0, 1010.0) {
        for t in [g - 1e-3, g + 1e-3] {
            assert!(h.residual(t).unwrap() < 0.1);
        }
    }
}

#[test]
fn kernel_family_consistency() {
    let f = gaussian();
    let bump = HybridEvaluator::new(&f, HybridConfig::new(16.0), zeros().clone()).unwrap();
    let mut cfg = HybridConfig::new(16.0);
    cfg.shape = KernelShape::SineSquared;
    let sine = HybridEvaluator::new(&f, cfg, zeros().clone()).unwrap();
    let med = |h: &HybridEvaluator| {
        let mut r: Vec<f64> = (0..41)
            .map(|i| h.residual(1000.0 + 25.0 * i as f64).unwrap())
            .collect();
        r.sort_by(f64::total_cmp);
        r[20]
    };
    let (a, b) = (med(&bump), med(&sine));
    assert!(a / b < 2.0 && b / a < 2.0, "{a} {b}");
}

#[test]
fn sharp_product_is_looser() {
    let f = gaussian();
    let mut cfg = HybridConfig::new(16.0);
    cfg.euler = EulerVariant::Sharp;
    let sharp = HybridEvaluator::new(&f, cfg, zeros().clone()).unwrap();
    let smooth = HybridEvaluator::new(&f, HybridConfig::new(16.0), zeros().clone()).unwrap();
    let t = 1234.5;
    assert!(sharp.residual(t).unwrap() > 10.0 * smooth.residual(t).unwrap());
    let zk = zeta_k_eval(c(0.5, t), &f).unwrap();
    assert!(zk.norm() > 0.0);
}
