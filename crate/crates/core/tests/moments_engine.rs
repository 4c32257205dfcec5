use dedekind_lab::field::{build_field, QuadraticField};
use dedekind_lab::hybrid::{EulerVariant, HybridConfig};
use dedekind_lab::moments::*;
use dedekind_lab::special::EULER_GAMMA;
use dedekind_lab::zeros::load_or_compute_merged;
use std::path::PathBuf;

fn gaussian() -> QuadraticField {
    build_field(-4).unwrap()
}

#[test]
fn halving_the_grid_step_is_stable() {
    let f = gaussian();
    let ctx = MomentContext::new(&f, 16.0, EulerVariant::Sharp).unwrap();
    for which in [Integrand::ZetaK, Integrand::EulerProduct] {
        let coarse = moment_integral(which, &ctx, 500.0, 1.0, None).unwrap();
        let fine = moment_integral(which, &ctx, 500.0, 1.0, Some(coarse.grid_step / 2.0)).unwrap();
        assert!(
            (fine.value / coarse.value - 1.0).abs() < 5e-3,
            "{which:?}: {} {}",
            coarse.value,
            fine.value
        );
    }
}

#[test]
fn worker_count_does_not_change_values() {
    let f = build_field(5).unwrap();
    let one = MomentContext::new(&f, 16.0, EulerVariant::Smoothed).unwrap();
    let three = MomentContext::new(&f, 16.0, EulerVariant::Smoothed)
        .unwrap()
        .workers(3);
    for t in [300.0, 2000.0] {
        let a = moment_integral(Integrand::ZetaK, &one, t, 1.0, None).unwrap();
        let b = moment_integral(Integrand::ZetaK, &three, t, 1.0, None).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}

#[test]
fn zero_exponent_gives_one() {
    let f = gaussian();
    for x in [8.0, 32.0] {
        let r = theorem2_check(&f, 400.0, x, 0.0).unwrap();
        assert_eq!((r.value, r.ratio), (1.0, Some(1.0)));
    }
}

#[test]
fn splitting_report_is_consistent() {
    let f = gaussian();
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("zero-cache");
    let zeros = load_or_compute_merged(&dir, &f, 3000.0).unwrap();
    let ctx = MomentContext::with_zeros(&f, HybridConfig::new(16.0), zeros).unwrap();
    let r = splitting_ratio(&ctx, 300.0, 0.0).unwrap();
    assert_eq!(r.ratio, 1.0);
    let r = splitting_ratio(&ctx, 300.0, 1.0).unwrap();
    assert!(
        (r.zeta_k.value - r.ratio * r.euler.value * r.hadamard.value).abs()
            < 1e-12 * r.zeta_k.value
    );
    assert!(r.ratio > 0.3 && r.ratio < 3.0, "{}", r.ratio);
}

#[test]
fn main_sum_approaches_its_limit() {
    // S · c₂-prefactor ~ (e^γ log X)^{-2}.
    let f = gaussian();
    let gaps: Vec<f64> = [10.0, 100.0, 1e4, 1e6]
        .iter()
        .map(|&x: &f64| {
            let s = main_sum_s(&f, x, SumMethod::Euler, 0).unwrap().value;
            let limit = 1.0 / motohashi_constant(&f) / (EULER_GAMMA.exp() * x.ln()).powi(2);
            (s / limit - 1.0).abs()
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[3] < 1e-3, "{gaps:?}");
}

#[test]
fn csv_rows_have_the_header_shape() {
    let f = gaussian();
    let ctx = MomentContext::new(&f, 16.0, EulerVariant::Sharp).unwrap();
    let r = moment_integral(Integrand::EulerProduct, &ctx, 200.0, 1.0, None).unwrap();
    let cols = MomentResult::CSV_HEADER.split(',').count();
    assert_eq!(r.csv_row().split(',').count(), cols);
    assert!(r.grid_step <= max_grid_step(&f, 200.0));
}
