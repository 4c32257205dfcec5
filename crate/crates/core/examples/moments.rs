//! Mean values over [T, 2T]: ζ_K, the Euler product, a Dirichlet polynomial, and the main-term sum.

use dedekind_lab::field::build_field;
use dedekind_lab::hybrid::{p_inverse_coeffs, EulerVariant};
use dedekind_lab::moments::{
    main_sum_s, moment_integral, mv_mean_value, theorem2_check, Integrand, MomentContext,
    MomentResult, SumMethod,
};

fn main() -> dedekind_lab::Result<()> {
    let f = build_field(-4)?;
    let ctx = MomentContext::new(&f, 16.0, EulerVariant::Sharp)?;
    println!("{}", MomentResult::CSV_HEADER);
    for t in [200.0, 1000.0] {
        println!(
            "{}",
            moment_integral(Integrand::ZetaK, &ctx, t, 1.0, None)?.csv_row()
        );
    }
    for x in [8.0, 16.0] {
        let m = theorem2_check(&f, 2000.0, x, 1.0)?;
        println!(
            "Euler-product moment at X={x}: {:.6} vs prediction {:.6}",
            m.value,
            m.predicted.unwrap_or(f64::NAN)
        );
    }

    let alpha = p_inverse_coeffs(&f, 16.0, 200)?;
    let coeffs: Vec<(u64, f64)> = alpha.nonzero().collect();
    let mv = mv_mean_value(&coeffs, 5e4)?;
    println!(
        "alpha polynomial: mean square {:.6}, diagonal {:.6}",
        mv.empirical, mv.diagonal
    );

    let euler = main_sum_s(&f, 10.0, SumMethod::Euler, 0)?;
    let nested = main_sum_s(&f, 10.0, SumMethod::Nested, 20_000)?;
    println!(
        "main sum at X=10: product {:.8}, nested {:.8} ({} terms)",
        euler.value, nested.value, nested.terms
    );
    Ok(())
}
