//! The factorization ζ_K ≈ P_K · Z_K at a few heights, and the explicit formula behind it.

use dedekind_lab::field::build_field;
use dedekind_lab::hybrid::{
    explicit_formula_residual, kernel_build, HybridConfig, HybridEvaluator,
};
use dedekind_lab::zeros::load_or_compute_merged;
use num_complex::Complex64;

fn main() -> dedekind_lab::Result<()> {
    let f = build_field(-4)?;
    let cache = std::env::temp_dir().join("dedekind-lab-zeros");
    let zeros = load_or_compute_merged(&cache, &f, 3000.0)?;
    println!("{} zeros of zeta_K up to {}", zeros.len(), zeros.t_max);

    let kernel = kernel_build(16.0)?;
    for s in [Complex64::new(1.5, 20.0), Complex64::new(2.0, -35.0)] {
        println!(
            "explicit formula residual at {s}: {:.2e}",
            explicit_formula_residual(s, &f, &kernel, &zeros)?
        );
    }

    for x in [10.0, 25.0] {
        let h = HybridEvaluator::new(&f, HybridConfig::new(x), zeros.clone())?;
        for t in [1000.0, 1234.5, 1600.0] {
            let s = Complex64::new(0.5, t);
            println!(
                "X={x} t={t}: log P = {:.6}, log Z = {:.6}, residual {:.2e}",
                h.log_p(s),
                h.log_z(s)?,
                h.residual(t)?
            );
        }
    }
    Ok(())
}
