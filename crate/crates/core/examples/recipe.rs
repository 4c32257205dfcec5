//! Shifted-moment recipe: the contour identity, leading constants and a non-primitive L-function.

use dedekind_lab::field::build_field;
use dedekind_lab::recipe::{
    coeff_sum_check, conjecture_eval, contour_sum_check, gl_multinomial, leading_constant_gk,
    NonPrimitiveSpec, ShiftKernel,
};
use num_complex::Complex64;

const SPEC: &str = r#"
[[factors]]
e = 1
Q = 1
d = 1
coeff = "one"

[[factors]]
e = 2
Q = 4
d = 1
coeff = "kronecker:-4"
"#;

fn main() -> dedekind_lab::Result<()> {
    let shifts = [Complex64::new(0.01, 0.02), Complex64::new(-0.013, 0.004)];
    let c = contour_sum_check(ShiftKernel::ZetaShift, 1, &shifts, None)?;
    println!(
        "k=1 shifted sum: {:.10} vs contour {:.10} ({} nodes)",
        c.lhs, c.rhs, c.nodes
    );
    for k in 1..=2 {
        println!(
            "leading constant for k={k}: {:.10}",
            leading_constant_gk(k)?
        );
    }

    let spec = NonPrimitiveSpec::from_toml_str(SPEC)?;
    for k in 1..=2 {
        let v = conjecture_eval(&spec, k, 1e4)?;
        println!(
            "zeta * L(.,chi_-4)^2, k={k}: g_L = {}, a_L = {:.6e}, predicted moment at T=1e4 {:.6e} (log power {})",
            gl_multinomial(&spec, k)?,
            v.a_l,
            v.value,
            v.log_power
        );
    }
    let dedekind = NonPrimitiveSpec::dedekind(&build_field(-4)?);
    let sums = coeff_sum_check(&dedekind, 1, 1_000_000)?;
    println!(
        "zeta_K coefficient sums to 1e6: fitted leading {:.6}, predicted {:.6}",
        sums.fitted_leading, sums.predicted_leading
    );
    Ok(())
}
