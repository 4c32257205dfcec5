//! ζ_K on the critical line, the functional equation, and a zero table with its count audit.

use dedekind_lab::field::build_field;
use dedekind_lab::lfun::{functional_equation_residual, zeta_k_eval, LComponent};
use dedekind_lab::zeros::{expected_zero_count, find_zeros, max_scan_step};
use num_complex::Complex64;

fn main() -> dedekind_lab::Result<()> {
    let f = build_field(-4)?;
    for t in [10.0, 100.0, 1000.0] {
        let s = Complex64::new(0.5, t);
        println!("zeta_K(1/2 + {t}i) = {:.10}", zeta_k_eval(s, &f)?);
    }
    for comp in LComponent::factors_of(&f) {
        let r = functional_equation_residual(&comp, Complex64::new(0.3, 77.0))?;
        println!(
            "{}: functional-equation residual at 0.3 + 77i = {r:.2e}",
            comp.label()
        );
        let t_max = 200.0;
        let table = find_zeros(&comp, t_max, max_scan_step(&comp, t_max))?;
        let first: Vec<String> = table
            .ordinates()
            .iter()
            .take(5)
            .map(|g| format!("{g:.6}"))
            .collect();
        println!(
            "  {} zeros up to {t_max} (smooth count {:.2}); first {}",
            table.len(),
            expected_zero_count(&comp, t_max),
            first.join(", ")
        );
        println!("  Hardy function at t = 50: {:.8}", comp.hardy_value(50.0));
    }
    Ok(())
}
