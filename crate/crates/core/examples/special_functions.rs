//! Gamma, Barnes G, the random-matrix constants g(k) and the exponential integrals.

use dedekind_lab::special::{barnes_g_exact, ci, e1, g_of_k, gamma_c, ln_gamma_c, si};
use num_complex::Complex64;

fn main() -> dedekind_lab::Result<()> {
    let z = Complex64::new(0.5, 14.134725);
    println!("Gamma(1/2 + 14.13i) = {:.6e}", gamma_c(z)?);
    println!(
        "ln Gamma(1/2 + 1000i) = {:.6}",
        ln_gamma_c(Complex64::new(0.5, 1000.0))?
    );
    for n in 1..=6 {
        println!("G({n}) = {}", barnes_g_exact(n));
    }
    for k in 1..=5 {
        println!("g({k}) = {}", g_of_k(k)?);
    }
    for x in [0.1, 1.0, 4.0, 10.0] {
        println!(
            "E1({x}) = {:.12}  Ci({x}) = {:.12}  Si({x}) = {:.12}",
            e1(Complex64::new(x, 0.0))?.re,
            ci(x)?,
            si(x)
        );
    }
    println!("E1(2 + 3i) = {:.12}", e1(Complex64::new(2.0, 3.0))?);
    Ok(())
}
