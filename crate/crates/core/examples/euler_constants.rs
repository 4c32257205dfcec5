//! The arithmetic constants a(k), their per-prime identity, and Mertens' theorem for ideals.

use dedekind_lab::euler::{a_equals_b_check, a_k_galois, mertens_ideal, GaloisSplitData};
use dedekind_lab::field::{build_field, l_one_chi};

fn main() -> dedekind_lab::Result<()> {
    for k in 1..=3u32 {
        let a = a_k_galois(k as f64, &GaloisSplitData::Rational, 1e-8)?;
        println!(
            "a({k}) over Q = {:.12} (tail bound {:.1e})",
            a.value, a.tail_bound
        );
    }
    for d in [-4, -3, 5, -23] {
        let f = build_field(d)?;
        let data = GaloisSplitData::Quadratic(f.clone());
        let a1 = a_k_galois(1.0, &data, 1e-8)?;
        let a_half = a_k_galois(0.5, &data, 1e-8)?;
        let check = a_equals_b_check(&f, 2, 97)?;
        let m = mertens_ideal(&f, 1e6)?;
        println!(
            "d_K={d}: a(1) = {:.10}, a(1/2) = {:.10}, L(1,chi) = {:.10}, max local gap (k=2) {:.1e}, Mertens ratio {:.6}",
            a1.value,
            a_half.value,
            l_one_chi(&f),
            check.max_diff,
            m.ratio()
        );
    }
    Ok(())
}
