//! Splitting of rational primes, ideal counts and the class-number value L(1, χ).

use dedekind_lab::field::{
    build_field, gauss_sum, ideal_count, kronecker, l_one_chi, prime_ideal_norms,
};

fn main() -> dedekind_lab::Result<()> {
    for d in [-4, -23, 5, 12] {
        let f = build_field(d)?;
        println!(
            "Q(sqrt({d})): conductor {}, ramified {:?}",
            f.q,
            f.ramified_primes()
        );
        let primes: Vec<String> = [2u64, 3, 5, 7, 11, 13]
            .iter()
            .map(|&p| format!("{p}:{:?}", f.split_type(p)))
            .collect();
        println!("  splitting  {}", primes.join(" "));
        println!(
            "  chi(1..12) {:?}",
            (1..=12)
                .map(|n| kronecker(d, n))
                .collect::<Result<Vec<_>, _>>()?
        );
        println!(
            "  ideals of norm 1..12 {:?}",
            (1..=12).map(|n| ideal_count(n, &f)).collect::<Vec<_>>()
        );
        let stream = prime_ideal_norms(&f, 50.0);
        println!(
            "  prime-ideal norms <= 50: {:?}",
            stream.ideals.iter().map(|i| i.norm).collect::<Vec<_>>()
        );
        println!(
            "  L(1,chi) = {:.12}, tau(chi) = {:.6}",
            l_one_chi(&f),
            gauss_sum(&f)
        );
    }
    Ok(())
}
