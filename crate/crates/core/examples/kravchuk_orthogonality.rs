//! Kravchuk polynomials are orthogonal under the fair binomial weights, and
//! the Legendre recurrence agrees with the explicit sum.

use rug::{Integer, Rational};
use sqhard::orthopoly::{kravchuk, kravchuk_value, legendre, legendre_explicit};
use sqhard::scalar::binomial;

fn main() -> sqhard::Result<()> {
    let m = 6;
    println!("K_k(x) for m = {m}:");
    for k in 0..=m {
        let row: Vec<String> = (0..=m).map(|x| format!("{:>4}", kravchuk_value(k, m, x))).collect();
        println!("  k = {k}: {}", row.join(""));
    }
    println!("K_2 as a polynomial: {:?}", kravchuk(2, m)?.coeffs().iter().map(|c| c.to_repr()).collect::<Vec<_>>());

    // 2^{-m} Σ_x C(m,x) K_j(x) K_k(x) = δ_jk C(m,k)
    let mut worst = Rational::new();
    for j in 0..=m {
        for k in 0..=m {
            let s: Integer = (0..=m).map(|x| binomial(m, x) * kravchuk_value(j, m, x) * kravchuk_value(k, m, x)).sum();
            let got = Rational::from((s, Integer::from(1) << m as u32));
            let want = if j == k { Rational::from(binomial(m, k)) } else { Rational::new() };
            worst = worst.max((got - want).abs());
        }
    }
    println!("max orthogonality error: {worst}");

    for i in 0..8 {
        assert_eq!(legendre(i).coeffs(), legendre_explicit(i).coeffs());
    }
    println!("P_5 = {:?}", legendre(5).coeffs().iter().map(|c| c.to_repr()).collect::<Vec<_>>());
    Ok(())
}
