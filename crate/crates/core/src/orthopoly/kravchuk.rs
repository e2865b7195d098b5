use rug::{Integer, Rational};

use super::Poly;
use crate::error::{Error, Result};
use crate::scalar::{binomial, Arith, Scalar};

/// `C(x, j)` as a polynomial in `x`, i.e. the falling factorial `x^{(j)}/j!`.
fn falling_binomial(shift: i64, sign: i64, j: u64) -> Poly {
    // Π_{r<j} (sign·x + shift − r) / j!
    let arith = Arith::Exact;
    let mut acc = Poly::constant(arith.one());
    for r in 0..j as i64 {
        acc = &acc * &Poly::linear(arith.int(sign), arith.int(shift - r));
    }
    let fact = Integer::from(Integer::factorial(j as u32));
    acc.scale(&Scalar::Exact(Rational::from((Integer::from(1), fact))))
}

/// `K_k(x; m) = Σ_j (−1)^j C(x, j) C(m−x, k−j)` expanded in the monomial basis.
pub fn kravchuk(k: u64, m: u64) -> Result<Poly> {
    if k > m {
        return Err(Error::Parameter(format!("kravchuk degree {k} exceeds m = {m}")));
    }
    let mut acc = Poly::zero();
    for j in 0..=k {
        let term = &falling_binomial(0, 1, j) * &falling_binomial(m as i64, -1, k - j);
        acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
    }
    Ok(acc)
}

/// `K_k(x; m)` at an integer point `0 ≤ x ≤ m` by direct summation.
pub fn kravchuk_value(k: u64, m: u64, x: u64) -> Integer {
    assert!(x <= m);
    let mut acc = Integer::new();
    for j in 0..=k {
        let term = binomial(x, j) * binomial(m - x, k - j);
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// Table `K_t(x; m)` for `t ∈ 0..=kmax`, `x ∈ 0..=m`.
pub fn kravchuk_table(kmax: u64, m: u64) -> Vec<Vec<Integer>> {
    (0..=kmax)
        .map(|t| (0..=m).map(|x| kravchuk_value(t, m, x)).collect())
        .collect()
}
