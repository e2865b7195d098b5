use rug::{Integer, Rational};

use super::Poly;
use crate::scalar::{binomial, Arith, Scalar};

/// `P_i` with exact rational coefficients, by the three-term recurrence
/// `(i+1) P_{i+1} = (2i+1) x P_i − i P_{i−1}`.
pub fn legendre(i: usize) -> Poly {
    let arith = Arith::Exact;
    let mut prev = Poly::constant(arith.one());
    if i == 0 {
        return prev;
    }
    let x = Poly::x(arith);
    let mut cur = x.clone();
    for n in 1..i {
        let n = n as i64;
        let next = &(&x * &cur).scale(&arith.int(2 * n + 1)) - &prev.scale(&arith.int(n));
        prev = cur;
        cur = next.scale(&arith.ratio(1, n + 1));
    }
    cur
}

/// Closed form `P_i(x) = 2^{-i} Σ_j (−1)^j C(i,j) C(2i−2j, i) x^{i−2j}`;
/// kept only to cross-check [`legendre`].
pub fn legendre_explicit(i: usize) -> Poly {
    let mut coeffs = vec![Arith::Exact.zero(); i + 1];
    let scale = Rational::from((1, Integer::from(1) << i as u32));
    for j in 0..=i / 2 {
        let mut c = binomial(i as u64, j as u64) * binomial((2 * i - 2 * j) as u64, i as u64) ;
        if j % 2 == 1 {
            c = -c;
        }
        coeffs[i - 2 * j] = Scalar::Exact(Rational::from(c) * &scale);
    }
    Poly::new(coeffs)
}

/// `((2i+1)/(2w)) ∫_{c−w}^{c+w} p(t) P_i((t−c)/w) dt`: the coefficient of
/// `P_i((t−c)/w)` in the Legendre expansion of `p` on `[c−w, c+w]`.
pub fn poly_inner_legendre(p: &Poly, i: usize, center: &Scalar, halfwidth: &Scalar) -> Scalar {
    assert!(halfwidth.signum() > 0, "halfwidth must be positive");
    let inv_w = Arith::Exact.one() / halfwidth;
    let shifted = legendre(i).compose_affine(&inv_w, &(-(center * &inv_w)));
    let integral = (p * &shifted).integrate(&(center - halfwidth), &(center + halfwidth));
    let norm = Arith::Exact.int(2 * i as i64 + 1) / (Arith::Exact.int(2) * halfwidth);
    norm * integral
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Scalar {
        Arith::Exact.ratio(n, d)
    }

    #[test]
    fn low_orders() {
        assert_eq!(legendre(0), Poly::constant(q(1, 1)));
        assert_eq!(legendre(1), Poly::x(Arith::Exact));
        assert_eq!(legendre(3).eval(&q(1, 2)), q(-7, 16));
    }

    #[test]
    fn recurrence_matches_closed_form() {
        for i in 0..=20 {
            assert_eq!(legendre(i), legendre_explicit(i), "order {i}");
        }
    }

    #[test]
    fn orthogonality_exact() {
        let (lo, hi) = (q(-1, 1), q(1, 1));
        let ps: Vec<Poly> = (0..=20).map(legendre).collect();
        for i in 0..=20 {
            for j in 0..=20 {
                let v = (&ps[i] * &ps[j]).integrate(&lo, &hi);
                let want = if i == j { q(2, 2 * i as i64 + 1) } else { q(0, 1) };
                assert_eq!(v, want, "({i},{j})");
            }
        }
    }

    #[test]
    fn parity() {
        for i in 0..=20 {
            let sign = q(if i % 2 == 0 { 1 } else { -1 }, 1);
            assert_eq!(legendre(i).reflect(), legendre(i).scale(&sign));
        }
    }

    #[test]
    fn bounded_on_grid_and_derivative_bound() {
        let arith = Arith::Float { bits: 128 };
        for i in 0..=20usize {
            let p = legendre(i).to_arith(arith);
            let dp = p.derivative();
            let dbound = (i * (i + 1) / 2) as f64 * (1.0 + 1e-12);
            for g in 0..=2000 {
                let x = arith.ratio(g - 1000, 1000);
                assert!(p.eval(&x).abs().to_f64() <= 1.0 + 1e-12, "P_{i} at {g}");
                assert!(dp.eval(&x).abs().to_f64() <= dbound, "P'_{i} at {g}");
            }
        }
    }

    #[test]
    fn inner_product_examples() {
        let (c, w) = (q(3, 1), q(5, 2));
        let inv = q(1, 1) / &w;
        let p2 = legendre(2).compose_affine(&inv, &(-(&c * &inv)));
        assert_eq!(poly_inner_legendre(&p2, 2, &c, &w), q(1, 1));
        assert_eq!(poly_inner_legendre(&p2, 1, &c, &w), q(0, 1));
        let one = Poly::constant(q(1, 1));
        assert_eq!(poly_inner_legendre(&one, 1, &q(0, 1), &q(1, 1)), q(0, 1));
        let t = Poly::x(Arith::Exact);
        assert_eq!(poly_inner_legendre(&t, 1, &q(0, 1), &q(1, 1)), q(1, 1));
    }

    proptest! {
        #[test]
        fn legendre_expansion_reconstructs(cs in proptest::collection::vec(-20i64..20, 1..7),
                                           c in -5i64..5, w in 1i64..6) {
            let p = Poly::new(cs.iter().map(|&v| q(v, 1)).collect());
            let (c, w) = (q(c, 1), q(w, 1));
            let inv = q(1, 1) / &w;
            let mut rebuilt = Poly::zero();
            for i in 0..cs.len() {
                let a = poly_inner_legendre(&p, i, &c, &w);
                let basis = legendre(i).compose_affine(&inv, &(-(&c * &inv)));
                rebuilt = &rebuilt + &basis.scale(&a);
            }
            prop_assert_eq!(rebuilt, p);
        }
    }
}
