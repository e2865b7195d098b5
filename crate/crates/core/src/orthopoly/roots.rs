//! Real-root isolation by Sturm sequences over exact rationals.
//!
//! Float-mode polynomials are first converted to the exact dyadic rationals
//! their coefficients represent, so isolation itself never rounds; only the
//! final refinement stops at a width of `2^-bits`.

use rug::{Integer, Rational};

use super::Poly;
use crate::scalar::{Arith, Scalar};

type RPoly = Vec<Rational>;

fn trim(mut p: RPoly) -> RPoly {
    while p.last().is_some_and(|c| c.cmp0().is_eq()) {
        p.pop();
    }
    p
}

fn to_rpoly(p: &Poly) -> RPoly {
    trim(p.coeffs().iter().map(Scalar::to_rational).collect())
}

fn eval(p: &[Rational], x: &Rational) -> Rational {
    let mut acc = Rational::new();
    for c in p.iter().rev() {
        acc *= x;
        acc += c;
    }
    acc
}

fn sign_at(p: &[Rational], x: &Rational) -> i32 {
    eval(p, x).cmp0() as i32
}

fn deriv(p: &[Rational]) -> RPoly {
    trim(
        p.iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| Rational::from(c * j as u32))
            .collect(),
    )
}

/// Polynomial long division `a = q·b + r`.
fn divrem(a: &[Rational], b: &[Rational]) -> (RPoly, RPoly) {
    let mut r: RPoly = a.to_vec();
    let db = b.len() - 1;
    let lead = b.last().expect("division by zero polynomial");
    if r.len() < b.len() {
        return (Vec::new(), trim(r));
    }
    let mut q = vec![Rational::new(); r.len() - db];
    for i in (0..q.len()).rev() {
        let c = Rational::from(&r[i + db] / lead);
        if c.cmp0().is_ne() {
            for (j, bj) in b.iter().enumerate() {
                r[i + j] -= Rational::from(&c * bj);
            }
        }
        q[i] = c;
    }
    r.truncate(db);
    (trim(q), trim(r))
}

fn monic(p: RPoly) -> RPoly {
    let lead = p.last().cloned().expect("monic of zero polynomial");
    p.into_iter().map(|c| c / &lead).collect()
}

fn gcd(a: &[Rational], b: &[Rational]) -> RPoly {
    let (mut x, mut y) = (trim(a.to_vec()), trim(b.to_vec()));
    while !y.is_empty() {
        let (_, r) = divrem(&x, &y);
        x = y;
        y = r;
    }
    monic(x)
}

/// Square-free part `p / gcd(p, p')`.
fn squarefree(p: &[Rational]) -> RPoly {
    let g = gcd(p, &deriv(p));
    divrem(p, &g).0
}

struct Sturm {
    seq: Vec<RPoly>,
}

impl Sturm {
    fn new(p: RPoly) -> Sturm {
        let mut seq = vec![p.clone(), deriv(&p)];
        while !seq.last().unwrap().is_empty() {
            let n = seq.len();
            let (_, r) = divrem(&seq[n - 2], &seq[n - 1]);
            if r.is_empty() {
                break;
            }
            seq.push(r.into_iter().map(|c| -c).collect());
        }
        seq.retain(|s| !s.is_empty());
        Sturm { seq }
    }

    fn variations(&self, x: &Rational) -> usize {
        let mut last = 0;
        let mut count = 0;
        for s in &self.seq {
            let sg = sign_at(s, x);
            if sg == 0 {
                continue;
            }
            if last != 0 && sg != last {
                count += 1;
            }
            last = sg;
        }
        count
    }

    /// Distinct roots in `(a, b]`.
    fn count(&self, a: &Rational, b: &Rational) -> usize {
        self.variations(a) - self.variations(b)
    }
}

/// A point strictly inside `(a, b)` where `p` does not vanish, near the midpoint.
fn split_point(p: &[Rational], a: &Rational, b: &Rational) -> Rational {
    let width = Rational::from(b - a);
    for den in 2u32.. {
        for num in [den / 2, den / 2 + 1] {
            if num == 0 || num >= den {
                continue;
            }
            let t = a + (&width * Rational::from((num, den)));
            if sign_at(p, &t) != 0 {
                return t;
            }
        }
    }
    unreachable!()
}

fn refine(p: &[Rational], mut a: Rational, mut b: Rational, eps: &Rational) -> Rational {
    let sa = sign_at(p, &a);
    while Rational::from(&b - &a) > *eps {
        let mid = Rational::from(&a + &b) / 2u32;
        let sm = sign_at(p, &mid);
        if sm == 0 {
            return mid;
        }
        if sm == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    (a + b) / 2u32
}

/// Distinct real roots of `p` in the open interval `(lo, hi)`, each located to
/// within `2^-bits` (exact when a bisection point hits the root). Sorted.
/// The zero polynomial reports no roots.
pub fn real_roots(p: &Poly, lo: &Rational, hi: &Rational, bits: u32) -> Vec<Rational> {
    let rp = to_rpoly(p);
    if rp.len() <= 1 || lo >= hi {
        return Vec::new();
    }
    let mut sqf = squarefree(&rp);
    // Deflate roots sitting exactly on the endpoints so the count below is
    // over an interval with non-vanishing ends.
    for end in [lo, hi] {
        if sign_at(&sqf, end) == 0 {
            sqf = divrem(&sqf, &[Rational::from(-end), Rational::from(1)]).0;
        }
    }
    if sqf.len() <= 1 {
        return Vec::new();
    }
    let sturm = Sturm::new(sqf.clone());
    let eps = Rational::from((Integer::from(1), Integer::from(1) << bits));
    let mut out = Vec::new();
    let mut stack = vec![(lo.clone(), hi.clone())];
    while let Some((a, b)) = stack.pop() {
        match sturm.count(&a, &b) {
            0 => {}
            1 => out.push(refine(&sqf, a, b, &eps)),
            _ => {
                let mid = split_point(&sqf, &a, &b);
                stack.push((mid.clone(), b));
                stack.push((a, mid));
            }
        }
    }
    out.sort();
    out
}

/// `∫_lo^hi |p(t)| dt`, splitting at the isolated roots of `p`.
pub fn abs_integral(p: &Poly, lo: &Rational, hi: &Rational, bits: u32) -> Scalar {
    let arith = p.arith();
    let anti = p.to_arith(Arith::Exact).antiderivative();
    let mut knots = vec![lo.clone()];
    knots.extend(real_roots(p, lo, hi, bits));
    knots.push(hi.clone());
    let vals: Vec<Scalar> = knots
        .iter()
        .map(|x| anti.eval(&Scalar::Exact(x.clone())))
        .collect();
    let mut total = Arith::Exact.zero();
    for w in vals.windows(2) {
        total += &(&w[1] - &w[0]).abs();
    }
    arith.convert(&total)
}

/// `max_{[lo,hi]} |p|` together with a maximizer, using the critical points
/// of `p` (roots of `p'`) and the endpoints.
pub fn sup_abs(p: &Poly, lo: &Rational, hi: &Rational, bits: u32) -> (Scalar, Rational) {
    let arith = p.arith();
    let exact = p.to_arith(Arith::Exact);
    let mut cands = vec![lo.clone(), hi.clone()];
    cands.extend(real_roots(&exact.derivative(), lo, hi, bits));
    let mut best = (Arith::Exact.zero(), lo.clone());
    for x in cands {
        let v = exact.eval(&Scalar::Exact(x.clone())).abs();
        if v > best.0 {
            best = (v, x);
        }
    }
    (arith.convert(&best.0), best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn from_roots(roots: &[Rational]) -> Poly {
        let mut p = Poly::constant(Arith::Exact.one());
        for x in roots {
            p = &p * &Poly::linear(Arith::Exact.one(), Scalar::Exact(Rational::from(-x)));
        }
        p
    }

    #[test]
    fn isolates_rational_roots() {
        let p = from_roots(&[r(-1, 2), r(1, 3), r(1, 3), r(2, 1)]);
        let roots = real_roots(&p, &r(-5, 1), &r(5, 1), 100);
        assert_eq!(roots.len(), 3);
        let eps = r(1, 1 << 30);
        for (got, want) in roots.iter().zip([r(-1, 2), r(1, 3), r(2, 1)]) {
            assert!(Rational::from(got - &want).abs() < eps);
        }
    }

    #[test]
    fn endpoint_roots_excluded() {
        let p = from_roots(&[r(0, 1), r(1, 1), r(1, 2)]);
        let roots = real_roots(&p, &r(0, 1), &r(1, 1), 64);
        assert_eq!(roots, vec![r(1, 2)]);
    }

    #[test]
    fn irrational_root() {
        // x^2 - 2
        let p = Poly::new(vec![Arith::Exact.int(-2), Arith::Exact.zero(), Arith::Exact.one()]);
        let roots = real_roots(&p, &r(0, 1), &r(2, 1), 80);
        assert_eq!(roots.len(), 1);
        assert!((roots[0].to_f64() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn abs_integral_of_line() {
        // ∫_{-1}^{1} |t| = 1
        let t = Poly::x(Arith::Exact);
        assert_eq!(abs_integral(&t, &r(-1, 1), &r(1, 1), 64), Arith::Exact.one());
    }

    #[test]
    fn sup_of_parabola() {
        // 1 - 4(t-1/2)^2 = -4t^2 + 4t on [0, 1], max 1 at 1/2
        let p = Poly::new(vec![Arith::Exact.zero(), Arith::Exact.int(4), Arith::Exact.int(-4)]);
        let (v, at) = sup_abs(&p, &r(0, 1), &r(1, 1), 64);
        assert_eq!(v, Arith::Exact.one());
        assert_eq!(at, r(1, 2));
    }

    proptest! {
        #[test]
        fn count_matches_constructed_roots(mut xs in proptest::collection::btree_set(-40i64..40, 1..7)) {
            let roots: Vec<Rational> = xs.iter().map(|&x| r(x, 8)).collect();
            let p = from_roots(&roots);
            let got = real_roots(&p, &r(-6, 1), &r(6, 1), 40);
            prop_assert_eq!(got.len(), roots.len());
            xs.clear();
        }
    }
}
