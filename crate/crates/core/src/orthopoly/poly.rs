use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::{Arith, Scalar};

/// Univariate polynomial in the monomial basis; `coeffs[j]` multiplies `x^j`.
///
/// Exactly-zero trailing coefficients are trimmed, so the zero polynomial has
/// no coefficients and `degree() == None`.
#[derive(Clone, Debug)]
pub struct Poly {
    coeffs: Vec<Scalar>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Scalar>) -> Poly {
        while coeffs.last().is_some_and(Scalar::is_zero) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Poly {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: Scalar) -> Poly {
        Poly::new(vec![c])
    }

    /// The identity polynomial `x`.
    pub fn x(arith: Arith) -> Poly {
        Poly::new(vec![arith.zero(), arith.one()])
    }

    /// `a·x + b`.
    pub fn linear(a: Scalar, b: Scalar) -> Poly {
        Poly::new(vec![b, a])
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    /// Coefficient of `x^j` (zero past the degree).
    pub fn coeff(&self, j: usize, arith: Arith) -> Scalar {
        self.coeffs.get(j).cloned().unwrap_or_else(|| arith.zero())
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Mode of the coefficients (float wins over exact).
    pub fn arith(&self) -> Arith {
        self.coeffs
            .iter()
            .map(Scalar::arith)
            .find(|a| !a.is_exact())
            .unwrap_or(Arith::Exact)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: &Scalar) -> Scalar {
        let mut acc = x.arith().zero();
        for c in self.coeffs.iter().rev() {
            acc = &acc * x + c;
        }
        acc
    }

    pub fn scale(&self, s: &Scalar) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, c)| c * Arith::Exact.int(j as i64))
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Poly {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(self.arith().zero());
        for (j, c) in self.coeffs.iter().enumerate() {
            out.push(c / Arith::Exact.int(j as i64 + 1));
        }
        Poly::new(out)
    }

    /// `∫_a^b p(t) dt` via the exact antiderivative.
    pub fn integrate(&self, a: &Scalar, b: &Scalar) -> Scalar {
        let anti = self.antiderivative();
        anti.eval(b) - anti.eval(a)
    }

    /// `∫_x^{x+1} p(t) dt`.
    pub fn integrate_unit(&self, x: i64) -> Scalar {
        let a = Arith::Exact.int(x);
        let b = Arith::Exact.int(x + 1);
        self.integrate(&a, &b)
    }

    /// `p(a·t + b)` as a polynomial in `t`.
    pub fn compose_affine(&self, a: &Scalar, b: &Scalar) -> Poly {
        let inner = Poly::linear(a.clone(), b.clone());
        let mut acc = Poly::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * &inner) + &Poly::constant(c.clone());
        }
        acc
    }

    /// `p(-x)`.
    pub fn reflect(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| if j % 2 == 1 { -c } else { c.clone() })
                .collect(),
        )
    }

    /// Converts every coefficient into `arith`.
    pub fn to_arith(&self, arith: Arith) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| arith.convert(c)).collect())
    }

    /// Largest coefficient magnitude, or zero.
    pub fn max_abs_coeff(&self) -> Scalar {
        self.coeffs
            .iter()
            .map(Scalar::abs)
            .fold(self.arith().zero(), Scalar::max)
    }
}

impl PartialEq for Poly {
    fn eq(&self, other: &Poly) -> bool {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n).all(|j| self.coeff(j, Arith::Exact) == other.coeff(j, Arith::Exact))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match j {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})·x")?,
                _ => write!(f, "({c})·x^{j}")?,
            }
        }
        Ok(())
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            out.push(match (self.coeffs.get(j), rhs.coeffs.get(j)) {
                (Some(a), Some(b)) => a + b,
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => unreachable!(),
            });
        }
        Poly::new(out)
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let arith = if self.arith().is_exact() { rhs.arith() } else { self.arith() };
        let mut out = vec![arith.zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += &(a * b);
            }
        }
        Poly::new(out)
    }
}

macro_rules! owned_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Poly {
            type Output = Poly;
            fn $method(self, rhs: Poly) -> Poly {
                (&self).$method(&rhs)
            }
        }
    };
}
owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);
