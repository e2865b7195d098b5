//! Dual-mode numbers: exact rationals or fixed-precision binary floats.
//!
//! Every quantity in the crate flows through [`Scalar`]. Exact values stay
//! exact under `+ - * /`; as soon as a float meets an exact value the result
//! is a float at the float's precision. Transcendental functions (`exp`,
//! `ln`, `sqrt`) always produce floats.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};

/// Mantissa bits used when an exact value is promoted to a float without a
/// caller-supplied precision.
pub const DEFAULT_BITS: u32 = 256;

/// Smallest float precision accepted by [`Arith::float`].
pub const MIN_BITS: u32 = 64;

/// Arithmetic mode used to build new scalars.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[derive(Default)]
pub enum Arith {
    #[default]
    Exact,
    Float { bits: u32 },
}


impl Arith {
    pub fn float(bits: u32) -> Result<Arith> {
        if bits < MIN_BITS {
            return Err(Error::Parameter(format!(
                "float precision must be at least {MIN_BITS} bits, got {bits}"
            )));
        }
        Ok(Arith::Float { bits })
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Arith::Exact)
    }

    /// Precision for transcendental work: the float precision, or
    /// [`DEFAULT_BITS`] in exact mode.
    pub fn bits(self) -> u32 {
        match self {
            Arith::Exact => DEFAULT_BITS,
            Arith::Float { bits } => bits,
        }
    }

    /// The float mode a transcendental computation in this mode runs at.
    pub fn as_float(self) -> Arith {
        Arith::Float { bits: self.bits() }
    }

    pub fn zero(self) -> Scalar {
        self.int(0)
    }

    pub fn one(self) -> Scalar {
        self.int(1)
    }

    pub fn int(self, v: i64) -> Scalar {
        self.rational(Rational::from(v))
    }

    pub fn ratio(self, num: i64, den: i64) -> Scalar {
        self.rational(Rational::from((num, den)))
    }

    pub fn integer(self, v: Integer) -> Scalar {
        self.rational(Rational::from(v))
    }

    pub fn rational(self, r: Rational) -> Scalar {
        match self {
            Arith::Exact => Scalar::Exact(r),
            Arith::Float { bits } => Scalar::Float(Float::with_val(bits, r)),
        }
    }

    /// Converts a value into this mode. Floats entering exact mode become the
    /// exact dyadic rational they represent.
    pub fn convert(self, s: &Scalar) -> Scalar {
        match (self, s) {
            (Arith::Exact, Scalar::Exact(r)) => Scalar::Exact(r.clone()),
            (Arith::Exact, Scalar::Float(f)) => Scalar::Exact(
                f.to_rational()
                    .expect("non-finite float cannot become a rational"),
            ),
            (Arith::Float { bits }, Scalar::Exact(r)) => Scalar::Float(Float::with_val(bits, r)),
            (Arith::Float { bits }, Scalar::Float(f)) => Scalar::Float(Float::with_val(bits, f)),
        }
    }

    /// `f64` input; exact mode keeps the exact binary value of the double.
    pub fn from_f64(self, v: f64) -> Scalar {
        match self {
            Arith::Exact => Scalar::Exact(Rational::from_f64(v).expect("finite f64")),
            Arith::Float { bits } => Scalar::Float(Float::with_val(bits, v)),
        }
    }

    /// Binomial coefficient `C(n, k)`; zero when `k > n`.
    pub fn binomial(self, n: u64, k: u64) -> Scalar {
        self.integer(binomial(n, k))
    }

    /// Tolerance used for "equal up to rounding" checks in this mode:
    /// zero when exact, `2^(-bits/2)` for floats.
    pub fn tolerance(self) -> Scalar {
        match self {
            Arith::Exact => Scalar::Exact(Rational::new()),
            Arith::Float { bits } => {
                Scalar::Float(Float::with_val(bits, Float::i_exp(1, -((bits / 2) as i32))))
            }
        }
    }

    /// Parses a scalar literal in this mode (see [`Scalar::parse`]).
    pub fn parse(self, s: &str) -> Result<Scalar> {
        let v = Scalar::parse(s, self.bits())?;
        Ok(self.convert(&v))
    }
}

impl fmt::Display for Arith {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arith::Exact => write!(f, "exact"),
            Arith::Float { bits } => write!(f, "float({bits})"),
        }
    }
}

/// `C(n, k)` as a big integer.
pub fn binomial(n: u64, k: u64) -> Integer {
    if k > n {
        return Integer::new();
    }
    Integer::from(Integer::binomial_u(n as u32, k as u32))
}

#[derive(Clone, Debug)]
pub enum Scalar {
    Exact(Rational),
    Float(Float),
}

impl Scalar {
    pub fn arith(&self) -> Arith {
        match self {
            Scalar::Exact(_) => Arith::Exact,
            Scalar::Float(f) => Arith::Float { bits: f.prec() },
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.cmp0() == Ordering::Equal,
            Scalar::Float(f) => f.is_zero(),
        }
    }

    pub fn signum(&self) -> i32 {
        match self {
            Scalar::Exact(r) => r.cmp0() as i32,
            Scalar::Float(f) => match f.cmp0() {
                Some(o) => o as i32,
                None => 0,
            },
        }
    }

    pub fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.clone().abs()),
            Scalar::Float(f) => Scalar::Float(f.clone().abs()),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => r.to_f64(),
            Scalar::Float(f) => f.to_f64(),
        }
    }

    /// The exact rational value, if this scalar is exact.
    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    /// The exact rational value of either representation (floats are dyadic).
    pub fn to_rational(&self) -> Rational {
        match self {
            Scalar::Exact(r) => r.clone(),
            Scalar::Float(f) => f.to_rational().expect("finite float"),
        }
    }

    pub fn to_float(&self, bits: u32) -> Float {
        match self {
            Scalar::Exact(r) => Float::with_val(bits, r),
            Scalar::Float(f) => Float::with_val(bits, f),
        }
    }

    fn float_for_transcendental(&self) -> Float {
        match self {
            Scalar::Exact(r) => Float::with_val(DEFAULT_BITS, r),
            Scalar::Float(f) => f.clone(),
        }
    }

    pub fn exp(&self) -> Scalar {
        Scalar::Float(self.float_for_transcendental().exp())
    }

    pub fn ln(&self) -> Scalar {
        Scalar::Float(self.float_for_transcendental().ln())
    }

    pub fn sqrt(&self) -> Scalar {
        Scalar::Float(self.float_for_transcendental().sqrt())
    }

    /// Real power `self^e` computed in float mode.
    pub fn powf(&self, e: &Scalar) -> Scalar {
        let base = self.float_for_transcendental();
        let prec = base.prec();
        Scalar::Float(base.pow(e.to_float(prec)))
    }

    /// Integer power; stays exact for exact input. `0^0 = 1`.
    pub fn powi(&self, e: i32) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(Rational::from(r.pow(e))),
            Scalar::Float(f) => Scalar::Float(Float::with_val(f.prec(), f.pow(e))),
        }
    }

    /// Nearest integer, ties away from zero.
    pub fn round(&self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.clone().round()),
            Scalar::Float(f) => Scalar::Float(f.clone().round()),
        }
    }

    pub fn max(self, other: Scalar) -> Scalar {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Scalar) -> Scalar {
        if other < self {
            other
        } else {
            self
        }
    }

    /// `|self - other| <= tol`.
    pub fn approx_eq(&self, other: &Scalar, tol: &Scalar) -> bool {
        (self - other).abs() <= *tol
    }

    /// Decimal digits that make a `bits`-bit float survive a print/parse round trip.
    pub fn round_trip_digits(bits: u32) -> usize {
        1 + (f64::from(bits) * std::f64::consts::LOG10_2).ceil() as usize
    }

    /// Serialized form: `num/den` for exact values, a decimal with enough
    /// digits to round-trip for floats.
    pub fn to_repr(&self) -> String {
        match self {
            Scalar::Exact(r) => format!("{}/{}", r.numer(), r.denom()),
            Scalar::Float(f) => {
                if f.is_zero() {
                    return "0".to_string();
                }
                f.to_string_radix(10, Some(Self::round_trip_digits(f.prec())))
            }
        }
    }

    /// Parses `a`, `a/b` (exact) or a decimal/scientific literal (float at
    /// `bits`). Integers and fractions are exact.
    pub fn parse(s: &str, bits: u32) -> Result<Scalar> {
        let t = s.trim();
        if t.is_empty() {
            return Err(Error::Parse("empty number".to_string()));
        }
        if let Ok(r) = Rational::parse(t) {
            return Ok(Scalar::Exact(Rational::from(r)));
        }
        match Float::parse(t) {
            Ok(f) => {
                let f = Float::with_val(bits, f);
                if !f.is_finite() {
                    return Err(Error::Parse(format!("non-finite number '{t}'")));
                }
                Ok(Scalar::Float(f))
            }
            Err(_) => Err(Error::Parse(format!("invalid number '{t}'"))),
        }
    }

    /// Parses a literal as an exact rational, accepting finite decimals such
    /// as `0.25` or `1e-3` (interpreted as the exact decimal fraction).
    pub fn parse_exact(s: &str) -> Result<Rational> {
        let t = s.trim();
        if let Ok(r) = Rational::parse(t) {
            return Ok(Rational::from(r));
        }
        decimal_to_rational(t).ok_or_else(|| Error::Parse(format!("invalid rational '{t}'")))
    }
}

fn decimal_to_rational(t: &str) -> Option<Rational> {
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut r = Rational::from(Integer::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?);
    let scale = exp - frac_part.len() as i32;
    let ten = Rational::from(10);
    if scale >= 0 {
        r *= ten.pow(scale);
    } else {
        r /= ten.pow(-scale);
    }
    if neg {
        r = -r;
    }
    Some(r)
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => write!(f, "{r}"),
            Scalar::Float(x) => {
                if let Some(p) = f.precision() {
                    write!(f, "{}", x.to_string_radix(10, Some(p.max(1))))
                } else {
                    write!(f, "{}", x.to_string_radix(10, Some(17)))
                }
            }
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Scalar) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Scalar) -> Option<Ordering> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.partial_cmp(b),
            (Scalar::Exact(a), Scalar::Float(b)) => a.partial_cmp(b),
            (Scalar::Float(a), Scalar::Exact(b)) => a.partial_cmp(b),
            (Scalar::Float(a), Scalar::Float(b)) => a.partial_cmp(b),
        }
    }
}

impl From<Rational> for Scalar {
    fn from(r: Rational) -> Self {
        Scalar::Exact(r)
    }
}

impl From<Float> for Scalar {
    fn from(f: Float) -> Self {
        Scalar::Float(f)
    }
}

fn float_pair(a: &Scalar, b: &Scalar) -> (Float, Float) {
    let bits = match (a, b) {
        (Scalar::Float(x), Scalar::Float(y)) => x.prec().max(y.prec()),
        (Scalar::Float(x), _) | (_, Scalar::Float(x)) => x.prec(),
        _ => unreachable!("float_pair called on two exact values"),
    };
    (a.to_float(bits), b.to_float(bits))
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(Rational::from(a $op b)),
                    _ => {
                        let (a, b) = float_pair(self, rhs);
                        Scalar::Float(a $op b)
                    }
                }
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
        impl $trait<Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        match (&mut *self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => *a += b,
            (Scalar::Float(a), Scalar::Float(b)) if a.prec() >= b.prec() => *a += b,
            (Scalar::Float(a), Scalar::Exact(b)) => *a += b,
            _ => *self = &*self + rhs,
        }
    }
}

impl AddAssign<Scalar> for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        *self += &rhs;
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, rhs: &Scalar) {
        match (&mut *self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => *a -= b,
            (Scalar::Float(a), Scalar::Float(b)) if a.prec() >= b.prec() => *a -= b,
            (Scalar::Float(a), Scalar::Exact(b)) => *a -= b,
            _ => *self = &*self - rhs,
        }
    }
}

impl SubAssign<Scalar> for Scalar {
    fn sub_assign(&mut self, rhs: Scalar) {
        *self -= &rhs;
    }
}

impl MulAssign<&Scalar> for Scalar {
    fn mul_assign(&mut self, rhs: &Scalar) {
        match (&mut *self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => *a *= b,
            (Scalar::Float(a), Scalar::Float(b)) if a.prec() >= b.prec() => *a *= b,
            (Scalar::Float(a), Scalar::Exact(b)) => *a *= b,
            _ => *self = &*self * rhs,
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(-r),
            Scalar::Float(f) => Scalar::Float(-f),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -(self.clone())
    }
}

/// Sums an iterator of scalars, starting from `arith.zero()`.
pub fn sum<'a, I>(arith: Arith, items: I) -> Scalar
where
    I: IntoIterator<Item = &'a Scalar>,
{
    let mut acc = arith.zero();
    for s in items {
        acc += s;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_arithmetic_stays_exact() {
        let a = Arith::Exact.ratio(1, 3);
        let b = Arith::Exact.ratio(1, 6);
        let c = &a + &b;
        assert_eq!(c, Arith::Exact.ratio(1, 2));
        assert!(c.is_exact());
        assert_eq!((&a * &b).to_repr(), "1/18");
    }

    #[test]
    fn mixed_arithmetic_promotes_to_float() {
        let a = Arith::Exact.ratio(1, 3);
        let b = Arith::Float { bits: 128 }.ratio(1, 3);
        let c = &a - &b;
        assert!(!c.is_exact());
        assert_eq!(c.arith(), Arith::Float { bits: 128 });
        assert!(c.abs() < Arith::Exact.ratio(1, 1 << 40));
    }

    #[test]
    fn float_precision_floor() {
        assert!(Arith::float(32).is_err());
        assert!(Arith::float(64).is_ok());
    }

    #[test]
    fn parse_forms() {
        assert_eq!(Scalar::parse("3/4", 64).unwrap(), Arith::Exact.ratio(3, 4));
        assert!(Scalar::parse("7", 64).unwrap().is_exact());
        let f = Scalar::parse("0.125", 64).unwrap();
        assert!(!f.is_exact());
        assert_eq!(f, Arith::Exact.ratio(1, 8));
        assert!(Scalar::parse("abc", 64).is_err());
        assert_eq!(Scalar::parse_exact("1e-3").unwrap(), Rational::from((1, 1000)));
        assert_eq!(Scalar::parse_exact("-2.5").unwrap(), Rational::from((-5, 2)));
    }

    #[test]
    fn float_repr_round_trips() {
        let x = Arith::Float { bits: 256 }.ratio(1, 3).exp();
        let back = Scalar::parse(&x.to_repr(), 256).unwrap();
        match (&x, &back) {
            (Scalar::Float(a), Scalar::Float(b)) => assert_eq!(a, b),
            _ => panic!("expected floats"),
        }
    }

    #[test]
    fn tolerance_by_mode() {
        assert!(Arith::Exact.tolerance().is_zero());
        let t = Arith::Float { bits: 64 }.tolerance();
        assert_eq!(t, Arith::Exact.ratio(1, 1 << 32));
    }

    #[test]
    fn binomial_coefficients() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(Arith::Exact.binomial(16, 8), Arith::Exact.int(12870));
    }
}
