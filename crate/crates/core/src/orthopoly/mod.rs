//! Polynomial algebra over [`Scalar`](crate::scalar::Scalar) coefficients and
//! the two orthogonal families the constructions rely on: Legendre
//! polynomials on `[-1, 1]` and Kravchuk polynomials for `Bin(m, 1/2)`.

mod kravchuk;
mod legendre;
mod poly;
pub mod roots;

pub use kravchuk::{kravchuk, kravchuk_table, kravchuk_value};
pub use legendre::{legendre, legendre_explicit, poly_inner_legendre};
pub use poly::Poly;

/// `∫_x^{x+1} p(t) dt`, exact for exact coefficients.
pub fn poly_integrate_unit(p: &Poly, x: i64) -> crate::scalar::Scalar {
    p.integrate_unit(x)
}
