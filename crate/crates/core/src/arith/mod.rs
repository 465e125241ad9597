//! Exact arithmetic: rationals, cyclotomic fields, polynomials, matrices,
//! p-adic valuations and Newton polygons, factorization over Q.

pub mod cyclo;
pub mod factor;
pub mod matrix;
pub mod numtheory;
pub mod padic;
pub mod poly;
pub mod rational;

pub use cyclo::{cyclo_embed, CycloElem};
pub use matrix::Matrix;
pub use padic::{newton_polygon, padic_valuation, pure_slope_factor, NewtonPolygon, Valuation};
pub use poly::{squarefree_part, Poly};
pub use rational::{q, Rational};

use std::fmt::Debug;

/// The field operations shared by [`Rational`] and [`CycloElem`].
///
/// Generic code calls these methods directly; the `std::ops` impls on the
/// concrete types are conveniences for non-generic code.
pub trait Field: Clone + PartialEq + Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Panics on zero.
    fn inv(&self) -> Self;
    fn from_rational(r: &Rational) -> Self;

    fn from_int(n: i64) -> Self {
        Self::from_rational(&Rational::from_int(n))
    }
    fn is_one(&self) -> bool {
        self.sub(&Self::one()).is_zero()
    }
    fn div(&self, o: &Self) -> Self {
        self.mul(&o.inv())
    }
    /// `self += a * b`
    fn add_mul_assign(&mut self, a: &Self, b: &Self) {
        *self = self.add(&a.mul(b));
    }
    fn pow(&self, mut e: u64) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }
}
