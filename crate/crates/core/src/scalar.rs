//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use nalgebra as na;
use num_traits as nt;

/// Real floating point scalar: `f32` or `f64`.
///
/// Float math comes from [`na::RealField`]; literal and output conversion
/// come from num-traits.
pub trait Real:
    na::RealField
    + Copy
    + nt::FromPrimitive
    + nt::ToPrimitive
    + nt::FloatConst
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as nt::FromPrimitive>::from_f64(x).expect("f64 literal is representable")
    }

    /// Converts a count or index.
    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as nt::FromPrimitive>::from_usize(n).expect("count is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        nt::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the concrete type.
    fn eps() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// Formats a value with 17 significant digits, the precision used by every
/// text format the crate writes.
pub fn fmt17<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

/// Parses a float token into `T`.
pub fn parse_real<T: Real>(token: &str) -> Option<T> {
    token.parse::<f64>().ok().map(T::lit)
}

/// A residual contract `tol` loosened to what the scalar type can resolve:
/// `max(tol, 100·ε)`.
pub fn contract_tol<T: Real>(tol: f64) -> T {
    T::lit(tol).max(T::lit(100.0) * T::eps())
}
