//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::Serialize;

/// Floating point type the solvers are generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Serialize
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Never fails for the supported types.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Signed power `|x|^q sgn(x)`, with `0` mapped to `0` for `q > 0`.
    fn spow(self, q: Self) -> Self {
        if self == Self::zero() {
            Self::zero()
        } else {
            self.abs().powf(q).copysign(self)
        }
    }

    /// `|x|^q`, with `0^q = 0` for `q > 0`.
    fn apow(self, q: Self) -> Self {
        if self == Self::zero() {
            Self::zero()
        } else {
            self.abs().powf(q)
        }
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
