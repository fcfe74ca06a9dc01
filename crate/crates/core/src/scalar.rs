//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating point sample type: `f32` or `f64`.
///
/// File I/O and the CLI always work in `f64`; `f32` is available for
/// memory-bound in-process use.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`.
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 is representable")
    }

    /// Lossless widening to `f64`.
    fn widen(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("float widens to f64")
    }

    /// `2^e` for a possibly half-integer exponent.
    fn pow2(e: f64) -> Self {
        Self::of(e.exp2())
    }
}

impl Real for f32 {}
impl Real for f64 {}
