use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Scalar type used by the information measures: `f32` or `f64`.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Default + Send + Sync + 'static {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("representable literal")
    }

    /// Absolute tolerance for "sums to one" checks on a vector of `len` entries.
    fn simplex_tol(len: usize) -> Self {
        let floor = Self::lit(1e-12);
        let rounding = Self::epsilon() * Self::lit(4.0 * len.max(1) as f64);
        floor.max(rounding)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `x * ln(x)` with the convention `0 ln 0 = 0`.
pub(crate) fn xlogx<T: Real>(x: T) -> T {
    if x > T::zero() {
        x * x.ln()
    } else {
        T::zero()
    }
}
