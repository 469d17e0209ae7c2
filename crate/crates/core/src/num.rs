//! Scalar abstraction shared by the model kernels.
//!
//! Every closed-form kernel (pathloss, large-scale fading, beam gain,
//! Bessel functions, FSO gains, delay/energy formulas) is written against
//! [`Scalar`] so it can be evaluated in `f32` or `f64`. The optimization
//! engines work on complex `f64` matrices and are not generic.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

pub trait Scalar:
    'static + Float + FloatConst + NumAssign + FromPrimitive + Default + Debug + Display + LowerExp + Send + Sync
{
    /// Converts an `f64` literal; all literals used by the kernels are finite.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts a dB value to a linear power ratio.
#[inline]
pub fn db_to_linear<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

#[inline]
pub fn linear_to_db<T: Scalar>(x: T) -> T {
    T::lit(10.0) * x.log10()
}

/// dBm to watts.
#[inline]
pub fn dbm_to_watts<T: Scalar>(dbm: T) -> T {
    db_to_linear(dbm - T::lit(30.0))
}
