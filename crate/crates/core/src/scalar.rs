use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

use crate::Rational;

/// Real scalar the numeric layers are generic over (`f32`, `f64`).
pub trait Scalar:
    Float + FromPrimitive + nalgebra::RealField + Copy + Debug + Display + Default + Send + Sync + 'static
{
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 converts to scalar")
    }

    fn from_rational(r: &Rational) -> Self {
        Self::of(crate::symbolic::expr::rational_to_f64(r))
    }

    fn to_f64(self) -> f64 {
        <Self as num_traits::ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Unit roundoff of the format.
    fn eps() -> Self {
        <Self as Float>::epsilon()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
