use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by the curve and information-matrix code.
///
/// Implemented for `f32` and `f64`. Statistical routines that need quantile
/// functions or random sampling are written against `f64` directly.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Relative closeness test `|a - b| <= rel * max(|a|, |b|)`.
#[inline]
pub fn rel_eq<T: Scalar>(a: T, b: T, rel: T) -> bool {
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= rel * scale
}
