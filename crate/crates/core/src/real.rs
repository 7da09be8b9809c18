use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Scalar type for descriptor components and thresholds.
///
/// Implemented for `f32` and `f64`; the blanket impl picks up any float
/// type with the required conversions.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Send + Sync + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 conversion")
    }

    fn from_u64_lossy(v: u64) -> Self {
        Self::from_u64(v).expect("u64 conversion")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Send + Sync + 'static
{
}
