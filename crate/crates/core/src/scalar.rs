use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rustfft::FftNum;

/// Floating-point sample type: `f32` or `f64`.
///
/// Every numeric stage of the pipeline is generic over this trait. Physical
/// scenario parameters (bandwidths, SNRs, powers) stay `f64` and are converted
/// at the boundary with [`Real::of`].
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + FftNum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Real")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
