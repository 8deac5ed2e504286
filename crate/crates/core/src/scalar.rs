//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
///
/// The tolerances are the relative thresholds used for rank and
/// singularity decisions; they scale with the precision of the type.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Relative pivot threshold: a pivot below `rank_tol * max column norm`
    /// is treated as zero.
    fn rank_tol() -> Self;

    /// Absolute reconstruction tolerance for `V^T V` against `L`.
    fn recon_tol() -> Self;

    /// Relative PSD tolerance, multiplied by `trace(L) / m`.
    fn psd_tol() -> Self;

    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn rank_tol() -> Self {
        1e-10
    }

    fn recon_tol() -> Self {
        1e-8
    }

    fn psd_tol() -> Self {
        1e-8
    }
}

impl Scalar for f32 {
    fn rank_tol() -> Self {
        1e-5
    }

    fn recon_tol() -> Self {
        1e-4
    }

    fn psd_tol() -> Self {
        1e-4
    }
}
