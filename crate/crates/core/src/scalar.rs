//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Real floating-point scalar (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Default + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal; exact for `f64`, rounded for `f32`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn czero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

/// Euclidean norm of a complex slice.
pub fn norm2<T: Real>(x: &[C<T>]) -> T {
    x.iter().fold(T::zero(), |acc, v| acc + v.norm_sqr()).sqrt()
}

/// Maximum modulus of a complex slice (0 for an empty slice).
pub fn norm_inf<T: Real>(x: &[C<T>]) -> T {
    x.iter().fold(T::zero(), |acc, v| acc.max(v.norm()))
}

/// `‖x − y‖₂` for equal-length slices.
pub fn dist2<T: Real>(x: &[C<T>], y: &[C<T>]) -> T {
    debug_assert_eq!(x.len(), y.len());
    x.iter()
        .zip(y)
        .fold(T::zero(), |acc, (a, b)| acc + (*a - *b).norm_sqr())
        .sqrt()
}

pub(crate) fn real_norm2<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |acc, v| acc + *v * *v).sqrt()
}
