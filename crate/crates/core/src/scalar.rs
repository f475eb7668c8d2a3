//! Scalar abstraction shared by the model, training and Ising code.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive};

/// Floating-point type the numerical core is generic over.
///
/// Implemented for `f32` and `f64`. Everything that crosses a file boundary
/// goes through `Display`/`FromStr`, which round-trip exactly for both.
pub trait Real:
    Float + FromPrimitive + Default + Debug + Display + FromStr + Sum + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for constants and uniform draws.
    fn of(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn of(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

/// Numerically stable logistic function `1 / (1 + e^{-x})`.
#[inline]
pub fn logistic<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus<F: Real>(x: F) -> F {
    if x > F::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Log of a sum of exponentials.
pub fn log_sum_exp<F: Real>(values: &[F]) -> F {
    let max = values
        .iter()
        .copied()
        .fold(F::neg_infinity(), |acc, x| acc.max(x));
    if max == F::neg_infinity() {
        return max;
    }
    let sum: F = values.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}
