//! Floating point abstraction shared by every numerical routine.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Real scalar the lab computes with. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal, panicking only if the target cannot hold it.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal out of range for scalar type")
    }

    fn lit_usize(n: usize) -> Self {
        Self::from_usize(n).expect("integer out of range for scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn norm<T: Scalar>(a: &[T]) -> T {
    // scaled to avoid overflow for large entries
    let m = a.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if m == T::zero() || !m.is_finite() {
        return m;
    }
    let s = a.iter().fold(T::zero(), |acc, &x| {
        let y = x / m;
        acc + y * y
    });
    m * s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_handles_large_entries() {
        let v = [3e200_f64, 4e200];
        assert!((norm(&v) - 5e200).abs() / 5e200 < 1e-15);
        assert_eq!(norm::<f32>(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn lit_works_for_both_widths() {
        assert_eq!(f32::lit(0.5), 0.5f32);
        assert_eq!(f64::lit_usize(7), 7.0);
    }
}
