//! Scalar abstraction for the pure numeric kernels (accounting, cone
//! polyhedra, big-M constants). Anything handed to the MILP backend is `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the generic kernels.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant, panicking only for non-representable values
    /// (never the case for `f32`/`f64`).
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Relative closeness with an absolute floor of one unit of `rel`.
pub fn rel_close<T: Scalar>(a: T, b: T, rel: T) -> bool {
    (a - b).abs() <= rel * (T::one() + a.abs().max(b.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lit_round_trips() {
        assert_eq!(<f32 as Scalar>::lit(0.5), 0.5f32);
        assert_eq!(<f64 as Scalar>::lit(1e-9), 1e-9);
    }

    #[test]
    fn rel_close_uses_floor() {
        assert!(rel_close(0.0f64, 1e-10, 1e-9));
        assert!(!rel_close(1.0f64, 1.1, 1e-3));
    }
}
