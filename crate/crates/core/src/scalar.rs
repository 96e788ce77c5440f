//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the solvers, statistics and bounds are generic over.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance on `|Σ_s' P(s'|s,a) - 1|` accepted by model validation.
    const STOCHASTIC_TOL: f64;

    /// Converts an `f64` constant. Panics only if the target type cannot
    /// represent finite `f64` values at all, which never happens for `f32`/`f64`.
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }

    /// `tol`, raised to a small multiple of machine epsilon when the type is
    /// too coarse to resolve it.
    fn tol(tol: f64) -> Self {
        let floor = Self::epsilon() * Self::c(16.0);
        Self::c(tol).max(floor)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_count(n: usize) -> Self {
        Self::c(n as f64)
    }
}

impl Real for f64 {
    const STOCHASTIC_TOL: f64 = 1e-12;
}

impl Real for f32 {
    const STOCHASTIC_TOL: f64 = 1e-5;
}

/// Natural log of natural log, `None` when `x <= e`.
pub(crate) fn ln_ln<T: Real>(x: T) -> Option<T> {
    if x > T::E() {
        Some(x.ln().ln())
    } else {
        None
    }
}

/// `ceil(x)` that ignores relative noise below 1e-9, so `173/173 * ln(e)`
/// evaluated as `1.0000000000000002` still rounds to 1.
pub(crate) fn ceil_tol(x: f64) -> f64 {
    let noise = 1e-9 * x.abs().max(1.0);
    let r = x.round();
    if (x - r).abs() <= noise {
        r
    } else {
        x.ceil()
    }
}

pub(crate) fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_tol_absorbs_rounding() {
        assert_eq!(ceil_tol(1.0000000000000002), 1.0);
        assert_eq!(ceil_tol(0.9999999999999998), 1.0);
        assert_eq!(ceil_tol(1.2), 2.0);
        assert_eq!(ceil_tol(3.0), 3.0);
    }

    #[test]
    fn ln_ln_guard() {
        assert!(ln_ln(2.0_f64).is_none());
        assert!(ln_ln(std::f64::consts::E).is_none());
        assert!((ln_ln(150.0_f64).unwrap() - 150f64.ln().ln()).abs() < 1e-15);
    }

    #[test]
    fn tolerance_floor_for_f32() {
        assert!(f32::tol(1e-12) > 1e-12);
        assert_eq!(f64::tol(1e-9), 1e-9);
    }
}
