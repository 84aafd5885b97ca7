//! Scalar abstractions.
//!
//! Learning, quantization and channel code is generic over [`Real`] (`f32`
//! or `f64`). Schedules only need field arithmetic, so they are generic over
//! [`BudgetScalar`], which also admits exact rationals such as [`Exact`].

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Exact rational used to audit budget conservation without rounding.
pub type Exact = Ratio<i128>;

/// Floating point scalar used for model parameters and signal math.
pub trait Real:
    Float
    + BudgetScalar
    + FromPrimitive
    + Debug
    + Display
    + Default
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts into every Real")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts into f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Arithmetic needed by the per-round budget schedules.
pub trait BudgetScalar: Num + Copy + PartialOrd + FromPrimitive + Debug {
    fn of_u64(x: u64) -> Self {
        Self::from_u64(x).expect("round counts fit the budget scalar")
    }
}

impl BudgetScalar for f32 {}
impl BudgetScalar for f64 {}
impl BudgetScalar for Exact {}

/// Relative closeness used for real-valued budget checks.
pub fn rel_close<S: BudgetScalar + ToPrimitive>(a: S, b: S, rel: f64) -> bool {
    let (a, b) = (
        a.to_f64().unwrap_or(f64::NAN),
        b.to_f64().unwrap_or(f64::NAN),
    );
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
