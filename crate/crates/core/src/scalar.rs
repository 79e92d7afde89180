//! Scalar abstractions.
//!
//! Model construction and the exact algebraic identities only need field
//! arithmetic, so they are written against [`Scalar`], which admits exact
//! rationals. Anything that needs square roots, logs or iteration to a
//! tolerance is written against [`Real`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, NumAssign, ToPrimitive};

/// Field-like scalar usable for model entries.
pub trait Scalar:
    Num + NumAssign + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Exact `num / den` where the type allows it.
    fn ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num).expect("integer fits scalar") / Self::from_i64(den).expect("integer fits scalar")
    }

    fn from_usize_exact(v: usize) -> Self {
        Self::from_usize(v).expect("integer fits scalar")
    }

    fn half() -> Self {
        Self::ratio(1, 2)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
impl Scalar for Ratio<i64> {}
impl Scalar for Ratio<i128> {}

/// Floating point scalar for numerical routines.
pub trait Real: Scalar + Float + Sum {
    /// Convert from `f64`, rounding if necessary.
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite f64 converts")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Neumaier-compensated sum.
pub fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(values: I) -> T {
    let mut sum = T::zero();
    let mut carry = T::zero();
    for v in values {
        let t = sum + v;
        if Float::abs(sum) >= Float::abs(v) {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Plain sum for any scalar; exact for rationals.
pub fn exact_sum<T: Scalar, I: IntoIterator<Item = T>>(values: I) -> T {
    values.into_iter().fold(T::zero(), |acc, v| acc + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_is_exact_for_rationals() {
        let third: Ratio<i64> = Scalar::ratio(1, 3);
        assert_eq!(third * Ratio::from_integer(3), Ratio::from_integer(1));
        assert_eq!(<f64 as Scalar>::half(), 0.5);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut v = vec![1.0e16_f64];
        v.extend(std::iter::repeat(1.0).take(1000));
        v.push(-1.0e16);
        assert_eq!(compensated_sum(v), 1000.0);
    }
}
