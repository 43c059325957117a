use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Arithmetic the solver needs from a value type.
///
/// Implemented for `f32`, `f64` and exact rationals such as
/// `num_rational::Ratio<i64>`. Payoffs enter the solver as `f64` and are
/// converted once per state through [`Scalar::from_payoff`].
pub trait Scalar: Num + FromPrimitive + ToPrimitive + PartialOrd + Copy + Debug + Send + Sync + 'static {
    fn from_payoff(x: f64) -> Self {
        Self::from_f64(x).expect("payoff not representable in scalar type")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl<T> Scalar for T where T: Num + FromPrimitive + ToPrimitive + PartialOrd + Copy + Debug + Send + Sync + 'static {}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn rational_payoffs_are_exact_for_dyadics() {
        let r = <Ratio<i64> as Scalar>::from_payoff(0.375);
        assert_eq!(r, Ratio::new(3, 8));
        assert_eq!(<Ratio<i64> as Scalar>::from_count(16), Ratio::from_integer(16));
    }

    #[test]
    fn min_max_helpers() {
        assert_eq!(2.0f64.max_of(3.0), 3.0);
        assert_eq!(2.0f32.min_of(-1.0), -1.0);
    }
}
