//! Scalar abstraction used by expression evaluation.
//!
//! The engine itself only ever evaluates in [`Rat`]; `f64`/`f32` are provided so that
//! the same trees can be approximated when they contain `exp`, which has no exact
//! rational value.

use std::fmt::Debug;
use std::ops::Neg;

use num_traits::{Num, ToPrimitive, Zero};

use crate::Rat;

pub trait Scalar: Num + Clone + PartialOrd + Neg<Output = Self> + Debug {
    fn from_rat(r: &Rat) -> Self;

    /// `e^self`, or `None` when the result is not representable in this type.
    fn exp(&self) -> Option<Self>;

    /// The value as an integer exponent, if it is one.
    fn as_exponent(&self) -> Option<i32>;

    /// `self^e` for a non-integer exponent, or `None` when not representable.
    fn powf(&self, e: &Self) -> Option<Self>;

    fn powi(&self, k: i32) -> Option<Self> {
        if k < 0 {
            if self.is_zero() {
                return None;
            }
            return Some(Self::one() / self.powi(-k)?);
        }
        let mut acc = Self::one();
        for _ in 0..k {
            acc = acc * self.clone();
        }
        Some(acc)
    }
}

impl Scalar for Rat {
    fn from_rat(r: &Rat) -> Self {
        r.clone()
    }

    /// Always `None`: exact evaluation rejects `exp` outright rather than special-casing `e^0`.
    fn exp(&self) -> Option<Self> {
        None
    }

    fn as_exponent(&self) -> Option<i32> {
        if self.is_integer() {
            self.to_integer().to_i32()
        } else {
            None
        }
    }

    fn powf(&self, _e: &Self) -> Option<Self> {
        None
    }

    fn powi(&self, k: i32) -> Option<Self> {
        if k < 0 && self.is_zero() {
            return None;
        }
        Some(num_traits::Pow::pow(self, k))
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_rat(r: &Rat) -> Self {
                crate::rat::to_f64(r) as $t
            }

            fn exp(&self) -> Option<Self> {
                Some(<$t>::exp(*self))
            }

            fn as_exponent(&self) -> Option<i32> {
                (self.fract() == 0.0 && self.abs() <= i32::MAX as $t).then(|| *self as i32)
            }

            fn powf(&self, e: &Self) -> Option<Self> {
                let v = <$t>::powf(*self, *e);
                v.is_finite().then_some(v)
            }

            fn powi(&self, k: i32) -> Option<Self> {
                if k < 0 && *self == 0.0 {
                    return None;
                }
                Some(<$t>::powi(*self, k))
            }
        }
    };
}

float_scalar!(f64);
float_scalar!(f32);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{frac, int};

    #[test]
    fn rational_powers() {
        assert_eq!(frac(-3, 2).powi(2), Some(frac(9, 4)));
        assert_eq!(int(2).powi(-2), Some(frac(1, 4)));
        assert_eq!(int(0).powi(-1), None);
        assert_eq!(int(0).powi(0), Some(int(1)));
    }

    #[test]
    fn exp_only_in_floats() {
        assert_eq!(Scalar::exp(&int(0)), None);
        assert!((Scalar::exp(&1.0f64).unwrap() - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn exponent_detection() {
        assert_eq!(frac(4, 2).as_exponent(), Some(2));
        assert_eq!(frac(1, 2).as_exponent(), None);
        assert_eq!(3.0f32.as_exponent(), Some(3));
        assert_eq!(0.5f64.as_exponent(), None);
    }
}
