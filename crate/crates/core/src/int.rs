//! Integer backends for the correction engine.
//!
//! Arbitrary precision is always correct but allocates on every operation.
//! When every operand is known to be small, the same code runs on `i128`
//! with overflow turned into a panic rather than a wrong answer.

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;

mod sealed {
    pub trait Sealed {}
    impl Sealed for i128 {}
    impl Sealed for num_bigint::BigInt {}
}

pub trait Int: sealed::Sealed + Integer + Signed + Clone + Ord + Hash + Debug + Display + Send + Sync {
    fn from_i64(v: i64) -> Self;
    fn add_ref(&self, o: &Self) -> Self;
    fn sub_ref(&self, o: &Self) -> Self;
    fn mul_ref(&self, o: &Self) -> Self;
    fn to_bigint(&self) -> BigInt;
    fn from_bigint(v: &BigInt) -> Option<Self>;
}

impl Int for i128 {
    fn from_i64(v: i64) -> Self {
        i128::from(v)
    }

    fn add_ref(&self, o: &Self) -> Self {
        self.checked_add(*o).expect("i128 overflow in correction engine")
    }

    fn sub_ref(&self, o: &Self) -> Self {
        self.checked_sub(*o).expect("i128 overflow in correction engine")
    }

    fn mul_ref(&self, o: &Self) -> Self {
        self.checked_mul(*o).expect("i128 overflow in correction engine")
    }

    fn to_bigint(&self) -> BigInt {
        BigInt::from(*self)
    }

    fn from_bigint(v: &BigInt) -> Option<Self> {
        i128::try_from(v).ok()
    }
}

impl Int for BigInt {
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }

    fn add_ref(&self, o: &Self) -> Self {
        self + o
    }

    fn sub_ref(&self, o: &Self) -> Self {
        self - o
    }

    fn mul_ref(&self, o: &Self) -> Self {
        self * o
    }

    fn to_bigint(&self) -> BigInt {
        self.clone()
    }

    fn from_bigint(v: &BigInt) -> Option<Self> {
        Some(v.clone())
    }
}
