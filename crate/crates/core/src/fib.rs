//! Fibonacci numbers, powers of the Q-matrix and the rational approximation
//! intervals around the golden ratio.
//!
//! Everything here is exact big-integer arithmetic. Floating point never
//! appears; [`binet_estimate`] uses interval-bounded fixed-point arithmetic
//! and refuses to answer when the bounds cannot separate the rounding.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Largest index accepted by [`binet_estimate`].
pub const MAX_BINET_ORDER: u32 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FibError {
    #[error("Fibonacci numbers are indexed from 1, got index 0")]
    ZeroIndex,
    #[error("order {order} is below the minimum of {min}")]
    OrderTooSmall { order: u32, min: u32 },
    #[error("order {0} is not supported here: correction needs an odd order >= 3")]
    UnsupportedOrder(u32),
    #[error("fixed-point precision insufficient for order {order} (limit {limit})")]
    Precision { order: u32, limit: u32 },
}

/// Returns `F_n` of the classical sequence `F_1 = F_2 = 1`.
pub fn fib(n: u32) -> Result<BigInt, FibError> {
    if n == 0 {
        return Err(FibError::ZeroIndex);
    }
    Ok(fib_unchecked(n))
}

/// `F_n` with the convention `F_0 = 0`.
pub(crate) fn fib_unchecked(n: u32) -> BigInt {
    let (mut prev, mut cur) = (BigInt::zero(), BigInt::one());
    for _ in 0..n {
        let next = &prev + &cur;
        prev = std::mem::replace(&mut cur, next);
    }
    prev
}

/// Precomputed `F_0 ..= F_max`. Frozen once built, so it can be shared
/// freely between threads.
#[derive(Debug, Clone)]
pub struct FibTable {
    values: Vec<BigInt>,
}

impl FibTable {
    pub fn up_to(max: u32) -> Self {
        let mut values = Vec::with_capacity(max as usize + 1);
        values.push(BigInt::zero());
        if max >= 1 {
            values.push(BigInt::one());
        }
        for i in 2..=max as usize {
            let next = &values[i - 1] + &values[i - 2];
            values.push(next);
        }
        FibTable { values }
    }

    pub fn max_index(&self) -> u32 {
        (self.values.len() - 1) as u32
    }

    /// `F_i`; panics past the table end.
    pub fn get(&self, i: u32) -> &BigInt {
        &self.values[i as usize]
    }
}

/// The three consecutive Fibonacci numbers `F_{n-1}, F_n, F_{n+1}` that make
/// up `Q^n`, together with the order `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibWindow {
    pub order: u32,
    pub prev: BigInt,
    pub cur: BigInt,
    pub next: BigInt,
}

impl FibWindow {
    pub fn new(order: u32) -> Result<Self, FibError> {
        if order < 1 {
            return Err(FibError::OrderTooSmall { order, min: 1 });
        }
        let table = FibTable::up_to(order + 1);
        Ok(FibWindow {
            order,
            prev: table.get(order - 1).clone(),
            cur: table.get(order).clone(),
            next: table.get(order + 1).clone(),
        })
    }

    pub fn is_odd(&self) -> bool {
        self.order % 2 == 1
    }

    /// `(-1)^n`
    pub fn sign(&self) -> BigInt {
        if self.is_odd() {
            -BigInt::one()
        } else {
            BigInt::one()
        }
    }
}

/// A 2×2 matrix of big integers, stored row-major as `[[e0, e1], [e2, e3]]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mat2 {
    pub entries: [BigInt; 4],
}

impl Mat2 {
    pub fn new(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Self {
        Mat2 { entries: [a, b, c, d] }
    }

    pub fn from_i64(e: [i64; 4]) -> Self {
        Mat2 { entries: e.map(BigInt::from) }
    }

    pub fn identity() -> Self {
        Self::from_i64([1, 0, 0, 1])
    }

    pub fn q() -> Self {
        Self::from_i64([1, 1, 1, 0])
    }

    pub fn det(&self) -> BigInt {
        let [a, b, c, d] = &self.entries;
        a * d - b * c
    }

    pub fn row(&self, r: usize) -> (&BigInt, &BigInt) {
        (&self.entries[2 * r], &self.entries[2 * r + 1])
    }

    /// Repeated squaring; `pow(0)` is the identity.
    pub fn pow(&self, mut exp: u32) -> Mat2 {
        let mut base = self.clone();
        let mut acc = Mat2::identity();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            exp >>= 1;
        }
        acc
    }
}

impl Mul for &Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: &Mat2) -> Mat2 {
        let [a, b, c, d] = &self.entries;
        let [e, f, g, h] = &rhs.entries;
        Mat2::new(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = &self.entries;
        write!(f, "[[{a},{b}],[{c},{d}]]")
    }
}

/// `Q^n = [[F_{n+1}, F_n], [F_n, F_{n-1}]]` for `n >= 1`.
pub fn q_power(n: u32) -> Result<Mat2, FibError> {
    let w = FibWindow::new(n)?;
    Ok(Mat2::new(w.next, w.cur.clone(), w.cur, w.prev))
}

/// `Q^{-n} = (-1)^n [[F_{n-1}, -F_n], [-F_n, F_{n+1}]]` for `n >= 2`.
///
/// For even `n = 2k` this is `[[F_{2k-1}, -F_{2k}], [-F_{2k}, F_{2k+1}]]`, for
/// odd `n = 2k+1` it is `[[-F_{2k}, F_{2k+1}], [F_{2k+1}, -F_{2k+2}]]`.
pub fn q_power_inverse(n: u32) -> Result<Mat2, FibError> {
    if n < 2 {
        return Err(FibError::OrderTooSmall { order: n, min: 2 });
    }
    let w = FibWindow::new(n)?;
    let s = w.sign();
    Ok(Mat2::new(&s * &w.prev, -(&s * &w.cur), -(&s * &w.cur), &s * &w.next))
}

/// Where a ratio `num/den` falls relative to a closed interval `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioPosition {
    Below,
    Inside,
    Above,
}

/// The exact interval `[a, b] = [F_{n+1}/F_n, F_n/F_{n-1}]` around φ for odd
/// `n >= 3`. Membership tests cross-multiply; no rational is ever reduced on
/// the hot path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApproxInterval {
    pub lower: BigRational,
    pub upper: BigRational,
    pub order: u32,
    window: FibWindow,
}

/// Builds the approximation interval for an odd order `n >= 3`.
pub fn approx_interval(n: u32) -> Result<ApproxInterval, FibError> {
    if n < 3 || n % 2 == 0 {
        return Err(FibError::UnsupportedOrder(n));
    }
    let window = FibWindow::new(n)?;
    Ok(ApproxInterval {
        lower: BigRational::new(window.next.clone(), window.cur.clone()),
        upper: BigRational::new(window.cur.clone(), window.prev.clone()),
        order: n,
        window,
    })
}

impl ApproxInterval {
    pub fn window(&self) -> &FibWindow {
        &self.window
    }

    pub fn width(&self) -> BigRational {
        &self.upper - &self.lower
    }

    /// Locates `num/den` against the closed interval. A zero denominator is
    /// treated as `±∞` (never inside).
    pub fn locate(&self, num: &BigInt, den: &BigInt) -> RatioPosition {
        if den.is_zero() {
            return if num.is_negative() {
                RatioPosition::Below
            } else {
                RatioPosition::Above
            };
        }
        let (num, den) = if den.is_negative() {
            (-num, -den)
        } else {
            (num.clone(), den.clone())
        };
        let w = &self.window;
        // num/den < F_{n+1}/F_n
        if (&num * &w.cur).cmp(&(&den * &w.next)) == Ordering::Less {
            return RatioPosition::Below;
        }
        // num/den > F_n/F_{n-1}
        if (&num * &w.prev).cmp(&(&den * &w.cur)) == Ordering::Greater {
            return RatioPosition::Above;
        }
        RatioPosition::Inside
    }

    /// Closed membership `a <= num/den <= b`.
    pub fn contains(&self, num: &BigInt, den: &BigInt) -> bool {
        self.locate(num, den) == RatioPosition::Inside
    }

    /// Open membership `a < num/den < b`.
    pub fn contains_open(&self, num: &BigInt, den: &BigInt) -> bool {
        if !self.contains(num, den) {
            return false;
        }
        let w = &self.window;
        num * &w.cur != den * &w.next && num * &w.prev != den * &w.cur
    }

    pub fn contains_rational(&self, r: &BigRational) -> bool {
        self.contains(r.numer(), r.denom())
    }
}

/// Estimates `F_n` as `round(φ^n / √5)` with fixed-point arithmetic.
///
/// Lower and upper bounds are carried through every step; if they round to
/// different integers the precision is doubled, and after a few attempts a
/// [`FibError::Precision`] is returned instead of a guess.
pub fn binet_estimate(n: u32) -> Result<BigInt, FibError> {
    if n == 0 {
        return Err(FibError::ZeroIndex);
    }
    if n > MAX_BINET_ORDER {
        return Err(FibError::Precision { order: n, limit: MAX_BINET_ORDER });
    }
    let log_bits = 32 - n.leading_zeros();
    // 64 fractional bits plus the integer bits of φ^n (n·log2 φ < 0.7n) and
    // a guard for the ~2·log2(n) truncating multiplications.
    let mut frac_bits = 64 + (7 * n).div_ceil(10) + 2 * log_bits + 8;
    for _ in 0..4 {
        if let Some(v) = binet_bounded(n, frac_bits) {
            return Ok(v);
        }
        frac_bits *= 2;
    }
    Err(FibError::Precision { order: n, limit: MAX_BINET_ORDER })
}

fn binet_bounded(n: u32, p: u32) -> Option<BigInt> {
    let one = BigInt::one() << p;
    // floor(√5 · 2^p) and its successor bracket √5 · 2^p.
    let sqrt5_lo: BigInt = (BigInt::from(5) << (2 * p)).sqrt();
    let sqrt5_hi = &sqrt5_lo + 1;
    let phi_lo: BigInt = (&one + &sqrt5_lo) >> 1;
    let phi_hi: BigInt = (&one + &sqrt5_hi + 1) >> 1;

    let pow_lo = fixed_pow(&phi_lo, n, p, false);
    let pow_hi = fixed_pow(&phi_hi, n, p, true);

    let q_lo = (pow_lo << p).div_floor(&sqrt5_hi);
    let q_hi = (pow_hi << p).div_ceil(&sqrt5_lo);

    let half = BigInt::one() << (p - 1);
    let r_lo = (q_lo + &half) >> p;
    let r_hi = (q_hi + &half) >> p;
    (r_lo == r_hi).then_some(r_lo)
}

fn fixed_pow(base: &BigInt, mut exp: u32, p: u32, round_up: bool) -> BigInt {
    let mul = |x: &BigInt, y: &BigInt| -> BigInt {
        let prod = x * y;
        if round_up {
            let mask = (BigInt::one() << p) - 1;
            let carry = if (&prod & &mask).is_zero() { 0 } else { 1 };
            (prod >> p) + carry
        } else {
            prod >> p
        }
    };
    let mut acc = BigInt::one() << p;
    let mut b = base.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul(&acc, &b);
        }
        exp >>= 1;
        if exp > 0 {
            b = mul(&b, &b);
        }
    }
    acc
}
