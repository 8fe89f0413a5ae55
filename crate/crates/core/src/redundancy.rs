//! Codeword length and redundancy for bitstream messages of `k = 4h` bits.
//!
//! `log2 φ` and `log2 5` are computed once, in 128-bit fixed point, from an
//! integer square root of 5, so the floor expression is reproducible on every
//! platform.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::fib::fib_unchecked;

/// Fractional bits of the stored constants.
const FRAC_BITS: u32 = 128;
/// Working precision while deriving them.
const WORK_BITS: u32 = 192;
/// The floor is refused when the value lies this close (2^-96) to an integer.
const MARGIN_BITS: u32 = 96;
/// Keeps the accumulated constant error far below the margin.
pub const MAX_ORDER: u32 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RedundancyError {
    #[error("message length must be positive")]
    EmptyMessage,
    #[error("message length {0} is not a multiple of 4")]
    NotMultipleOfFour(u64),
    #[error("order {0} must be odd and at least 3")]
    Order(u32),
    #[error("order {0} exceeds the supported maximum {MAX_ORDER}")]
    OrderTooLarge(u32),
    #[error("floor of the length formula is within 2^-{MARGIN_BITS} of an integer for n = {n}, k = {k}")]
    Precision { n: u32, k: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RedundancyFigures {
    pub n: u32,
    pub k: u64,
    /// `2^h < F_{n-1}`: every `h`-bit block fits below the message bound.
    pub admissible: bool,
    pub l_formula: u64,
    pub l_exact: u64,
    pub redundancy_formula: i64,
    /// `2.8n + 0.5k`.
    pub redundancy_approx: f64,
    /// `2.8n + 1.5k`.
    pub l_approx: f64,
}

/// `floor(log2 x)` integer part plus `FRAC_BITS` fractional bits, for a
/// positive fixed-point `x` with `WORK_BITS` fractional bits.
fn log2_fixed(mut x: BigInt) -> BigInt {
    let one = BigInt::one() << WORK_BITS;
    let two = &one << 1;
    assert!(x >= one, "log2_fixed expects x >= 1");
    let mut int = 0u64;
    while x >= two {
        x >>= 1;
        int += 1;
    }
    let mut frac = BigInt::zero();
    for _ in 0..FRAC_BITS {
        x = (&x * &x) >> WORK_BITS;
        frac <<= 1;
        if x >= two {
            x >>= 1;
            frac += 1;
        }
    }
    (BigInt::from(int) << FRAC_BITS) + frac
}

/// `log2 φ` with 128 fractional bits.
pub fn log2_phi() -> &'static BigInt {
    static CELL: OnceLock<BigInt> = OnceLock::new();
    CELL.get_or_init(|| {
        let sqrt5 = (BigInt::from(5) << (2 * WORK_BITS)).sqrt();
        let phi = ((BigInt::one() << WORK_BITS) + sqrt5) >> 1;
        log2_fixed(phi)
    })
}

/// `log2 5` with 128 fractional bits.
pub fn log2_5() -> &'static BigInt {
    static CELL: OnceLock<BigInt> = OnceLock::new();
    CELL.get_or_init(|| log2_fixed(BigInt::from(5) << WORK_BITS))
}

/// Decimal rendering of a 128-bit fixed-point value, truncated.
pub fn fixed_to_decimal(v: &BigInt, digits: usize) -> String {
    let int = v >> FRAC_BITS;
    let frac = v - (&int << FRAC_BITS);
    let scaled = (frac * BigInt::from(10u32).pow(digits as u32)) >> FRAC_BITS;
    format!("{int}.{scaled:0>digits$}")
}

fn check_params(n: u32, k: u64) -> Result<u32, RedundancyError> {
    if k == 0 {
        return Err(RedundancyError::EmptyMessage);
    }
    if k % 4 != 0 {
        return Err(RedundancyError::NotMultipleOfFour(k));
    }
    if n < 3 || n % 2 == 0 {
        return Err(RedundancyError::Order(n));
    }
    if n > MAX_ORDER {
        return Err(RedundancyError::OrderTooLarge(n));
    }
    u32::try_from(k / 4).map_err(|_| RedundancyError::NotMultipleOfFour(k))
}

/// Whether every `h`-bit block value fits strictly below `F_{n-1}`.
pub fn is_admissible(n: u32, h: u32) -> bool {
    n >= 2 && (BigInt::one() << h) < fib_unchecked(n - 1)
}

/// `l = floor((4n+2)·log2 φ − 2·log2 5 + 3k/2 + 5)`.
pub fn codeword_bits(n: u32, k: u64) -> Result<u64, RedundancyError> {
    check_params(n, k)?;
    let whole = BigInt::from(3 * k / 2 + 5) << FRAC_BITS;
    let value: BigInt = BigInt::from(4 * u64::from(n) + 2) * log2_phi() - (log2_5() << 1) + whole;
    debug_assert!(value.is_positive());
    let floor = &value >> FRAC_BITS;
    let frac = &value - (&floor << FRAC_BITS);
    let margin = BigInt::one() << (FRAC_BITS - MARGIN_BITS);
    if frac < margin || frac > (BigInt::one() << FRAC_BITS) - &margin {
        return Err(RedundancyError::Precision { n, k });
    }
    Ok(u64::try_from(floor).expect("codeword length fits in u64"))
}

/// Bit count of the largest codeword over raw `h`-bit blocks
/// (`m_i <= 2^h − 1`) plus `2h + 1` bits for the signed determinant.
pub fn exact_codeword_bits(n: u32, k: u64) -> Result<u64, RedundancyError> {
    let h = check_params(n, k)?;
    let top: BigInt = (BigInt::one() << h) - 1;
    let c_left = (&top * fib_unchecked(n + 2)).bits();
    let c_right = (&top * fib_unchecked(n + 1)).bits();
    Ok(2 * c_left + 2 * c_right + 2 * u64::from(h) + 1)
}

pub fn redundancy(n: u32, k: u64) -> Result<RedundancyFigures, RedundancyError> {
    let h = check_params(n, k)?;
    let l_formula = codeword_bits(n, k)?;
    let l_exact = exact_codeword_bits(n, k)?;
    Ok(RedundancyFigures {
        n,
        k,
        admissible: is_admissible(n, h),
        l_formula,
        l_exact,
        redundancy_formula: l_formula as i64 - k as i64,
        redundancy_approx: 2.8 * f64::from(n) + 0.5 * k as f64,
        l_approx: 2.8 * f64::from(n) + 1.5 * k as f64,
    })
}
