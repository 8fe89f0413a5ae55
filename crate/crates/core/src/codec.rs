//! Message validation, encoding `C = M·Q^n`, plain decoding `M = C·Q^{-n}`
//! and the mapping between k-bit strings and message matrices.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fib::{FibError, FibWindow, Mat2};

/// Which message matrices the sender may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Unrestricted,
    /// Only minimal matrices; needed for same-row double-error correction.
    Minimal,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Unrestricted => "unrestricted",
            Profile::Minimal => "minimal",
        })
    }
}

/// One reason a matrix is not an admissible message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    OrderTooSmall(u32),
    NonPositive { position: usize },
    AboveBound { position: usize, bound: BigInt },
    NotMinimal,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OrderTooSmall(n) => write!(f, "order {n} is below 2"),
            Violation::NonPositive { position } => write!(f, "m{} is not positive", position + 1),
            Violation::AboveBound { position, bound } => {
                write!(f, "m{} is not below F(n-1) = {bound}", position + 1)
            }
            Violation::NotMinimal => f.write_str("matrix is not minimal"),
        }
    }
}

/// Every constraint a candidate message breaks; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("invalid message: {0}")]
    InvalidMessage(Verdict),
    #[error("decoded matrix {matrix} is not an admissible message ({verdict}); the codeword is corrupted")]
    Corrupted { matrix: Mat2, verdict: Verdict },
    #[error("bit string length {0} is not a positive multiple of 4")]
    BitLength(usize),
    #[error("block size h = {h} needs 2^h < F(n-1), which fails for n = {order}; the smallest admissible odd order is {min_order}")]
    Parameters { h: u32, order: u32, min_order: u32 },
    #[error("entry m{position} = {value} does not fit a {h}-bit block")]
    BlockOverflow { position: usize, value: BigInt, h: u32 },
    #[error("invalid hex digit {0:?}")]
    Hex(char),
    #[error(transparent)]
    Fib(#[from] FibError),
}

/// `(m1 >= m3 and m2 <= m4)` or `(m1 <= m3 and m2 >= m4)`.
pub fn is_minimal(m: &Mat2) -> bool {
    let [m1, m2, m3, m4] = &m.entries;
    (m1 >= m3 && m2 <= m4) || (m1 <= m3 && m2 >= m4)
}

/// Checks `1 <= m_i < F_{n-1}` for every entry, plus minimality under
/// [`Profile::Minimal`].
pub fn validate_message(m: &Mat2, order: u32, profile: Profile) -> Verdict {
    if order < 2 {
        return Verdict { violations: vec![Violation::OrderTooSmall(order)] };
    }
    let bound = crate::fib::fib_unchecked(order - 1);
    validate_with_bound(m, &bound, profile)
}

pub(crate) fn validate_with_bound(m: &Mat2, bound: &BigInt, profile: Profile) -> Verdict {
    let mut violations = Vec::new();
    for (position, v) in m.entries.iter().enumerate() {
        if !v.is_positive() {
            violations.push(Violation::NonPositive { position });
        } else if v >= bound {
            violations.push(Violation::AboveBound { position, bound: bound.clone() });
        }
    }
    if profile == Profile::Minimal && !is_minimal(m) {
        violations.push(Violation::NotMinimal);
    }
    Verdict { violations }
}

/// A validated message matrix bound to a code order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Message {
    matrix: Mat2,
    order: u32,
}

impl Message {
    pub fn new(matrix: Mat2, order: u32, profile: Profile) -> Result<Self, CodecError> {
        let verdict = validate_message(&matrix, order, profile);
        if !verdict.is_valid() {
            return Err(CodecError::InvalidMessage(verdict));
        }
        Ok(Message { matrix, order })
    }

    pub(crate) fn new_unchecked(matrix: Mat2, order: u32) -> Self {
        Message { matrix, order }
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.matrix
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_minimal(&self) -> bool {
        is_minimal(&self.matrix)
    }

    pub fn det(&self) -> BigInt {
        self.matrix.det()
    }
}

/// An encoded matrix with its order and checking element `det M`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Codeword {
    pub entries: [BigInt; 4],
    pub order: u32,
    pub check: BigInt,
}

impl Codeword {
    pub fn matrix(&self) -> Mat2 {
        Mat2 { entries: self.entries.clone() }
    }

    pub fn det(&self) -> BigInt {
        self.matrix().det()
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (n = {}, det M = {})", self.matrix(), self.order, self.check)
    }
}

/// `c = m·Q^n` entrywise.
pub(crate) fn encode_entries(w: &FibWindow, m: &[BigInt; 4]) -> [BigInt; 4] {
    let [m1, m2, m3, m4] = m;
    [
        &w.next * m1 + &w.cur * m2,
        &w.cur * m1 + &w.prev * m2,
        &w.next * m3 + &w.cur * m4,
        &w.cur * m3 + &w.prev * m4,
    ]
}

/// `m = c·Q^{-n}` entrywise; exact for any order.
pub(crate) fn decode_entries(w: &FibWindow, c: &[BigInt; 4]) -> [BigInt; 4] {
    let [r1, r2] = [decode_row(w, &c[0], &c[1]), decode_row(w, &c[2], &c[3])];
    [r1.0, r1.1, r2.0, r2.1]
}

pub(crate) fn decode_row(w: &FibWindow, left: &BigInt, right: &BigInt) -> (BigInt, BigInt) {
    let a = &w.prev * left - &w.cur * right;
    let b = &w.next * right - &w.cur * left;
    if w.is_odd() {
        (-a, -b)
    } else {
        (a, b)
    }
}

/// Encodes a validated message: `C = M·Q^n`, check `= det M`.
pub fn encode(msg: &Message) -> Codeword {
    let w = FibWindow::new(msg.order).expect("validated order");
    Codeword {
        entries: encode_entries(&w, &msg.matrix.entries),
        order: msg.order,
        check: msg.det(),
    }
}

/// Plain decoding `M = C·Q^{-n}`. Does not look at the checking element; a
/// result outside the message bounds is reported as corruption.
pub fn decode(c: &Codeword) -> Result<Message, CodecError> {
    decode_with_profile(c, Profile::Unrestricted)
}

pub fn decode_with_profile(c: &Codeword, profile: Profile) -> Result<Message, CodecError> {
    let w = FibWindow::new(c.order)?;
    let matrix = Mat2 { entries: decode_entries(&w, &c.entries) };
    let verdict = validate_with_bound(&matrix, &w.prev, profile);
    if c.order < 2 || !verdict.is_valid() {
        return Err(CodecError::Corrupted { matrix, verdict });
    }
    Ok(Message::new_unchecked(matrix, c.order))
}

/// Smallest odd order `n >= 3` with `2^h < F_{n-1}`.
pub fn min_order_for_block(h: u32) -> u32 {
    let limit = BigInt::one() << h;
    let mut n = 3;
    while crate::fib::fib_unchecked(n - 1) <= limit {
        n += 2;
    }
    n
}

/// Splits `k = 4h` bits into four h-bit blocks `b_i` and maps them to
/// `m_i = b_i + 1`. Requires `2^h < F_{n-1}`.
pub fn pack_message(bits: &[bool], order: u32) -> Result<Message, CodecError> {
    if bits.is_empty() || bits.len() % 4 != 0 {
        return Err(CodecError::BitLength(bits.len()));
    }
    let h = (bits.len() / 4) as u32;
    let bound = crate::fib::fib_unchecked(order.saturating_sub(1));
    if order < 2 || (BigInt::one() << h) >= bound {
        return Err(CodecError::Parameters { h, order, min_order: min_order_for_block(h) });
    }
    let entries: [BigInt; 4] = std::array::from_fn(|i| {
        let block = &bits[i * h as usize..(i + 1) * h as usize];
        block.iter().fold(BigInt::zero(), |acc, &b| (acc << 1) + u8::from(b)) + 1
    });
    Ok(Message::new_unchecked(Mat2 { entries }, order))
}

/// Inverse of [`pack_message`] for block size `h`.
pub fn unpack_message(msg: &Message, h: u32) -> Result<Vec<bool>, CodecError> {
    let mut bits = Vec::with_capacity(4 * h as usize);
    for (i, m) in msg.matrix.entries.iter().enumerate() {
        let block: BigInt = m - 1;
        if block.is_negative() || block.bits() > u64::from(h) {
            return Err(CodecError::BlockOverflow { position: i + 1, value: m.clone(), h });
        }
        bits.extend((0..h).rev().map(|j| block.bit(u64::from(j))));
    }
    Ok(bits)
}

/// Big-endian bit expansion of a hex string (4 bits per digit).
pub fn bits_from_hex(hex: &str) -> Result<Vec<bool>, CodecError> {
    let mut bits = Vec::with_capacity(hex.len() * 4);
    for ch in hex.chars() {
        let d = ch.to_digit(16).ok_or(CodecError::Hex(ch))?;
        bits.extend((0..4).rev().map(|j| (d >> j) & 1 == 1));
    }
    Ok(bits)
}

/// Lowercase hex rendering; the length must be a multiple of 4.
pub fn bits_to_hex(bits: &[bool]) -> String {
    bits.chunks(4)
        .map(|c| {
            let d = c.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b));
            char::from_digit(d, 16).unwrap()
        })
        .collect()
}

/// Convenience for small literal messages in tests and tools.
pub fn message_from_i64(m: [i64; 4], order: u32, profile: Profile) -> Result<Message, CodecError> {
    Message::new(Mat2::from_i64(m), order, profile)
}

/// Entries of a matrix as `i64`, if they fit.
pub fn entries_i64(entries: &[BigInt; 4]) -> Option<[i64; 4]> {
    let v: Vec<i64> = entries.iter().map(|e| e.to_i64()).collect::<Option<_>>()?;
    Some([v[0], v[1], v[2], v[3]])
}
