//! Brute-force minimum-distance decoder for small orders.
//!
//! Deliberately shares no arithmetic with the rest of the crate: Fibonacci
//! numbers, encoding and minimality are recomputed here with `i128`, so the
//! oracle can be used to check the real decoder.

use std::collections::HashMap;

use num_bigint::BigInt;
use thiserror::Error;

use crate::codec::{Codeword, Profile};
use crate::correction::ReceivedMatrix;

/// Largest message space the oracle agrees to enumerate.
pub const MAX_MESSAGES: u64 = 20_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("message space for order {order} has {messages} elements (limit {MAX_MESSAGES})")]
    TooLarge { order: u32, messages: u64 },
    #[error("order {0} must be at least 2")]
    OrderTooSmall(u32),
    #[error("received matrix has order {found}, oracle was built for {expected}")]
    OrderMismatch { expected: u32, found: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleCandidate {
    pub message: [i128; 4],
    pub codeword: [i128; 4],
    pub distance: usize,
}

impl OracleCandidate {
    pub fn codeword_big(&self) -> [BigInt; 4] {
        self.codeword.map(BigInt::from)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    /// Every nearest admissible codeword, ordered by message.
    pub candidates: Vec<OracleCandidate>,
    /// `None` when no admissible message has the received check value.
    pub min_distance: Option<usize>,
}

impl OracleResult {
    /// The nearest codeword if it is unique and within `max_distance`.
    pub fn unique_within(&self, max_distance: usize) -> Option<&OracleCandidate> {
        match (self.min_distance, self.candidates.as_slice()) {
            (Some(d), [only]) if d <= max_distance => Some(only),
            _ => None,
        }
    }
}

fn fib_i128(n: u32) -> i128 {
    let (mut a, mut b) = (0i128, 1i128);
    for _ in 0..n {
        let next = a + b;
        a = b;
        b = next;
    }
    a
}

/// All valid messages of one order and profile, bucketed by determinant.
#[derive(Debug, Clone)]
pub struct Oracle {
    order: u32,
    profile: Profile,
    q: [i128; 4],
    by_det: HashMap<i128, Vec<[i128; 4]>>,
}

impl Oracle {
    pub fn new(order: u32, profile: Profile) -> Result<Self, OracleError> {
        if order < 2 {
            return Err(OracleError::OrderTooSmall(order));
        }
        let bound = fib_i128(order - 1);
        let side = (bound - 1).max(0) as u64;
        let messages = side.saturating_pow(4);
        if messages > MAX_MESSAGES {
            return Err(OracleError::TooLarge { order, messages });
        }
        let q = [fib_i128(order + 1), fib_i128(order), fib_i128(order), fib_i128(order - 1)];
        let mut by_det: HashMap<i128, Vec<[i128; 4]>> = HashMap::new();
        for m1 in 1..bound {
            for m2 in 1..bound {
                for m3 in 1..bound {
                    for m4 in 1..bound {
                        let minimal = (m1 >= m3 && m2 <= m4) || (m1 <= m3 && m2 >= m4);
                        if profile == Profile::Minimal && !minimal {
                            continue;
                        }
                        by_det.entry(m1 * m4 - m2 * m3).or_default().push([m1, m2, m3, m4]);
                    }
                }
            }
        }
        Ok(Oracle { order, profile, q, by_det })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn encode(&self, m: &[i128; 4]) -> [i128; 4] {
        let q = &self.q;
        [
            m[0] * q[0] + m[1] * q[2],
            m[0] * q[1] + m[1] * q[3],
            m[2] * q[0] + m[3] * q[2],
            m[2] * q[1] + m[3] * q[3],
        ]
    }

    /// Valid messages with the given determinant, in lexicographic order.
    pub fn messages_with_det(&self, det: i128) -> &[[i128; 4]] {
        self.by_det.get(&det).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every valid message, in lexicographic order.
    pub fn messages(&self) -> Vec<[i128; 4]> {
        let mut all: Vec<_> = self.by_det.values().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    /// Nearest admissible codewords by number of differing entries.
    pub fn correct(&self, r: &ReceivedMatrix) -> Result<OracleResult, OracleError> {
        if r.order != self.order {
            return Err(OracleError::OrderMismatch { expected: self.order, found: r.order });
        }
        let Ok(check) = i128::try_from(&r.check) else {
            return Ok(OracleResult { candidates: Vec::new(), min_distance: None });
        };
        // entries too large for i128 cannot equal any codeword entry
        let received: [Option<i128>; 4] = std::array::from_fn(|i| i128::try_from(&r.entries[i]).ok());
        let mut best: Option<usize> = None;
        let mut candidates = Vec::new();
        for m in self.messages_with_det(check) {
            let c = self.encode(m);
            let distance = (0..4).filter(|&i| received[i] != Some(c[i])).count();
            match best {
                Some(b) if distance > b => continue,
                Some(b) if distance == b => {}
                _ => {
                    best = Some(distance);
                    candidates.clear();
                }
            }
            candidates.push(OracleCandidate { message: *m, codeword: c, distance });
        }
        Ok(OracleResult { candidates, min_distance: best })
    }
}

/// One-shot oracle decoding.
pub fn oracle_correct(r: &ReceivedMatrix, profile: Profile) -> Result<OracleResult, OracleError> {
    Oracle::new(r.order, profile)?.correct(r)
}

/// Distance between a received matrix and a codeword, in entries.
pub fn entry_distance(received: &[BigInt; 4], c: &Codeword) -> usize {
    (0..4).filter(|&i| received[i] != c.entries[i]).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rx(e: [i64; 4]) -> ReceivedMatrix {
        ReceivedMatrix::from_i64(e, 5, -3)
    }

    #[test]
    fn single_error_example() {
        let res = oracle_correct(&rx([20, 11, 21, 13]), Profile::Minimal).unwrap();
        assert_eq!(res.min_distance, Some(1));
        let only = res.unique_within(3).unwrap();
        assert_eq!(only.codeword, [18, 11, 21, 13]);
        assert_eq!(only.message, [1, 2, 2, 1]);
    }

    #[test]
    fn clean_codeword_at_distance_zero() {
        let res = oracle_correct(&rx([18, 11, 21, 13]), Profile::Minimal).unwrap();
        assert_eq!(res.min_distance, Some(0));
        assert_eq!(res.candidates.len(), 1);
    }

    #[test]
    fn minimality_shrinks_same_row_candidates() {
        let minimal = oracle_correct(&rx([30, 7, 21, 13]), Profile::Minimal).unwrap();
        assert_eq!(minimal.unique_within(3).unwrap().codeword, [18, 11, 21, 13]);
        let open = oracle_correct(&rx([30, 7, 21, 13]), Profile::Unrestricted).unwrap();
        assert!(open.candidates.len() >= minimal.candidates.len());
        assert!(open.candidates.iter().any(|c| c.codeword == [18, 11, 21, 13]));
    }

    #[test]
    fn message_space_sizes() {
        let o = Oracle::new(5, Profile::Unrestricted).unwrap();
        assert_eq!(o.messages().len(), 16);
        let o = Oracle::new(5, Profile::Minimal).unwrap();
        assert_eq!(o.messages().len(), 14);
        let o = Oracle::new(7, Profile::Unrestricted).unwrap();
        assert_eq!(o.messages().len(), 2401);
    }

    #[test]
    fn refuses_large_orders() {
        assert!(matches!(Oracle::new(15, Profile::Minimal), Err(OracleError::TooLarge { .. })));
        assert!(Oracle::new(9, Profile::Minimal).is_ok());
        assert!(matches!(Oracle::new(13, Profile::Minimal), Err(OracleError::TooLarge { .. })));
    }

    #[test]
    fn encoding_matches_worked_example() {
        let o = Oracle::new(5, Profile::Minimal).unwrap();
        assert_eq!(o.encode(&[1, 2, 2, 1]), [18, 11, 21, 13]);
    }
}
