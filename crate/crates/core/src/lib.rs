//! The 1-Fibonacci error-correcting code.
//!
//! A 2×2 message matrix `M` is encoded as `C = M·Q^n` and transmitted
//! together with `det M`. Because `det Q^n = (-1)^n`, a mismatch between
//! `det C` and the transmitted determinant reveals corruption, and the fact
//! that every row ratio of a valid codeword lies between consecutive
//! Fibonacci ratios lets up to three corrupted entries be repaired.

pub mod channel;
pub mod codec;
pub mod correction;
pub mod diophantine;
pub mod fib;
pub mod int;
pub mod oracle;
pub mod redundancy;
pub mod wire;

pub use codec::{decode, encode, Codeword, Message, Profile};
pub use correction::{correct, CorrectionReport, Corrector, Diagnosis, ReceivedMatrix};
pub use fib::{fib, Mat2};
