//! Binary container for a single codeword.
//!
//! ```text
//! "FIBC" | version u8 | n u16be | k u32be | 5 × field | crc32 u32be
//! field = sign u8 (0 zero, 1 positive, 2 negative) | len u32be | magnitude (big-endian)
//! ```
//!
//! The five fields are `c1, c2, c3, c4, check`. The CRC-32 (IEEE) covers
//! every preceding byte.

use num_bigint::{BigInt, BigUint, Sign};
use thiserror::Error;

use crate::codec::Codeword;

pub const MAGIC: [u8; 4] = *b"FIBC";
pub const VERSION: u8 = 0x01;
const HEADER_LEN: usize = 4 + 1 + 2 + 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("bad magic bytes {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0:#04x}")]
    Version(u8),
    #[error("CRC mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Crc { stored: u32, computed: u32 },
    #[error("truncated input: needed {needed} bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("invalid sign byte {byte:#04x} in field {field}")]
    Sign { field: usize, byte: u8 },
    #[error("field {field} has sign {byte:#04x} but its magnitude is {len} bytes")]
    ZeroMismatch { field: usize, byte: u8, len: usize },
    #[error("{0} trailing bytes after the checksum")]
    Trailing(usize),
    #[error("order {0} does not fit in 16 bits")]
    OrderRange(u32),
    #[error("field magnitude of {0} bytes does not fit in a 32-bit length")]
    FieldTooLarge(usize),
}

/// A codeword plus the bitstream length it was packed from (0 if none).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireCodeword {
    pub codeword: Codeword,
    pub k: u32,
}

fn put_int(out: &mut Vec<u8>, v: &BigInt) -> Result<(), WireError> {
    let (sign, mag) = v.to_bytes_be();
    let (byte, mag) = match sign {
        Sign::NoSign => (0u8, Vec::new()),
        Sign::Plus => (1, mag),
        Sign::Minus => (2, mag),
    };
    let len = u32::try_from(mag.len()).map_err(|_| WireError::FieldTooLarge(mag.len()))?;
    out.push(byte);
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(&mag);
    Ok(())
}

pub fn serialize(w: &WireCodeword) -> Result<Vec<u8>, WireError> {
    let c = &w.codeword;
    let n = u16::try_from(c.order).map_err(|_| WireError::OrderRange(c.order))?;
    let mut out = Vec::with_capacity(64);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&n.to_be_bytes());
    out.extend_from_slice(&w.k.to_be_bytes());
    for v in c.entries.iter().chain(std::iter::once(&c.check)) {
        put_int(&mut out, v)?;
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_be_bytes());
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(WireError::Truncated { offset: self.pos, needed: n })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn int(&mut self, field: usize) -> Result<BigInt, WireError> {
        let byte = self.take(1)?[0];
        let len = self.u32()? as usize;
        let mag = BigUint::from_bytes_be(self.take(len)?);
        let sign = match byte {
            0 => Sign::NoSign,
            1 => Sign::Plus,
            2 => Sign::Minus,
            _ => return Err(WireError::Sign { field, byte }),
        };
        // zero must use sign 0 with an empty magnitude, and vice versa
        if (sign == Sign::NoSign) != (len == 0) || (len > 0 && mag == BigUint::default()) {
            return Err(WireError::ZeroMismatch { field, byte, len });
        }
        Ok(BigInt::from_biguint(sign, mag))
    }
}

/// Checks magic, version and CRC before touching any field.
pub fn deserialize(bytes: &[u8]) -> Result<WireCodeword, WireError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if magic != MAGIC {
        return Err(WireError::BadMagic(magic));
    }
    let version = r.take(1)?[0];
    if version != VERSION {
        return Err(WireError::Version(version));
    }
    if bytes.len() < HEADER_LEN + 4 {
        return Err(WireError::Truncated { offset: bytes.len(), needed: HEADER_LEN + 4 - bytes.len() });
    }
    let body = &bytes[..bytes.len() - 4];
    let stored = u32::from_be_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(WireError::Crc { stored, computed });
    }

    let mut r = Reader { bytes: body, pos: 5 };
    let order = u32::from(u16::from_be_bytes(r.take(2)?.try_into().unwrap()));
    let k = r.u32()?;
    let mut fields = Vec::with_capacity(5);
    for field in 1..=5 {
        fields.push(r.int(field)?);
    }
    if r.pos != body.len() {
        return Err(WireError::Trailing(body.len() - r.pos));
    }
    let check = fields.pop().unwrap();
    let entries: [BigInt; 4] = fields.try_into().unwrap();
    Ok(WireCodeword { codeword: Codeword { entries, order, check }, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(check: i64) -> WireCodeword {
        WireCodeword {
            codeword: Codeword { entries: [18, 11, 21, 13].map(BigInt::from), order: 5, check: BigInt::from(check) },
            k: 0,
        }
    }

    #[test]
    fn round_trip_worked_example() {
        let w = sample(-3);
        let bytes = serialize(&w).unwrap();
        assert_eq!(&bytes[..4], b"FIBC");
        assert_eq!(bytes[4], 1);
        assert_eq!(&bytes[5..7], &[0, 5]);
        assert_eq!(deserialize(&bytes).unwrap(), w);
    }

    #[test]
    fn zero_check_layout() {
        let bytes = serialize(&sample(0)).unwrap();
        // the check field sits right before the CRC: sign 0, length 0
        let tail = &bytes[bytes.len() - 9..bytes.len() - 4];
        assert_eq!(tail, &[0, 0, 0, 0, 0]);
    }

    #[test]
    fn crc_errors_are_reported_first() {
        let mut bytes = serialize(&sample(-3)).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0xff;
        assert!(matches!(deserialize(&bytes), Err(WireError::Crc { .. })));

        let mut bytes = serialize(&sample(-3)).unwrap();
        bytes[20] ^= 0x01;
        assert!(matches!(deserialize(&bytes), Err(WireError::Crc { .. })));
    }

    #[test]
    fn header_errors() {
        let mut bytes = serialize(&sample(-3)).unwrap();
        bytes[0] = b'X';
        assert!(matches!(deserialize(&bytes), Err(WireError::BadMagic(_))));
        let mut bytes = serialize(&sample(-3)).unwrap();
        bytes[4] = 2;
        assert_eq!(deserialize(&bytes), Err(WireError::Version(2)));
        assert!(matches!(deserialize(b"FIB"), Err(WireError::Truncated { .. })));
        assert!(matches!(deserialize(b"FIBC\x01\x00"), Err(WireError::Truncated { .. })));
    }

    #[test]
    fn inconsistent_field_is_rejected() {
        // sign says positive, length zero; CRC recomputed so the field check is reached
        let mut body = serialize(&sample(0)).unwrap();
        body.truncate(body.len() - 4);
        let sign_at = body.len() - 5;
        body[sign_at] = 1;
        let crc = crc32fast::hash(&body);
        body.extend_from_slice(&crc.to_be_bytes());
        assert!(matches!(deserialize(&body), Err(WireError::ZeroMismatch { field: 5, .. })));
    }

    #[test]
    fn order_must_fit() {
        let mut w = sample(1);
        w.codeword.order = 70_000;
        assert_eq!(serialize(&w), Err(WireError::OrderRange(70_000)));
    }

    proptest! {
        #[test]
        fn round_trip(e in proptest::array::uniform4(any::<i64>()), check in any::<i64>(), n in 0u32..=u16::MAX as u32, k in any::<u32>(), big in 0u32..300) {
            let mut entries = e.map(BigInt::from);
            entries[0] <<= big;
            let w = WireCodeword { codeword: Codeword { entries, order: n, check: BigInt::from(check) }, k };
            let bytes = serialize(&w).unwrap();
            prop_assert_eq!(deserialize(&bytes).unwrap(), w);
        }
    }
}
