//! Fit-free codecs: fixed-precision numeric strings and single-precision byte tokens.
//!
//! The byte codec narrows to `f32` (round to nearest, ties to even) and emits
//! the four bytes least-significant first. Little-endian is the only order
//! under which `[147, 13, 224, 62]` reads back as `0x3EE00D93`, i.e.
//! 0.43760356..., which prints as `0.437604` at six decimals; the other order
//! gives `0x930DE03E`, a negative number of order 1e-27.

use std::fmt;

use crate::codec::{parse_special, special};
use crate::error::{Error, Result};

pub const DEFAULT_PRECISION: u32 = 6;
pub const MAX_PRECISION: u32 = 17;
/// Nominal token count for a numeric string; the real count depends on the
/// host tokenizer's subword vocabulary.
pub const NUMERIC_TOKENS_ESTIMATE: usize = 4;
pub const BYTE_TOKENS: usize = 4;

/// Fixed-point rendering with exactly `precision` fractional digits, rounding
/// ties to even.
pub fn encode_numeric(v: f64, precision: u32) -> Result<String> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::Domain(format!(
            "numeric encoding needs a finite non-negative value, got {v}"
        )));
    }
    if precision > MAX_PRECISION {
        return Err(Error::InvalidParameter(format!(
            "precision {precision} exceeds {MAX_PRECISION}"
        )));
    }
    // std formatting rounds the exact binary value half-to-even
    Ok(format!("{:.*}", precision as usize, v))
}

/// Parses `[0-9]+(\.[0-9]+)?`.
pub fn decode_numeric(s: &str) -> Result<f64> {
    let err = |offset, message: &str| Error::NumericParse {
        offset,
        message: message.to_string(),
    };
    let bytes = s.as_bytes();
    let int_len = bytes.iter().take_while(|b| b.is_ascii_digit()).count();
    if int_len == 0 {
        return Err(err(0, "expected a digit"));
    }
    match bytes.get(int_len) {
        None => {}
        Some(b'.') => {
            let frac = &bytes[int_len + 1..];
            let frac_len = frac.iter().take_while(|b| b.is_ascii_digit()).count();
            if frac_len == 0 {
                return Err(err(int_len + 1, "expected a digit after '.'"));
            }
            if frac_len != frac.len() {
                return Err(err(int_len + 1 + frac_len, "unexpected character"));
            }
        }
        Some(_) => return Err(err(int_len, "unexpected character")),
    }
    s.parse::<f64>().map_err(|e| err(0, &e.to_string()))
}

/// One of the 256 byte tokens, rendered `<|byte_NNN|>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ByteToken(pub u8);

impl ByteToken {
    pub fn literal(self) -> String {
        special("byte", self.0 as u64, 3)
    }

    pub fn parse(literal: &str) -> Result<Self> {
        parse_special(literal, "byte", 3)
            .and_then(|v| u8::try_from(v).ok())
            .map(ByteToken)
            .ok_or_else(|| Error::MalformedToken(literal.to_string()))
    }

    pub fn all() -> impl Iterator<Item = ByteToken> {
        (0..=255u8).map(ByteToken)
    }
}

impl fmt::Display for ByteToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<|byte_{:03}|>", self.0)
    }
}

pub fn encode_bytes(v: f64) -> Result<[ByteToken; 4]> {
    if !v.is_finite() {
        return Err(Error::Domain(format!("byte encoding needs a finite value, got {v}")));
    }
    let narrowed = v as f32;
    if !narrowed.is_finite() {
        return Err(Error::Domain(format!("{v} overflows single precision")));
    }
    Ok(encode_f32(narrowed))
}

/// Bit-exact encoding of an `f32`, including -0 and subnormals.
pub fn encode_f32(v: f32) -> [ByteToken; 4] {
    v.to_le_bytes().map(ByteToken)
}

pub fn decode_bytes(tokens: &[ByteToken]) -> Result<f32> {
    let bytes: [u8; 4] = match tokens {
        [a, b, c, d] => [a.0, b.0, c.0, d.0],
        _ => {
            return Err(Error::Arity {
                expected: BYTE_TOKENS,
                got: tokens.len(),
            })
        }
    };
    let v = f32::from_le_bytes(bytes);
    if !v.is_finite() {
        return Err(Error::DecodeRange(format!(
            "bytes {bytes:?} decode to non-finite {v}"
        )));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bytes(vals: [u8; 4]) -> [ByteToken; 4] {
        vals.map(ByteToken)
    }

    #[test]
    fn numeric_examples() {
        assert_eq!(encode_numeric(0.0, 6).unwrap(), "0.000000");
        assert_eq!(encode_numeric(0.4376036, 6).unwrap(), "0.437604");
        assert_eq!(encode_numeric(2.5, 0).unwrap(), "2");
        assert_eq!(encode_numeric(3.5, 0).unwrap(), "4");
        assert_eq!(encode_numeric(1e20, 2).unwrap(), "100000000000000000000.00");
        assert!(encode_numeric(-1.0, 6).is_err());
        assert!(encode_numeric(f64::INFINITY, 6).is_err());
        assert!(encode_numeric(1.0, 18).is_err());
    }

    #[test]
    fn numeric_parse() {
        assert_eq!(decode_numeric("0.437604").unwrap(), 0.437604);
        assert_eq!(decode_numeric("12").unwrap(), 12.0);
        let offset = |s| match decode_numeric(s) {
            Err(Error::NumericParse { offset, .. }) => offset,
            other => panic!("{s}: {other:?}"),
        };
        assert_eq!(offset("abc"), 0);
        assert_eq!(offset(""), 0);
        assert_eq!(offset("1."), 2);
        assert_eq!(offset("1.2x"), 3);
        assert_eq!(offset("-1"), 0);
        assert_eq!(offset("1e5"), 1);
    }

    #[test]
    fn byte_literals() {
        assert_eq!(ByteToken(147).literal(), "<|byte_147|>");
        assert_eq!(ByteToken(0).to_string(), "<|byte_000|>");
        assert_eq!(ByteToken::parse("<|byte_062|>").unwrap(), ByteToken(62));
        assert!(ByteToken::parse("<|byte_256|>").is_err());
        assert!(ByteToken::parse("<|byte_62|>").is_err());
        let all: std::collections::HashSet<_> = ByteToken::all().map(ByteToken::literal).collect();
        assert_eq!(all.len(), 256);
    }

    #[test]
    fn byte_examples() {
        assert_eq!(encode_bytes(0.0).unwrap(), bytes([0, 0, 0, 0]));
        let v = f32::from_bits(0x3EE0_0D93);
        assert_eq!(encode_bytes(v as f64).unwrap(), bytes([147, 13, 224, 62]));
        assert_eq!(encode_bytes(1.0).unwrap(), bytes([0, 0, 128, 63]));
        assert!(encode_bytes(f64::NAN).is_err());
        assert!(encode_bytes(1e300).is_err());
    }

    #[test]
    fn byte_decode_examples() {
        let v = decode_bytes(&bytes([147, 13, 224, 62])).unwrap();
        assert_eq!(encode_numeric(v as f64, 6).unwrap(), "0.437604");
        assert_eq!(decode_bytes(&bytes([0, 0, 0, 0])).unwrap(), 0.0);
        assert!(matches!(decode_bytes(&bytes([0, 0, 0, 0])[..3]), Err(Error::Arity { got: 3, .. })));
        // 0x7F800000 is +inf
        assert!(matches!(decode_bytes(&bytes([0, 0, 128, 127])), Err(Error::DecodeRange(_))));
    }

    #[test]
    fn big_endian_reading_does_not_match() {
        let be = f32::from_be_bytes([147, 13, 224, 62]);
        assert!(be < 0.0);
    }

    proptest! {
        #[test]
        fn byte_bijection(bits in any::<u32>()) {
            let v = f32::from_bits(bits);
            prop_assume!(v.is_finite());
            let back = decode_bytes(&encode_f32(v)).unwrap();
            prop_assert_eq!(back.to_bits(), bits);
        }

        #[test]
        fn numeric_round_trip(v in 0.0f64..1e6, p in 0u32..=9) {
            let back = decode_numeric(&encode_numeric(v, p).unwrap()).unwrap();
            // half a unit in the last place, plus the error of parsing the decimal back
            prop_assert!((back - v).abs() <= 0.5 * 10f64.powi(-(p as i32)) + 4.0 * f64::EPSILON * v.max(1.0));
        }
    }
}
