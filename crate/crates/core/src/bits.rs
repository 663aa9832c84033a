//! Fixed-width unsigned values and bit-vector helpers.
//!
//! Every comparison key, identifier key, and dummy value in the protocol is a
//! [`Word`]: an unsigned integer of a fixed bit width stored big-endian. Circuit
//! wires see words most-significant bit first.

use std::fmt;

use rand::Rng;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WordError {
    #[error("bit width must be at least 1")]
    ZeroWidth,
    #[error("invalid hex for a {bits}-bit word: {input:?}")]
    BadHex { bits: u32, input: String },
    #[error("value does not fit in {bits} bits")]
    Overflow { bits: u32 },
}

/// An unsigned integer of exactly `bits` bits, big-endian.
///
/// The value lives in the low `bits` bits of `ceil(bits / 8)` bytes; unused high
/// bits of the first byte are always zero, so byte order equals numeric order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    bits: u32,
    bytes: Vec<u8>,
}

fn byte_len(bits: u32) -> usize {
    bits.div_ceil(8) as usize
}

fn top_mask(bits: u32) -> u8 {
    match bits % 8 {
        0 => 0xff,
        r => (1u8 << r) - 1,
    }
}

impl Word {
    pub fn zero(bits: u32) -> Self {
        assert!(bits > 0, "zero-width word");
        Word {
            bits,
            bytes: vec![0; byte_len(bits)],
        }
    }

    pub fn from_u64(value: u64, bits: u32) -> Result<Self, WordError> {
        if bits == 0 {
            return Err(WordError::ZeroWidth);
        }
        if bits < 64 && value >> bits != 0 {
            return Err(WordError::Overflow { bits });
        }
        let mut w = Word::zero(bits);
        let n = w.bytes.len();
        for (i, b) in w.bytes.iter_mut().enumerate() {
            let shift = 8 * (n - 1 - i);
            *b = if shift < 64 { (value >> shift) as u8 } else { 0 };
        }
        Ok(w)
    }

    /// Takes the first `bits` bits of `data` (most significant first).
    pub fn from_prefix_bits(data: &[u8], bits: u32) -> Result<Self, WordError> {
        if bits == 0 {
            return Err(WordError::ZeroWidth);
        }
        if data.len() * 8 < bits as usize {
            return Err(WordError::Overflow { bits });
        }
        let bools: Vec<bool> = (0..bits as usize)
            .map(|i| data[i / 8] >> (7 - i % 8) & 1 == 1)
            .collect();
        Ok(Word::from_bits(&bools))
    }

    /// Builds a word from big-endian bits; width is the slice length.
    pub fn from_bits(bits: &[bool]) -> Self {
        let width = bits.len() as u32;
        let mut w = Word::zero(width);
        let n = w.bytes.len();
        for (i, &bit) in bits.iter().rev().enumerate() {
            if bit {
                w.bytes[n - 1 - i / 8] |= 1 << (i % 8);
            }
        }
        w
    }

    pub fn random<R: Rng + ?Sized>(bits: u32, rng: &mut R) -> Self {
        let mut w = Word::zero(bits);
        rng.fill_bytes(&mut w.bytes);
        w.bytes[0] &= top_mask(bits);
        w
    }

    /// Uniform over all non-zero `bits`-bit values.
    pub fn random_nonzero<R: Rng + ?Sized>(bits: u32, rng: &mut R) -> Self {
        loop {
            let w = Word::random(bits, rng);
            if !w.is_zero() {
                return w;
            }
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn is_zero(&self) -> bool {
        self.bytes.iter().all(|&b| b == 0)
    }

    /// Big-endian bit vector of length `bits`.
    pub fn to_bits(&self) -> Vec<bool> {
        let n = self.bytes.len();
        (0..self.bits as usize)
            .rev()
            .map(|i| self.bytes[n - 1 - i / 8] >> (i % 8) & 1 == 1)
            .collect()
    }

    /// Low 64 bits of the value.
    pub fn low_u64(&self) -> u64 {
        self.bytes
            .iter()
            .rev()
            .take(8)
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | (b as u64) << (8 * i))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    pub fn from_hex(s: &str, bits: u32) -> Result<Self, WordError> {
        if bits == 0 {
            return Err(WordError::ZeroWidth);
        }
        let bad = || WordError::BadHex {
            bits,
            input: s.to_string(),
        };
        let bytes = hex::decode(s.trim()).map_err(|_| bad())?;
        if bytes.len() != byte_len(bits) || bytes[0] & !top_mask(bits) != 0 {
            return Err(bad());
        }
        Ok(Word { bits, bytes })
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word<{}>({})", self.bits, self.to_hex())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Packs bools LSB-first into bytes.
pub fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

pub fn unpack_bits(bytes: &[u8], len: usize) -> Vec<bool> {
    (0..len).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect()
}

/// `ceil(log2(n))` for `n >= 1`.
pub fn ceil_log2(n: u64) -> u32 {
    assert!(n > 0);
    64 - (n - 1).leading_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn u64_roundtrip_and_order() {
        let a = Word::from_u64(2, 4).unwrap();
        let b = Word::from_u64(5, 4).unwrap();
        assert!(a < b);
        assert_eq!(a.to_bits(), vec![false, false, true, false]);
        assert_eq!(Word::from_bits(&b.to_bits()), b);
        assert_eq!(b.low_u64(), 5);
    }

    #[test]
    fn overflow_rejected() {
        assert_eq!(Word::from_u64(16, 4), Err(WordError::Overflow { bits: 4 }));
        assert!(Word::from_hex("1f", 4).is_err());
        assert_eq!(Word::from_hex("0f", 4).unwrap().low_u64(), 15);
    }

    #[test]
    fn prefix_takes_leading_bits() {
        let w = Word::from_prefix_bits(&[0xab, 0xcd], 12).unwrap();
        assert_eq!(w.low_u64(), 0xabc);
        let w = Word::from_prefix_bits(&[0xab, 0xcd], 16).unwrap();
        assert_eq!(w.to_hex(), "abcd");
    }

    #[test]
    fn random_respects_width() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let w = Word::random_nonzero(3, &mut rng);
            assert!(w.low_u64() >= 1 && w.low_u64() < 8);
        }
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(9), 4);
    }

    proptest! {
        #[test]
        fn bits_and_hex_agree(v in any::<u64>(), bits in 1u32..=64) {
            let v = if bits < 64 { v & ((1u64 << bits) - 1) } else { v };
            let w = Word::from_u64(v, bits).unwrap();
            prop_assert_eq!(w.low_u64(), v);
            prop_assert_eq!(Word::from_bits(&w.to_bits()), w.clone());
            prop_assert_eq!(Word::from_hex(&w.to_hex(), bits).unwrap(), w);
        }

        #[test]
        fn pack_unpack(bits in proptest::collection::vec(any::<bool>(), 0..100)) {
            prop_assert_eq!(unpack_bits(&pack_bits(&bits), bits.len()), bits);
        }
    }
}
