//! Wire framing for protocol messages and share blobs.
//!
//! ```text
//! version u8 | epoch u32 | round u32 | sender u32 | range_id u32 | nbits u32 | payload | crc32 u32
//! ```
//!
//! Integers are little-endian; the payload packs `nbits` bits LSB-first; the
//! CRC-32 covers every preceding byte.

use crate::bits::{pack_bits, unpack_bits};

pub const FRAME_VERSION: u8 = 1;
const HEADER_LEN: usize = 1 + 4 * 5;

/// Range ids used by protocol messages.
pub mod range {
    pub const INPUT: u32 = 1;
    pub const AND_LAYER: u32 = 2;
    pub const REACTIVE: u32 = 3;
    pub const OUTPUT: u32 = 4;
    pub const RESULT: u32 = 5;
    pub const ABORT: u32 = 6;
    pub const HANDSHAKE: u32 = 7;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub epoch: u32,
    pub round: u32,
    pub sender: u32,
    pub range_id: u32,
    pub bits: Vec<bool>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame truncated")]
    Truncated,
    #[error("unsupported frame version {0}")]
    Version(u8),
    #[error("frame checksum mismatch")]
    Checksum,
    #[error("frame length does not match its bit count")]
    Length,
}

impl Frame {
    pub fn encode(&self) -> Vec<u8> {
        let payload = pack_bits(&self.bits);
        let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + 4);
        out.push(FRAME_VERSION);
        for x in [self.epoch, self.round, self.sender, self.range_id] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        let nbits = u32::try_from(self.bits.len()).expect("frame payload below 2^32 bits");
        out.extend_from_slice(&nbits.to_le_bytes());
        out.extend_from_slice(&payload);
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Frame, FrameError> {
        if bytes.len() < HEADER_LEN + 4 {
            return Err(FrameError::Truncated);
        }
        let (body, crc) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().unwrap()) {
            return Err(FrameError::Checksum);
        }
        if body[0] != FRAME_VERSION {
            return Err(FrameError::Version(body[0]));
        }
        let word = |i: usize| u32::from_le_bytes(body[1 + 4 * i..5 + 4 * i].try_into().unwrap());
        let nbits = word(4) as usize;
        let payload = &body[HEADER_LEN..];
        if payload.len() != nbits.div_ceil(8) {
            return Err(FrameError::Length);
        }
        Ok(Frame {
            epoch: word(0),
            round: word(1),
            sender: word(2),
            range_id: word(3),
            bits: unpack_bits(payload, nbits),
        })
    }
}
