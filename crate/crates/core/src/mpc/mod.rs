//! XOR-shared evaluation of Boolean circuits among N nodes with dealer triples.

pub mod frame;
pub mod harness;
pub mod node;
pub mod schedule;
pub mod transport;
pub mod triples;

use std::collections::BTreeMap;

use rand::RngCore;

use crate::circuit::{CircuitError, OwnerId};
use frame::Frame;

pub use harness::{eval_shared, run_local, LocalRun, RunOptions, TransportKind};
pub use node::{share_bits, InputPlan, NodeOutcome, Transcript};
pub use schedule::Schedule;
pub use triples::{deal_triples, TriplePool};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MpcError {
    /// A reactive open returned set flags; the payload lists their indices.
    #[error("inputs not sorted for parties {0:?}")]
    AbortUnsorted(Vec<usize>),
    #[error("triple pool exhausted: needed {needed}, {available} left")]
    TriplePoolExhausted { needed: usize, available: usize },
    #[error("transport failure: {0}")]
    TransportFailure(String),
    #[error("share blob is for epoch {got}, expected {expected}")]
    EpochMismatch { expected: u32, got: u32 },
    #[error("share blob belongs to node {got}, expected {expected}")]
    PartyMismatch { expected: NodeId, got: NodeId },
    #[error("corrupt share blob: {0}")]
    CorruptBlob(String),
    #[error("no input or stored share for owner {0}")]
    MissingInput(OwnerId),
    #[error("compute nodes returned different results")]
    InconsistentResult,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// One node's XOR share of a bit vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareVector {
    pub party: NodeId,
    pub bits: Vec<bool>,
}

/// Splits `bits` into `n` XOR shares.
pub fn share_input<R: RngCore + ?Sized>(bits: &[bool], n: usize, rng: &mut R) -> Vec<ShareVector> {
    share_bits(bits, n, rng)
        .into_iter()
        .enumerate()
        .map(|(party, bits)| ShareVector { party, bits })
        .collect()
}

pub fn reconstruct(shares: &[ShareVector]) -> Vec<bool> {
    let len = shares.first().map_or(0, |s| s.bits.len());
    let mut out = vec![false; len];
    for s in shares {
        assert_eq!(s.bits.len(), len, "share lengths differ");
        for (o, &b) in out.iter_mut().zip(&s.bits) {
            *o ^= b;
        }
    }
    out
}

/// Serializes a node's stored shares: a count, then one length-prefixed frame
/// per owner with `range_id` set to the owner id.
pub fn persist_shares(epoch: u32, node: NodeId, shares: &BTreeMap<OwnerId, Vec<bool>>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(shares.len() as u32).to_le_bytes());
    for (&owner, bits) in shares {
        let f = Frame {
            epoch,
            round: 0,
            sender: node as u32,
            range_id: owner,
            bits: bits.clone(),
        }
        .encode();
        out.extend_from_slice(&(f.len() as u32).to_le_bytes());
        out.extend_from_slice(&f);
    }
    out
}

pub fn load_shares(
    bytes: &[u8],
    epoch: u32,
    node: NodeId,
) -> Result<BTreeMap<OwnerId, Vec<bool>>, MpcError> {
    let corrupt = |m: &str| MpcError::CorruptBlob(m.to_string());
    let mut rest = bytes;
    let take_u32 = |rest: &mut &[u8]| -> Result<u32, MpcError> {
        if rest.len() < 4 {
            return Err(corrupt("truncated"));
        }
        let (h, t) = rest.split_at(4);
        *rest = t;
        Ok(u32::from_le_bytes(h.try_into().unwrap()))
    };
    let count = take_u32(&mut rest)?;
    let mut out = BTreeMap::new();
    for _ in 0..count {
        let len = take_u32(&mut rest)? as usize;
        if rest.len() < len {
            return Err(corrupt("truncated"));
        }
        let (f, t) = rest.split_at(len);
        rest = t;
        let frame = Frame::decode(f).map_err(|e| MpcError::CorruptBlob(e.to_string()))?;
        if frame.epoch != epoch {
            return Err(MpcError::EpochMismatch {
                expected: epoch,
                got: frame.epoch,
            });
        }
        if frame.sender as usize != node {
            return Err(MpcError::PartyMismatch {
                expected: node,
                got: frame.sender as usize,
            });
        }
        if out.insert(frame.range_id, frame.bits).is_some() {
            return Err(corrupt("duplicate owner"));
        }
    }
    if !rest.is_empty() {
        return Err(corrupt("trailing bytes"));
    }
    Ok(out)
}
