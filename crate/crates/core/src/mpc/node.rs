//! The per-node protocol: input sharing, layered evaluation, opens.

use std::collections::BTreeMap;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::frame::{range, Frame};
use super::schedule::{Schedule, Step};
use super::transport::Transport;
use super::triples::TriplePool;
use super::{MpcError, NodeId};
use crate::circuit::{BooleanCircuit, GateKind, OwnerId, ONE};

/// Who supplies each input group, and which input positions are already
/// shared among the compute nodes (for example, loaded from a previous epoch).
#[derive(Debug, Clone, Default)]
pub struct InputPlan {
    pub supplier: BTreeMap<OwnerId, NodeId>,
    pub preshared: BTreeMap<OwnerId, Vec<usize>>,
}

impl InputPlan {
    /// Fresh positions of an owner's input vector, in order.
    fn fresh_positions(&self, owner: OwnerId, width: usize) -> Vec<usize> {
        match self.preshared.get(&owner) {
            None => (0..width).collect(),
            Some(pre) => {
                let mut mask = vec![true; width];
                for &p in pre {
                    mask[p] = false;
                }
                (0..width).filter(|&i| mask[i]).collect()
            }
        }
    }

    fn owners_of(&self, node: NodeId) -> impl Iterator<Item = OwnerId> + '_ {
        self.supplier
            .iter()
            .filter(move |(_, &s)| s == node)
            .map(|(&o, _)| o)
    }

    fn suppliers(&self) -> Vec<NodeId> {
        let mut s: Vec<NodeId> = self.supplier.values().copied().collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// Static description of one protocol run shared by every node.
pub struct RunSpec<'a> {
    pub circuit: &'a BooleanCircuit,
    pub schedule: &'a Schedule,
    pub plan: &'a InputPlan,
    /// Compute nodes are `0..n_compute`.
    pub n_compute: usize,
    /// Nodes that receive the opened outputs without computing.
    pub result_nodes: Vec<NodeId>,
    pub epoch: u32,
    pub capture_view: bool,
}

/// Per-node communication counters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub node: NodeId,
    pub messages_sent: u64,
    pub bytes_sent: u64,
    pub bits_sent: u64,
    /// AND layers + reactive opens + the output open.
    pub rounds: u32,
    pub triples_consumed: u64,
    pub reactive_opens: u32,
    /// Messages sent in each AND layer.
    pub and_layer_messages: Vec<u32>,
    /// Payload bytes received during evaluation, when capture is enabled.
    #[serde(skip)]
    pub view: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct NodeOutcome {
    pub outputs: Vec<bool>,
    pub transcript: Transcript,
    /// This node's shares of every input group (compute nodes only).
    pub input_shares: BTreeMap<OwnerId, Vec<bool>>,
}

struct Link<'t> {
    transport: &'t mut dyn Transport,
    me: NodeId,
    epoch: u32,
    transcript: Transcript,
    capture: bool,
}

impl Link<'_> {
    fn send(&mut self, to: NodeId, round: u32, range_id: u32, bits: Vec<bool>) -> Result<(), MpcError> {
        let nbits = bits.len() as u64;
        let bytes = Frame {
            epoch: self.epoch,
            round,
            sender: self.me as u32,
            range_id,
            bits,
        }
        .encode();
        self.transcript.messages_sent += 1;
        self.transcript.bytes_sent += bytes.len() as u64;
        self.transcript.bits_sent += nbits;
        self.transport.send(to, bytes)
    }

    fn recv(&mut self, from: NodeId, round: u32, range_id: u32) -> Result<Vec<bool>, MpcError> {
        let frame = self.recv_any(from, round)?;
        if frame.range_id != range_id {
            return Err(MpcError::TransportFailure(format!(
                "node {from} sent range {} in round {round}, expected {range_id}",
                frame.range_id
            )));
        }
        Ok(frame.bits)
    }

    fn recv_any(&mut self, from: NodeId, round: u32) -> Result<Frame, MpcError> {
        let bytes = self.transport.recv(from)?;
        let frame = Frame::decode(&bytes)
            .map_err(|e| MpcError::TransportFailure(format!("frame from {from}: {e}")))?;
        if frame.epoch != self.epoch || frame.round != round || frame.sender as usize != from {
            return Err(MpcError::TransportFailure(format!(
                "out-of-sequence frame from {from}: epoch {} round {} sender {}",
                frame.epoch, frame.round, frame.sender
            )));
        }
        if self.capture {
            self.transcript.view.extend(bytes);
        }
        Ok(frame)
    }
}

fn random_bits<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.gen()).collect()
}

/// XOR-shares `bits` among `n` parties: `n - 1` random shares and a correction.
pub fn share_bits<R: RngCore + ?Sized>(bits: &[bool], n: usize, rng: &mut R) -> Vec<Vec<bool>> {
    assert!(n >= 1);
    let mut shares: Vec<Vec<bool>> = (0..n - 1).map(|_| random_bits(rng, bits.len())).collect();
    let mut last = bits.to_vec();
    for s in &shares {
        for (l, &x) in last.iter_mut().zip(s) {
            *l ^= x;
        }
    }
    shares.push(last);
    shares
}

/// Sends shares of every owner this node supplies. Compute nodes keep their
/// own share; other suppliers route the correction share to the last compute node.
fn distribute_inputs<R: RngCore + ?Sized>(
    spec: &RunSpec,
    link: &mut Link,
    own: &BTreeMap<OwnerId, Vec<bool>>,
    rng: &mut R,
) -> Result<BTreeMap<OwnerId, Vec<bool>>, MpcError> {
    let me = link.me;
    let n = spec.n_compute;
    let mut outgoing: Vec<Vec<bool>> = vec![Vec::new(); n];
    let mut kept = BTreeMap::new();
    for owner in spec.plan.owners_of(me) {
        let width = spec
            .circuit
            .input_width(owner)
            .ok_or(MpcError::Circuit(crate::circuit::CircuitError::UnknownOwner(owner)))?;
        let bits = own.get(&owner).ok_or(MpcError::MissingInput(owner))?;
        if bits.len() != width {
            return Err(MpcError::Circuit(crate::circuit::CircuitError::WidthMismatch {
                owner,
                expected: width,
                got: bits.len(),
            }));
        }
        let fresh: Vec<bool> = spec
            .plan
            .fresh_positions(owner, width)
            .into_iter()
            .map(|p| bits[p])
            .collect();
        let mut shares = share_bits(&fresh, n, rng);
        if me < n {
            // Keep the correction share for ourselves.
            shares.swap(me, n - 1);
            kept.insert(owner, std::mem::take(&mut shares[me]));
        }
        for (c, s) in shares.into_iter().enumerate() {
            if c != me {
                outgoing[c].extend(s);
            }
        }
    }
    if spec.plan.suppliers().contains(&me) {
        for (c, bits) in outgoing.into_iter().enumerate() {
            if c != me {
                link.send(c, 0, range::INPUT, bits)?;
            }
        }
    }
    Ok(kept)
}

/// Compute-node side of a run.
pub fn run_compute_node<R: RngCore + ?Sized>(
    spec: &RunSpec,
    transport: &mut dyn Transport,
    mut triples: TriplePool,
    rng: &mut R,
    own: &BTreeMap<OwnerId, Vec<bool>>,
    preshared: &BTreeMap<OwnerId, Vec<bool>>,
) -> Result<NodeOutcome, MpcError> {
    let me = transport.id();
    assert!(me < spec.n_compute, "node {me} is not a compute node");
    let n = spec.n_compute;
    let c = spec.circuit;
    let mut link = Link {
        transport,
        me,
        epoch: spec.epoch,
        transcript: Transcript {
            node: me,
            ..Transcript::default()
        },
        capture: spec.capture_view,
    };

    let kept = distribute_inputs(spec, &mut link, own, rng)?;
    let mut received: BTreeMap<NodeId, std::vec::IntoIter<bool>> = BTreeMap::new();
    for s in spec.plan.suppliers() {
        if s != me {
            received.insert(s, link.recv(s, 0, range::INPUT)?.into_iter());
        }
    }

    let mut w = vec![false; c.wire_count() as usize];
    w[ONE as usize] = me == 0;
    let mut input_shares = BTreeMap::new();
    for (&owner, wires) in c.inputs() {
        let supplier = *spec
            .plan
            .supplier
            .get(&owner)
            .ok_or(MpcError::MissingInput(owner))?;
        let fresh = spec.plan.fresh_positions(owner, wires.len());
        let fresh_bits: Vec<bool> = if supplier == me {
            kept[&owner].clone()
        } else {
            let it = received.get_mut(&supplier).unwrap();
            let v: Vec<bool> = it.by_ref().take(fresh.len()).collect();
            if v.len() != fresh.len() {
                return Err(MpcError::TransportFailure(format!("short input frame from {supplier}")));
            }
            v
        };
        let mut share = vec![false; wires.len()];
        for (&p, b) in fresh.iter().zip(fresh_bits) {
            share[p] = b;
        }
        if let Some(pre) = spec.plan.preshared.get(&owner) {
            let mine = preshared.get(&owner).ok_or(MpcError::MissingInput(owner))?;
            if mine.len() != pre.len() {
                return Err(MpcError::MissingInput(owner));
            }
            for (&p, &b) in pre.iter().zip(mine) {
                share[p] = b;
            }
        }
        for (&wire, &b) in wires.iter().zip(&share) {
            w[wire as usize] = b;
        }
        input_shares.insert(owner, share);
    }
    if received.values_mut().any(|it| it.next().is_some()) {
        return Err(MpcError::TransportFailure("oversized input frame".into()));
    }

    let others: Vec<NodeId> = (0..n).filter(|&p| p != me).collect();
    let mut round = 0u32;
    let gates = c.gates();
    for step in spec.schedule.steps() {
        match step {
            Step::Local(ids) => {
                for &i in ids {
                    let g = gates[i as usize];
                    debug_assert_eq!(g.kind, GateKind::Xor);
                    w[g.out as usize] = w[g.a as usize] ^ w[g.b as usize];
                }
            }
            Step::And(ids) => {
                round += 1;
                let k = ids.len();
                let t = triples.take(k)?;
                let mut masked = Vec::with_capacity(2 * k);
                for (j, &i) in ids.iter().enumerate() {
                    let g = gates[i as usize];
                    masked.push(w[g.a as usize] ^ triples.get(t.start + j).a);
                }
                for (j, &i) in ids.iter().enumerate() {
                    let g = gates[i as usize];
                    masked.push(w[g.b as usize] ^ triples.get(t.start + j).b);
                }
                let mut opened = masked.clone();
                for &p in &others {
                    link.send(p, round, range::AND_LAYER, masked.clone())?;
                }
                for &p in &others {
                    let theirs = link.recv(p, round, range::AND_LAYER)?;
                    if theirs.len() != opened.len() {
                        return Err(MpcError::TransportFailure(format!("bad AND batch from {p}")));
                    }
                    for (o, x) in opened.iter_mut().zip(theirs) {
                        *o ^= x;
                    }
                }
                for (j, &i) in ids.iter().enumerate() {
                    let g = gates[i as usize];
                    let tr = triples.get(t.start + j);
                    let (d, e) = (opened[j], opened[k + j]);
                    let mut z = tr.c ^ (d & tr.b) ^ (e & tr.a);
                    if me == 0 {
                        z ^= d & e;
                    }
                    w[g.out as usize] = z;
                }
                link.transcript.and_layer_messages.push(others.len() as u32);
            }
            Step::Open(k) => {
                round += 1;
                link.transcript.reactive_opens += 1;
                let wires = &c.reactive()[*k].wires;
                let flags = open(&mut link, &others, round, range::REACTIVE, wires, &w)?;
                let set: Vec<usize> = flags
                    .iter()
                    .enumerate()
                    .filter(|(_, &f)| f)
                    .map(|(i, _)| i)
                    .collect();
                if !set.is_empty() {
                    for &r in &spec.result_nodes {
                        link.send(r, round, range::ABORT, flags.clone())?;
                    }
                    return Err(MpcError::AbortUnsorted(set));
                }
            }
        }
    }
    round += 1;
    let outputs = open(&mut link, &others, round, range::OUTPUT, c.outputs(), &w)?;
    for &r in &spec.result_nodes {
        link.send(r, round, range::RESULT, outputs.clone())?;
    }
    let mut transcript = link.transcript;
    transcript.rounds = round;
    transcript.triples_consumed = triples.consumed() as u64;
    Ok(NodeOutcome {
        outputs,
        transcript,
        input_shares,
    })
}

/// Broadcasts this node's shares of `wires` and reconstructs them.
fn open(
    link: &mut Link,
    others: &[NodeId],
    round: u32,
    range_id: u32,
    wires: &[u32],
    w: &[bool],
) -> Result<Vec<bool>, MpcError> {
    let mine: Vec<bool> = wires.iter().map(|&x| w[x as usize]).collect();
    for &p in others {
        link.send(p, round, range_id, mine.clone())?;
    }
    let mut value = mine;
    for &p in others {
        let theirs = link.recv(p, round, range_id)?;
        if theirs.len() != value.len() {
            return Err(MpcError::TransportFailure(format!("bad open from {p}")));
        }
        for (v, x) in value.iter_mut().zip(theirs) {
            *v ^= x;
        }
    }
    Ok(value)
}

/// Input-only node: shares its inputs, then waits for the result from every
/// compute node and checks that they agree.
pub fn run_client_node<R: RngCore + ?Sized>(
    spec: &RunSpec,
    transport: &mut dyn Transport,
    rng: &mut R,
    own: &BTreeMap<OwnerId, Vec<bool>>,
) -> Result<NodeOutcome, MpcError> {
    let me = transport.id();
    let mut link = Link {
        transport,
        me,
        epoch: spec.epoch,
        transcript: Transcript {
            node: me,
            ..Transcript::default()
        },
        capture: spec.capture_view,
    };
    distribute_inputs(spec, &mut link, own, rng)?;
    if !spec.result_nodes.contains(&me) {
        return Ok(NodeOutcome {
            outputs: Vec::new(),
            transcript: link.transcript,
            input_shares: BTreeMap::new(),
        });
    }
    let mut result: Option<Vec<bool>> = None;
    let mut abort: Option<Vec<usize>> = None;
    for s in 0..spec.n_compute {
        let bytes = link.transport.recv(s)?;
        let frame = Frame::decode(&bytes)
            .map_err(|e| MpcError::TransportFailure(format!("frame from {s}: {e}")))?;
        if frame.epoch != spec.epoch || frame.sender as usize != s {
            return Err(MpcError::TransportFailure(format!("unexpected frame from {s}")));
        }
        match frame.range_id {
            range::ABORT => {
                abort = Some(
                    frame.bits.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect(),
                );
            }
            range::RESULT => match &result {
                Some(r) if *r != frame.bits => return Err(MpcError::InconsistentResult),
                _ => result = Some(frame.bits),
            },
            other => {
                return Err(MpcError::TransportFailure(format!("unexpected range {other} from {s}")))
            }
        }
    }
    if let Some(parties) = abort {
        return Err(MpcError::AbortUnsorted(parties));
    }
    Ok(NodeOutcome {
        outputs: result.unwrap_or_default(),
        transcript: link.transcript,
        input_shares: BTreeMap::new(),
    })
}
