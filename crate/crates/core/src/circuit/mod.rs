//! Boolean circuit IR over {XOR, AND} and the oblivious building blocks.
//!
//! Wire 0 is the constant-one wire; NOT is XOR with it. Every gate writes a
//! fresh wire, and gates are kept in topological order. Input wires are grouped
//! by an owner id; the runtime decides which node supplies each group.

use std::collections::BTreeMap;

mod blocks;
mod merge;
mod text;
mod waksman;

pub use blocks::{
    build_bitonic_merger, build_cond_swap, build_equality, build_less_than, build_mux,
    build_waksman, and_all, cond_swap, equal, equal_const, greater_than, less_than, mux, or_all,
};
pub use merge::{compare_exchange, merge_sorted};
pub use text::{parse_circuit, write_circuit};
pub use waksman::{waksman_apply, waksman_network, waksman_route, waksman_switch_count};

pub type WireId = u32;

/// Owner id of an input group.
pub type OwnerId = u32;

pub const ONE: WireId = 0;

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error("missing input for owner {0}")]
    MissingInput(OwnerId),
    #[error("owner {owner} expects {expected} input bits, got {got}")]
    WidthMismatch {
        owner: OwnerId,
        expected: usize,
        got: usize,
    },
    #[error("input for unknown owner {0}")]
    UnknownOwner(OwnerId),
    #[error("record count {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("gate {gate} reads undefined wire {wire}")]
    Undefined { gate: usize, wire: WireId },
    #[error("malformed circuit: {0}")]
    Malformed(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Xor,
    And,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub a: WireId,
    pub b: WireId,
    pub out: WireId,
}

/// Wires opened mid-evaluation. Any set bit aborts the run and names the
/// index of the set bit (the compiler orders these as party indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReactiveOpen {
    /// Number of gates that must be evaluated before opening.
    pub after_gate: usize,
    pub wires: Vec<WireId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanCircuit {
    wire_count: u32,
    gates: Vec<Gate>,
    inputs: BTreeMap<OwnerId, Vec<WireId>>,
    outputs: Vec<WireId>,
    reactive: Vec<ReactiveOpen>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GateCounts {
    pub and_count: u64,
    pub xor_count: u64,
    /// Longest AND path, with reactive opens acting as barriers.
    pub depth_and: u32,
}

impl BooleanCircuit {
    pub fn new(
        wire_count: u32,
        gates: Vec<Gate>,
        inputs: BTreeMap<OwnerId, Vec<WireId>>,
        outputs: Vec<WireId>,
        reactive: Vec<ReactiveOpen>,
    ) -> Result<Self, CircuitError> {
        let c = BooleanCircuit {
            wire_count,
            gates,
            inputs,
            outputs,
            reactive,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn wire_count(&self) -> u32 {
        self.wire_count
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn inputs(&self) -> &BTreeMap<OwnerId, Vec<WireId>> {
        &self.inputs
    }

    pub fn input_width(&self, owner: OwnerId) -> Option<usize> {
        self.inputs.get(&owner).map(Vec::len)
    }

    pub fn outputs(&self) -> &[WireId] {
        &self.outputs
    }

    pub fn reactive(&self) -> &[ReactiveOpen] {
        &self.reactive
    }

    pub fn input_wire_count(&self) -> usize {
        self.inputs.values().map(Vec::len).sum()
    }

    /// Checks topological order, fresh outputs, and that outputs are driven.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let n = self.wire_count as usize;
        if n == 0 {
            return Err(CircuitError::Malformed("no constant wire".into()));
        }
        let mut defined = vec![false; n];
        defined[ONE as usize] = true;
        for wires in self.inputs.values() {
            for &w in wires {
                let slot = defined
                    .get_mut(w as usize)
                    .ok_or_else(|| CircuitError::Malformed(format!("input wire {w} out of range")))?;
                if *slot {
                    return Err(CircuitError::Malformed(format!("wire {w} defined twice")));
                }
                *slot = true;
            }
        }
        for (i, g) in self.gates.iter().enumerate() {
            for w in [g.a, g.b] {
                if !defined.get(w as usize).copied().unwrap_or(false) {
                    return Err(CircuitError::Undefined { gate: i, wire: w });
                }
            }
            let slot = defined
                .get_mut(g.out as usize)
                .ok_or_else(|| CircuitError::Malformed(format!("gate {i} output out of range")))?;
            if *slot {
                return Err(CircuitError::Malformed(format!("wire {} defined twice", g.out)));
            }
            *slot = true;
        }
        let mut produced_by = vec![usize::MAX; n];
        for (i, g) in self.gates.iter().enumerate() {
            produced_by[g.out as usize] = i;
        }
        for &w in &self.outputs {
            if !defined.get(w as usize).copied().unwrap_or(false) {
                return Err(CircuitError::Malformed(format!("output wire {w} is not driven")));
            }
        }
        let mut last = 0;
        for r in &self.reactive {
            if r.after_gate > self.gates.len() || r.after_gate < last {
                return Err(CircuitError::Malformed("reactive opens out of order".into()));
            }
            last = r.after_gate;
            for &w in &r.wires {
                if !defined.get(w as usize).copied().unwrap_or(false) {
                    return Err(CircuitError::Malformed(format!("reactive wire {w} undefined")));
                }
                let p = produced_by[w as usize];
                if p != usize::MAX && p >= r.after_gate {
                    return Err(CircuitError::Malformed(format!(
                        "reactive wire {w} is computed after its open point"
                    )));
                }
            }
        }
        Ok(())
    }

    /// AND level of every wire. Gates after a reactive open start at the level
    /// reached before it.
    pub fn and_levels(&self) -> Vec<u32> {
        let mut level = vec![0u32; self.wire_count as usize];
        let mut floor = 0u32;
        let mut max_level = 0u32;
        let mut barriers = self.reactive.iter().map(|r| r.after_gate).peekable();
        for (i, g) in self.gates.iter().enumerate() {
            while barriers.peek() == Some(&i) {
                barriers.next();
                floor = max_level;
            }
            let base = level[g.a as usize].max(level[g.b as usize]).max(floor);
            let l = match g.kind {
                GateKind::And => base + 1,
                GateKind::Xor => base,
            };
            level[g.out as usize] = l;
            max_level = max_level.max(l);
        }
        level
    }
}

/// Exact gate counts and AND-depth by scanning the gate list.
pub fn count_gates(c: &BooleanCircuit) -> GateCounts {
    let (mut and_count, mut xor_count) = (0, 0);
    for g in &c.gates {
        match g.kind {
            GateKind::And => and_count += 1,
            GateKind::Xor => xor_count += 1,
        }
    }
    let depth_and = c.and_levels().into_iter().max().unwrap_or(0);
    GateCounts {
        and_count,
        xor_count,
        depth_and,
    }
}

/// Counts for a sub-range of gates; wires produced outside the range count as level 0.
pub fn count_gate_range(c: &BooleanCircuit, range: std::ops::Range<usize>) -> GateCounts {
    let mut level: BTreeMap<WireId, u32> = BTreeMap::new();
    let mut counts = GateCounts::default();
    for g in &c.gates[range] {
        let base = level
            .get(&g.a)
            .copied()
            .unwrap_or(0)
            .max(level.get(&g.b).copied().unwrap_or(0));
        let l = match g.kind {
            GateKind::And => {
                counts.and_count += 1;
                base + 1
            }
            GateKind::Xor => {
                counts.xor_count += 1;
                base
            }
        };
        level.insert(g.out, l);
        counts.depth_and = counts.depth_and.max(l);
    }
    counts
}

/// Evaluates every wire in the clear.
pub fn eval_wires(
    c: &BooleanCircuit,
    inputs: &BTreeMap<OwnerId, Vec<bool>>,
) -> Result<Vec<bool>, CircuitError> {
    for owner in inputs.keys() {
        if !c.inputs.contains_key(owner) {
            return Err(CircuitError::UnknownOwner(*owner));
        }
    }
    let mut values = vec![false; c.wire_count as usize];
    values[ONE as usize] = true;
    for (owner, wires) in &c.inputs {
        let bits = inputs.get(owner).ok_or(CircuitError::MissingInput(*owner))?;
        if bits.len() != wires.len() {
            return Err(CircuitError::WidthMismatch {
                owner: *owner,
                expected: wires.len(),
                got: bits.len(),
            });
        }
        for (&w, &b) in wires.iter().zip(bits) {
            values[w as usize] = b;
        }
    }
    for g in &c.gates {
        let (a, b) = (values[g.a as usize], values[g.b as usize]);
        values[g.out as usize] = match g.kind {
            GateKind::Xor => a ^ b,
            GateKind::And => a & b,
        };
    }
    Ok(values)
}

/// Plaintext reference evaluation; returns the output bits.
pub fn eval_plaintext(
    c: &BooleanCircuit,
    inputs: &BTreeMap<OwnerId, Vec<bool>>,
) -> Result<Vec<bool>, CircuitError> {
    let values = eval_wires(c, inputs)?;
    Ok(c.outputs.iter().map(|&w| values[w as usize]).collect())
}

/// Bit-sliced evaluation of 64 independent instances: bit `j` of every word
/// belongs to instance `j`.
pub fn eval_lanes(
    c: &BooleanCircuit,
    inputs: &BTreeMap<OwnerId, Vec<u64>>,
) -> Result<Vec<u64>, CircuitError> {
    for owner in inputs.keys() {
        if !c.inputs.contains_key(owner) {
            return Err(CircuitError::UnknownOwner(*owner));
        }
    }
    let mut values = vec![0u64; c.wire_count as usize];
    values[ONE as usize] = u64::MAX;
    for (owner, wires) in &c.inputs {
        let lanes = inputs.get(owner).ok_or(CircuitError::MissingInput(*owner))?;
        if lanes.len() != wires.len() {
            return Err(CircuitError::WidthMismatch {
                owner: *owner,
                expected: wires.len(),
                got: lanes.len(),
            });
        }
        for (&w, &x) in wires.iter().zip(lanes) {
            values[w as usize] = x;
        }
    }
    for g in &c.gates {
        let (a, b) = (values[g.a as usize], values[g.b as usize]);
        values[g.out as usize] = match g.kind {
            GateKind::Xor => a ^ b,
            GateKind::And => a & b,
        };
    }
    Ok(c.outputs.iter().map(|&w| values[w as usize]).collect())
}

/// Incremental circuit construction.
///
/// A counting builder allocates wires and tallies gates without storing them,
/// which is how gate counts for very large parameter sets are measured.
pub struct CircuitBuilder {
    next_wire: u64,
    gates: Option<Vec<Gate>>,
    and_count: u64,
    xor_count: u64,
    zero: Option<WireId>,
    inputs: BTreeMap<OwnerId, Vec<WireId>>,
    outputs: Vec<WireId>,
    reactive: Vec<ReactiveOpen>,
}

impl Default for CircuitBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl CircuitBuilder {
    pub fn new() -> Self {
        CircuitBuilder {
            next_wire: 1,
            gates: Some(Vec::new()),
            and_count: 0,
            xor_count: 0,
            zero: None,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            reactive: Vec::new(),
        }
    }

    pub fn counting() -> Self {
        CircuitBuilder {
            gates: None,
            ..Self::new()
        }
    }

    fn fresh(&mut self) -> WireId {
        let w = self.next_wire;
        self.next_wire += 1;
        if self.gates.is_some() {
            WireId::try_from(w).expect("circuit exceeds 2^32 wires")
        } else {
            // Counting builds may exceed the id space; ids are never dereferenced.
            w as WireId
        }
    }

    /// Allocates `n` input wires for `owner`, appended to any existing group.
    pub fn input(&mut self, owner: OwnerId, n: usize) -> Vec<WireId> {
        let wires: Vec<WireId> = (0..n).map(|_| self.fresh()).collect();
        self.inputs.entry(owner).or_default().extend(&wires);
        wires
    }

    pub fn one(&self) -> WireId {
        ONE
    }

    pub fn zero(&mut self) -> WireId {
        if let Some(z) = self.zero {
            return z;
        }
        let z = self.xor(ONE, ONE);
        self.zero = Some(z);
        z
    }

    fn push(&mut self, kind: GateKind, a: WireId, b: WireId) -> WireId {
        let out = self.fresh();
        match kind {
            GateKind::And => self.and_count += 1,
            GateKind::Xor => self.xor_count += 1,
        }
        if let Some(gates) = &mut self.gates {
            gates.push(Gate { kind, a, b, out });
        }
        out
    }

    pub fn xor(&mut self, a: WireId, b: WireId) -> WireId {
        self.push(GateKind::Xor, a, b)
    }

    pub fn and(&mut self, a: WireId, b: WireId) -> WireId {
        self.push(GateKind::And, a, b)
    }

    pub fn not(&mut self, a: WireId) -> WireId {
        self.xor(a, ONE)
    }

    /// a OR b = a ^ b ^ ab.
    pub fn or(&mut self, a: WireId, b: WireId) -> WireId {
        let x = self.xor(a, b);
        let y = self.and(a, b);
        self.xor(x, y)
    }

    pub fn xor_vec(&mut self, a: &[WireId], b: &[WireId]) -> Vec<WireId> {
        assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(&x, &y)| self.xor(x, y)).collect()
    }

    pub fn output(&mut self, wires: &[WireId]) {
        self.outputs.extend_from_slice(wires);
    }

    /// Marks `wires` for opening once every gate built so far is evaluated.
    pub fn reactive_open(&mut self, wires: Vec<WireId>) {
        let after_gate = self.gate_count();
        self.reactive.push(ReactiveOpen { after_gate, wires });
    }

    pub fn gate_count(&self) -> usize {
        (self.and_count + self.xor_count) as usize
    }

    pub fn next_wire(&self) -> u64 {
        self.next_wire
    }

    /// AND and XOR totals so far.
    pub fn tally(&self) -> (u64, u64) {
        (self.and_count, self.xor_count)
    }

    pub fn is_counting(&self) -> bool {
        self.gates.is_none()
    }

    /// Finishes a storing builder. Panics on a counting builder.
    pub fn finish(self) -> BooleanCircuit {
        let gates = self.gates.expect("counting builders do not produce circuits");
        let wire_count = u32::try_from(self.next_wire).expect("wire count fits u32");
        BooleanCircuit::new(wire_count, gates, self.inputs, self.outputs, self.reactive)
            .expect("builder emits valid circuits")
    }
}

/// Helper for tests and small tools: inputs as little integers, MSB first per group.
pub fn word_bits(value: u64, width: usize) -> Vec<bool> {
    (0..width).rev().map(|i| value >> i & 1 == 1).collect()
}

pub fn bits_value(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| acc << 1 | b as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn single(kind: GateKind) -> BooleanCircuit {
        let mut b = CircuitBuilder::new();
        let x = b.input(0, 1)[0];
        let y = b.input(1, 1)[0];
        let out = match kind {
            GateKind::And => b.and(x, y),
            GateKind::Xor => b.xor(x, y),
        };
        b.output(&[out]);
        b.finish()
    }

    fn inputs(pairs: &[(OwnerId, Vec<bool>)]) -> BTreeMap<OwnerId, Vec<bool>> {
        pairs.iter().cloned().collect()
    }

    #[test]
    fn single_gates() {
        let i = inputs(&[(0, vec![true]), (1, vec![true])]);
        assert_eq!(eval_plaintext(&single(GateKind::Xor), &i).unwrap(), vec![false]);
        assert_eq!(eval_plaintext(&single(GateKind::And), &i).unwrap(), vec![true]);
    }

    #[test]
    fn input_errors() {
        let c = single(GateKind::And);
        assert_eq!(
            eval_plaintext(&c, &inputs(&[(0, vec![true])])),
            Err(CircuitError::MissingInput(1))
        );
        assert_eq!(
            eval_plaintext(&c, &inputs(&[(0, vec![true, false]), (1, vec![true])])),
            Err(CircuitError::WidthMismatch {
                owner: 0,
                expected: 1,
                got: 2
            })
        );
    }

    #[test]
    fn empty_circuit_counts() {
        let c = CircuitBuilder::new().finish();
        assert_eq!(count_gates(&c), GateCounts::default());
    }

    #[test]
    fn validate_rejects_forward_reference() {
        let gates = vec![Gate {
            kind: GateKind::And,
            a: 2,
            b: 0,
            out: 1,
        }];
        let err = BooleanCircuit::new(3, gates, BTreeMap::new(), vec![], vec![]).unwrap_err();
        assert_eq!(err, CircuitError::Undefined { gate: 0, wire: 2 });
    }

    #[test]
    fn reactive_barrier_extends_depth() {
        let mut b = CircuitBuilder::new();
        let x = b.input(0, 2);
        let f = b.and(x[0], x[1]);
        b.reactive_open(vec![f]);
        let g = b.and(x[0], x[1]);
        b.output(&[g]);
        let c = b.finish();
        assert_eq!(count_gates(&c).depth_and, 2);
    }

    /// Independent recursive evaluator used as an oracle for random circuits.
    fn eval_recursive(c: &BooleanCircuit, ins: &BTreeMap<OwnerId, Vec<bool>>, w: WireId) -> bool {
        if w == ONE {
            return true;
        }
        for (o, wires) in c.inputs() {
            if let Some(p) = wires.iter().position(|&x| x == w) {
                return ins[o][p];
            }
        }
        let g = c.gates().iter().find(|g| g.out == w).unwrap();
        let (a, b) = (eval_recursive(c, ins, g.a), eval_recursive(c, ins, g.b));
        match g.kind {
            GateKind::And => a & b,
            GateKind::Xor => a ^ b,
        }
    }

    #[test]
    fn random_circuits_match_recursive_evaluator() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let mut b = CircuitBuilder::new();
            let mut pool = b.input(0, 4);
            pool.extend(b.input(1, 4));
            pool.push(ONE);
            for _ in 0..50 {
                let x = pool[rng.gen_range(0..pool.len())];
                let y = pool[rng.gen_range(0..pool.len())];
                let w = if rng.gen() { b.and(x, y) } else { b.xor(x, y) };
                pool.push(w);
            }
            let outs: Vec<WireId> = pool[pool.len() - 8..].to_vec();
            b.output(&outs);
            let c = b.finish();
            let ins = inputs(&[
                (0, (0..4).map(|_| rng.gen()).collect()),
                (1, (0..4).map(|_| rng.gen()).collect()),
            ]);
            let fast = eval_plaintext(&c, &ins).unwrap();
            let slow: Vec<bool> = outs.iter().map(|&w| eval_recursive(&c, &ins, w)).collect();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn counting_builder_matches_storing_builder() {
        fn body(b: &mut CircuitBuilder) {
            let x = b.input(0, 8);
            let y = b.input(1, 8);
            let lt = less_than(b, &x, &y);
            let eq = equal(b, &x, &y);
            let o = b.or(lt, eq);
            b.output(&[o]);
        }
        let mut s = CircuitBuilder::new();
        body(&mut s);
        let mut c = CircuitBuilder::counting();
        body(&mut c);
        assert_eq!(s.tally(), c.tally());
        assert_eq!(s.next_wire(), c.next_wire());
    }

    #[test]
    fn lanes_match_scalar_evaluation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut b = CircuitBuilder::new();
        let x = b.input(0, 6);
        let y = b.input(1, 6);
        let lt = less_than(&mut b, &x, &y);
        let eq = equal(&mut b, &x, &y);
        let o = b.or(lt, eq);
        b.output(&[lt, eq, o]);
        let c = b.finish();
        let lanes: BTreeMap<OwnerId, Vec<u64>> =
            [(0, (0..6).map(|_| rng.gen()).collect()), (1, (0..6).map(|_| rng.gen()).collect())]
                .into_iter()
                .collect();
        let out = eval_lanes(&c, &lanes).unwrap();
        for j in 0..64 {
            let ins: BTreeMap<OwnerId, Vec<bool>> = lanes
                .iter()
                .map(|(&o, ws)| (o, ws.iter().map(|w| w >> j & 1 == 1).collect()))
                .collect();
            let scalar = eval_plaintext(&c, &ins).unwrap();
            let lane: Vec<bool> = out.iter().map(|w| w >> j & 1 == 1).collect();
            assert_eq!(lane, scalar);
        }
    }
}
