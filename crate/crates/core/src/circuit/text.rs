//! Line-oriented text form of a circuit.
//!
//! ```text
//! <wires> <gates> <input wires> <output wires>
//! XOR <a> <b> <out>
//! AND <a> <b> <out>
//! ...
//! INPUT <owner> <wire>...
//! OPEN <after_gate> <wire>...
//! OUTPUT <wire>...
//! ```
//!
//! The gate lines come first, then the input map, reactive opens and the
//! output list. Blank lines and lines starting with `#` are ignored.
//! Round-trips are bit-exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{BooleanCircuit, CircuitError, Gate, GateKind, OwnerId, ReactiveOpen, WireId};

fn push_list(s: &mut String, head: &str, wires: &[WireId]) {
    s.push_str(head);
    for w in wires {
        let _ = write!(s, " {w}");
    }
    s.push('\n');
}

pub fn write_circuit(c: &BooleanCircuit) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} {} {} {}",
        c.wire_count(),
        c.gates().len(),
        c.input_wire_count(),
        c.outputs().len()
    );
    for g in c.gates() {
        let op = match g.kind {
            GateKind::Xor => "XOR",
            GateKind::And => "AND",
        };
        let _ = writeln!(s, "{op} {} {} {}", g.a, g.b, g.out);
    }
    for (owner, wires) in c.inputs() {
        push_list(&mut s, &format!("INPUT {owner}"), wires);
    }
    for r in c.reactive() {
        push_list(&mut s, &format!("OPEN {}", r.after_gate), &r.wires);
    }
    push_list(&mut s, "OUTPUT", c.outputs());
    s
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, CircuitError> {
    let tok = tok.ok_or_else(|| CircuitError::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| CircuitError::Parse {
        line,
        msg: format!("bad {what} {tok:?}"),
    })
}

fn wire_list<'a>(toks: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec<WireId>, CircuitError> {
    toks.map(|t| num(Some(t), line, "wire")).collect()
}

pub fn parse_circuit(text: &str) -> Result<BooleanCircuit, CircuitError> {
    let mut header: Option<[usize; 4]> = None;
    let mut gates = Vec::new();
    let mut inputs: BTreeMap<OwnerId, Vec<WireId>> = BTreeMap::new();
    let mut outputs: Option<Vec<WireId>> = None;
    let mut reactive = Vec::new();
    let mut in_trailer = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |msg: &str| CircuitError::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut toks = trimmed.split_ascii_whitespace();
        if header.is_none() {
            let mut h = [0usize; 4];
            for (slot, what) in h.iter_mut().zip(["wire count", "gate count", "input count", "output count"]) {
                *slot = num(toks.next(), line, what)?;
            }
            if toks.next().is_some() {
                return Err(err("trailing tokens"));
            }
            header = Some(h);
            continue;
        }
        let op = toks.next().unwrap();
        match op {
            "XOR" | "AND" => {
                if in_trailer {
                    return Err(err("gate after the input/output section"));
                }
                let kind = if op == "XOR" { GateKind::Xor } else { GateKind::And };
                let a = num(toks.next(), line, "wire")?;
                let b = num(toks.next(), line, "wire")?;
                let out = num(toks.next(), line, "wire")?;
                gates.push(Gate { kind, a, b, out });
            }
            "INPUT" => {
                in_trailer = true;
                let owner: OwnerId = num(toks.next(), line, "owner")?;
                if inputs.contains_key(&owner) {
                    return Err(err("duplicate input owner"));
                }
                inputs.insert(owner, wire_list(toks.by_ref(), line)?);
            }
            "OPEN" => {
                in_trailer = true;
                let after_gate: usize = num(toks.next(), line, "gate index")?;
                reactive.push(ReactiveOpen {
                    after_gate,
                    wires: wire_list(toks.by_ref(), line)?,
                });
            }
            "OUTPUT" => {
                in_trailer = true;
                if outputs.is_some() {
                    return Err(err("duplicate output line"));
                }
                outputs = Some(wire_list(toks.by_ref(), line)?);
            }
            other => return Err(err(&format!("unknown directive {other:?}"))),
        }
        if toks.next().is_some() {
            return Err(err("trailing tokens"));
        }
    }
    let [wires, n_gates, n_in, n_out] = header.ok_or(CircuitError::Parse {
        line: 0,
        msg: "empty input".into(),
    })?;
    let outputs = outputs.unwrap_or_default();
    let got_in: usize = inputs.values().map(Vec::len).sum();
    if gates.len() != n_gates || got_in != n_in || outputs.len() != n_out {
        return Err(CircuitError::Malformed(format!(
            "header declares {n_gates} gates, {n_in} inputs, {n_out} outputs; found {}, {got_in}, {}",
            gates.len(),
            outputs.len()
        )));
    }
    let wires = u32::try_from(wires).map_err(|_| CircuitError::Malformed("too many wires".into()))?;
    BooleanCircuit::new(wires, gates, inputs, outputs, reactive)
}
