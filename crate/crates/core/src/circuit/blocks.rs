//! Comparators, equality, multiplexers and conditional swaps.
//!
//! All multi-bit operands are big-endian wire slices of equal width.

use super::{
    merge_sorted, waksman_network, waksman_switch_count, BooleanCircuit, CircuitBuilder,
    CircuitError, WireId,
};

/// `x > y` as unsigned big-endian, one AND per bit.
///
/// Carry chain from the least significant bit: `c' = x ^ ((x ^ c) & (y ^ c))`.
pub fn greater_than(b: &mut CircuitBuilder, x: &[WireId], y: &[WireId]) -> WireId {
    assert_eq!(x.len(), y.len());
    assert!(!x.is_empty());
    let mut bits = x.iter().zip(y).rev();
    let (&x0, &y0) = bits.next().unwrap();
    // With an initial carry of 0 the first step reduces to x0 & !y0 = x0 ^ (x0 & y0).
    let t = b.and(x0, y0);
    let mut carry = b.xor(x0, t);
    for (&xi, &yi) in bits {
        let p = b.xor(xi, carry);
        let q = b.xor(yi, carry);
        let t = b.and(p, q);
        carry = b.xor(xi, t);
    }
    carry
}

pub fn less_than(b: &mut CircuitBuilder, x: &[WireId], y: &[WireId]) -> WireId {
    greater_than(b, y, x)
}

/// AND over a list of wires as a balanced tree; `n - 1` ANDs.
pub fn and_all(b: &mut CircuitBuilder, wires: &[WireId]) -> WireId {
    match wires {
        [] => b.one(),
        [w] => *w,
        _ => {
            let (l, r) = wires.split_at(wires.len() / 2);
            let l = and_all(b, l);
            let r = and_all(b, r);
            b.and(l, r)
        }
    }
}

/// OR over a list of wires as a balanced tree; `n - 1` ANDs.
pub fn or_all(b: &mut CircuitBuilder, wires: &[WireId]) -> WireId {
    match wires {
        [] => b.zero(),
        [w] => *w,
        _ => {
            let (l, r) = wires.split_at(wires.len() / 2);
            let l = or_all(b, l);
            let r = or_all(b, r);
            b.or(l, r)
        }
    }
}

/// `x == y`: AND-tree over bitwise XNOR, `width - 1` ANDs.
pub fn equal(b: &mut CircuitBuilder, x: &[WireId], y: &[WireId]) -> WireId {
    assert_eq!(x.len(), y.len());
    let xnor: Vec<WireId> = x
        .iter()
        .zip(y)
        .map(|(&p, &q)| {
            let d = b.xor(p, q);
            b.not(d)
        })
        .collect();
    and_all(b, &xnor)
}

/// `x == value` for a public constant, big-endian over `x.len()` bits.
pub fn equal_const(b: &mut CircuitBuilder, x: &[WireId], value: u64) -> WireId {
    let n = x.len();
    let matches: Vec<WireId> = x
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let bit = (n - 1 - i) < 64 && value >> (n - 1 - i) & 1 == 1;
            if bit {
                w
            } else {
                b.not(w)
            }
        })
        .collect();
    and_all(b, &matches)
}

/// `s ? x1 : x0`, one AND per bit.
pub fn mux(b: &mut CircuitBuilder, s: WireId, x0: &[WireId], x1: &[WireId]) -> Vec<WireId> {
    assert_eq!(x0.len(), x1.len());
    x0.iter()
        .zip(x1)
        .map(|(&p, &q)| {
            let d = b.xor(p, q);
            let t = b.and(s, d);
            b.xor(p, t)
        })
        .collect()
}

/// Swaps `x` and `y` when `c` is set, one AND per bit.
pub fn cond_swap(
    b: &mut CircuitBuilder,
    c: WireId,
    x: &[WireId],
    y: &[WireId],
) -> (Vec<WireId>, Vec<WireId>) {
    assert_eq!(x.len(), y.len());
    let mut lo = Vec::with_capacity(x.len());
    let mut hi = Vec::with_capacity(x.len());
    for (&p, &q) in x.iter().zip(y) {
        let d = b.xor(p, q);
        let d = b.and(c, d);
        lo.push(b.xor(p, d));
        hi.push(b.xor(q, d));
    }
    (lo, hi)
}

fn binary_op(sigma: usize, f: impl FnOnce(&mut CircuitBuilder, &[WireId], &[WireId]) -> WireId) -> BooleanCircuit {
    assert!(sigma >= 1);
    let mut b = CircuitBuilder::new();
    let x = b.input(0, sigma);
    let y = b.input(1, sigma);
    let out = f(&mut b, &x, &y);
    b.output(&[out]);
    b.finish()
}

/// Owner 0 supplies `a`, owner 1 supplies `b`; output is `a < b`.
pub fn build_less_than(sigma: usize) -> BooleanCircuit {
    binary_op(sigma, less_than)
}

/// Owner 0 supplies `a`, owner 1 supplies `b`; output is `a == b`.
pub fn build_equality(sigma: usize) -> BooleanCircuit {
    binary_op(sigma, equal)
}

/// Owners 0, 1, 2 supply `s`, `x0`, `x1`.
pub fn build_mux(width: usize) -> BooleanCircuit {
    let mut b = CircuitBuilder::new();
    let s = b.input(0, 1)[0];
    let x0 = b.input(1, width);
    let x1 = b.input(2, width);
    let out = mux(&mut b, s, &x0, &x1);
    b.output(&out);
    b.finish()
}

/// Owners 0, 1, 2 supply `c`, `A`, `B`; outputs are the two records in order.
pub fn build_cond_swap(width: usize) -> BooleanCircuit {
    let mut b = CircuitBuilder::new();
    let c = b.input(0, 1)[0];
    let x = b.input(1, width);
    let y = b.input(2, width);
    let (lo, hi) = cond_swap(&mut b, c, &x, &y);
    b.output(&lo);
    b.output(&hi);
    b.finish()
}

/// Merges two ascending halves of `n` records. Owner 0 supplies all records,
/// each `key_bits` of key followed by `payload_bits` of payload.
pub fn build_bitonic_merger(
    n: usize,
    key_bits: usize,
    payload_bits: usize,
) -> Result<BooleanCircuit, CircuitError> {
    if n < 2 || !n.is_power_of_two() {
        return Err(CircuitError::NotPowerOfTwo(n));
    }
    let width = key_bits + payload_bits;
    let mut b = CircuitBuilder::new();
    let flat = b.input(0, n * width);
    let records: Vec<Vec<WireId>> = flat.chunks(width).map(<[WireId]>::to_vec).collect();
    let (lo, hi) = records.split_at(n / 2);
    let merged = merge_sorted(&mut b, lo.to_vec(), hi.to_vec(), key_bits);
    for r in &merged {
        b.output(r);
    }
    Ok(b.finish())
}

/// Waksman network over `n` records of `width` bits. Owner 0 supplies the
/// records, owner 1 the `n log n - n + 1` switch controls.
pub fn build_waksman(n: usize, width: usize) -> Result<BooleanCircuit, CircuitError> {
    if n == 0 || !n.is_power_of_two() {
        return Err(CircuitError::NotPowerOfTwo(n));
    }
    let mut b = CircuitBuilder::new();
    let flat = b.input(0, n * width);
    let controls = b.input(1, waksman_switch_count(n));
    let items: Vec<Vec<WireId>> = flat.chunks(width.max(1)).map(<[WireId]>::to_vec).collect();
    let out = waksman_network(&mut b, items, &controls);
    for r in &out {
        b.output(r);
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{bits_value, count_gates, eval_plaintext, word_bits, OwnerId};
    use std::collections::BTreeMap;

    fn run(c: &BooleanCircuit, ins: &[(OwnerId, Vec<bool>)]) -> Vec<bool> {
        let m: BTreeMap<_, _> = ins.iter().cloned().collect();
        eval_plaintext(c, &m).unwrap()
    }

    #[test]
    fn less_than_examples() {
        let c = build_less_than(4);
        assert_eq!(run(&c, &[(0, word_bits(2, 4)), (1, word_bits(5, 4))]), vec![true]);
        assert_eq!(run(&c, &[(0, word_bits(9, 4)), (1, word_bits(9, 4))]), vec![false]);
    }

    #[test]
    fn less_than_exhaustive_sigma4() {
        let c = build_less_than(4);
        for a in 0..16 {
            for b in 0..16 {
                let out = run(&c, &[(0, word_bits(a, 4)), (1, word_bits(b, 4))]);
                assert_eq!(out[0], a < b, "{a} < {b}");
            }
        }
    }

    #[test]
    fn equality_examples_and_exhaustive() {
        let c = build_equality(8);
        assert_eq!(run(&c, &[(0, word_bits(0x5a, 8)), (1, word_bits(0x5a, 8))]), vec![true]);
        assert_eq!(run(&c, &[(0, word_bits(0x5a, 8)), (1, word_bits(0x5b, 8))]), vec![false]);
        let c = build_equality(3);
        for a in 0..8 {
            for b in 0..8 {
                assert_eq!(run(&c, &[(0, word_bits(a, 3)), (1, word_bits(b, 3))])[0], a == b);
            }
        }
    }

    #[test]
    fn gate_bounds() {
        assert_eq!(count_gates(&build_equality(8)).and_count, 7);
        assert!(count_gates(&build_less_than(8)).and_count <= 8);
        assert_eq!(count_gates(&build_mux(5)).and_count, 5);
        assert_eq!(count_gates(&build_cond_swap(5)).and_count, 5);
    }

    #[test]
    fn equal_const_matches() {
        for v in 0..8u64 {
            let mut b = CircuitBuilder::new();
            let x = b.input(0, 3);
            let e = equal_const(&mut b, &x, v);
            b.output(&[e]);
            let c = b.finish();
            for x in 0..8u64 {
                assert_eq!(run(&c, &[(0, word_bits(x, 3))])[0], x == v);
            }
        }
    }

    #[test]
    fn mux_exhaustive_width2() {
        let c = build_mux(2);
        for s in 0..2 {
            for x0 in 0..4 {
                for x1 in 0..4 {
                    let out = run(&c, &[(0, vec![s == 1]), (1, word_bits(x0, 2)), (2, word_bits(x1, 2))]);
                    assert_eq!(bits_value(&out), if s == 1 { x1 } else { x0 });
                }
            }
        }
    }

    #[test]
    fn cond_swap_exhaustive_width2() {
        let c = build_cond_swap(2);
        for s in 0..2 {
            for x in 0..4 {
                for y in 0..4 {
                    let out = run(&c, &[(0, vec![s == 1]), (1, word_bits(x, 2)), (2, word_bits(y, 2))]);
                    let (lo, hi) = (bits_value(&out[..2]), bits_value(&out[2..]));
                    assert_eq!((lo, hi), if s == 1 { (y, x) } else { (x, y) });
                }
            }
        }
    }

    #[test]
    fn or_all_truth() {
        for n in 0..5usize {
            let mut b = CircuitBuilder::new();
            let x = b.input(0, n);
            let o = or_all(&mut b, &x);
            b.output(&[o]);
            let c = b.finish();
            for v in 0..(1u64 << n) {
                assert_eq!(run(&c, &[(0, word_bits(v, n))])[0], v != 0);
            }
        }
    }
}
