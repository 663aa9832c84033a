//! Oblivious merging of sorted record lists.
//!
//! A record is a wire vector whose first `key_bits` wires are its big-endian
//! sort key. Two ascending lists are laid out as a bitonic sequence
//! `a ++ [+inf; pad] ++ reverse(b)` of power-of-two length and fed through a
//! bitonic merger. The `+inf` fillers are known at compile time, so any
//! compare-exchange touching one is resolved by routing instead of gates.

use super::{cond_swap, less_than, CircuitBuilder, WireId};

/// Ascending compare-exchange on whole records.
pub fn compare_exchange(
    b: &mut CircuitBuilder,
    x: &[WireId],
    y: &[WireId],
    key_bits: usize,
) -> (Vec<WireId>, Vec<WireId>) {
    let swap = less_than(b, &y[..key_bits], &x[..key_bits]);
    cond_swap(b, swap, x, y)
}

fn bitonic_merge(
    b: &mut CircuitBuilder,
    slots: &mut [Option<Vec<WireId>>],
    key_bits: usize,
) {
    let n = slots.len();
    if n < 2 {
        return;
    }
    let h = n / 2;
    for i in 0..h {
        match (slots[i].take(), slots[i + h].take()) {
            (Some(x), Some(y)) => {
                let (lo, hi) = compare_exchange(b, &x, &y, key_bits);
                slots[i] = Some(lo);
                slots[i + h] = Some(hi);
            }
            (None, Some(y)) => slots[i] = Some(y),
            (x, None) => slots[i] = x,
        }
    }
    let (lo, hi) = slots.split_at_mut(h);
    bitonic_merge(b, lo, key_bits);
    bitonic_merge(b, hi, key_bits);
}

/// Merges two ascending record lists into one ascending list.
///
/// Equal keys may come out in either order.
pub fn merge_sorted(
    b: &mut CircuitBuilder,
    a: Vec<Vec<WireId>>,
    c: Vec<Vec<WireId>>,
    key_bits: usize,
) -> Vec<Vec<WireId>> {
    if a.is_empty() {
        return c;
    }
    if c.is_empty() {
        return a;
    }
    let total = a.len() + c.len();
    let p = total.next_power_of_two();
    let mut slots: Vec<Option<Vec<WireId>>> = Vec::with_capacity(p);
    slots.extend(a.into_iter().map(Some));
    slots.extend(std::iter::repeat_with(|| None).take(p - total));
    slots.extend(c.into_iter().rev().map(Some));
    bitonic_merge(b, &mut slots, key_bits);
    slots
        .into_iter()
        .take(total)
        .map(|s| s.expect("fillers sort to the top"))
        .collect()
}
