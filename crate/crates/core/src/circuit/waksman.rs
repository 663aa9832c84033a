//! Waksman permutation networks for any number of inputs.
//!
//! Layout for `n` inputs (recursively): `floor(n/2)` input switches pairing
//! inputs `(2k, 2k+1)`, a top subnetwork of size `floor(n/2)`, a bottom
//! subnetwork of size `ceil(n/2)`, then the output switches. For even `n` the
//! last output pair is wired straight (top to `n-2`, bottom to `n-1`); for odd
//! `n` the last input and last output attach directly to the bottom network.
//! The switch count is `W(n) = W(floor(n/2)) + W(ceil(n/2)) + n - 1`, which is
//! `n log2 n - n + 1` for powers of two.
//!
//! Control bits are ordered: input switches, top subnetwork, bottom
//! subnetwork, output switches. A set control bit crosses its switch.

use super::{cond_swap, CircuitBuilder, WireId};

pub fn waksman_switch_count(n: usize) -> usize {
    if n <= 1 {
        return 0;
    }
    waksman_switch_count(n / 2) + waksman_switch_count(n - n / 2) + n - 1
}

fn output_switches(n: usize) -> usize {
    if n % 2 == 0 {
        n / 2 - 1
    } else {
        n / 2
    }
}

/// Builds the network over `items`, consuming `controls` in canonical order.
pub fn waksman_network(
    b: &mut CircuitBuilder,
    items: Vec<Vec<WireId>>,
    controls: &[WireId],
) -> Vec<Vec<WireId>> {
    let n = items.len();
    assert_eq!(controls.len(), waksman_switch_count(n), "control count");
    if n <= 1 {
        return items;
    }
    let h = n / 2;
    let (in_ctl, rest) = controls.split_at(h);
    let (top_ctl, rest) = rest.split_at(waksman_switch_count(h));
    let (bot_ctl, out_ctl) = rest.split_at(waksman_switch_count(n - h));

    let mut top = Vec::with_capacity(h);
    let mut bottom = Vec::with_capacity(n - h);
    let mut it = items.into_iter();
    for &c in in_ctl {
        let x = it.next().unwrap();
        let y = it.next().unwrap();
        let (t, u) = cond_swap(b, c, &x, &y);
        top.push(t);
        bottom.push(u);
    }
    bottom.extend(it);

    let top = waksman_network(b, top, top_ctl);
    let bottom = waksman_network(b, bottom, bot_ctl);

    let mut out = Vec::with_capacity(n);
    let mut top = top.into_iter();
    let mut bottom = bottom.into_iter();
    for &c in out_ctl {
        let (x, y) = cond_swap(b, c, &top.next().unwrap(), &bottom.next().unwrap());
        out.push(x);
        out.push(y);
    }
    out.extend(top);
    out.extend(bottom);
    out
}

/// Applies the network to plain values; the reference semantics of
/// [`waksman_network`].
pub fn waksman_apply<T: Clone>(items: &[T], controls: &[bool]) -> Vec<T> {
    let n = items.len();
    assert_eq!(controls.len(), waksman_switch_count(n), "control count");
    if n <= 1 {
        return items.to_vec();
    }
    let h = n / 2;
    let (in_ctl, rest) = controls.split_at(h);
    let (top_ctl, rest) = rest.split_at(waksman_switch_count(h));
    let (bot_ctl, out_ctl) = rest.split_at(waksman_switch_count(n - h));

    let mut top = Vec::with_capacity(h);
    let mut bottom = Vec::with_capacity(n - h);
    for (k, &c) in in_ctl.iter().enumerate() {
        let (x, y) = (&items[2 * k], &items[2 * k + 1]);
        let (t, u) = if c { (y, x) } else { (x, y) };
        top.push(t.clone());
        bottom.push(u.clone());
    }
    if n % 2 == 1 {
        bottom.push(items[n - 1].clone());
    }
    let top = waksman_apply(&top, top_ctl);
    let bottom = waksman_apply(&bottom, bot_ctl);
    let mut out = Vec::with_capacity(n);
    for (j, &c) in out_ctl.iter().enumerate() {
        let (x, y) = (&top[j], &bottom[j]);
        let (p, q) = if c { (y, x) } else { (x, y) };
        out.push(p.clone());
        out.push(q.clone());
    }
    out.extend_from_slice(&top[out_ctl.len()..]);
    out.extend_from_slice(&bottom[out_ctl.len()..]);
    out
}

/// Control bits realizing `dest`, where input `i` must land at output `dest[i]`.
///
/// Panics if `dest` is not a permutation.
pub fn waksman_route(dest: &[usize]) -> Vec<bool> {
    let n = dest.len();
    let mut src = vec![usize::MAX; n];
    for (i, &d) in dest.iter().enumerate() {
        assert!(d < n && src[d] == usize::MAX, "not a permutation");
        src[d] = i;
    }
    let mut out = Vec::with_capacity(waksman_switch_count(n));
    route_into(dest, &src, &mut out);
    out
}

fn route_into(dest: &[usize], src: &[usize], out: &mut Vec<bool>) {
    let n = dest.len();
    if n <= 1 {
        return;
    }
    let h = n / 2;
    let n_out = output_switches(n);
    let in_partner = |i: usize| (i < 2 * h).then_some(i ^ 1);
    let out_partner = |j: usize| (j < 2 * n_out).then_some(j ^ 1);

    // Some(true) = bottom subnetwork. Every constraint says two inputs sit in
    // different subnetworks, so colouring one input fixes its whole cycle.
    let mut bottom: Vec<Option<bool>> = vec![None; n];
    let mut stack = Vec::new();
    let mut colour = |start: usize, v: bool, bottom: &mut Vec<Option<bool>>| {
        if bottom[start].is_some() {
            assert_eq!(bottom[start], Some(v), "inconsistent routing constraint");
            return;
        }
        bottom[start] = Some(v);
        stack.push(start);
        while let Some(i) = stack.pop() {
            let v = bottom[i].unwrap();
            let others = [in_partner(i), out_partner(dest[i]).map(|q| src[q])];
            for j in others.into_iter().flatten() {
                match bottom[j] {
                    Some(w) => assert_eq!(w, !v, "inconsistent routing constraint"),
                    None => {
                        bottom[j] = Some(!v);
                        stack.push(j);
                    }
                }
            }
        }
    };

    if n % 2 == 1 {
        colour(n - 1, true, &mut bottom);
        colour(src[n - 1], true, &mut bottom);
    } else {
        colour(src[n - 2], false, &mut bottom);
        colour(src[n - 1], true, &mut bottom);
    }
    for i in 0..n {
        if bottom[i].is_none() {
            colour(i, i % 2 == 1, &mut bottom);
        }
    }
    let bottom: Vec<bool> = bottom.into_iter().map(Option::unwrap).collect();

    let mut top_dest = vec![0; h];
    let mut bot_dest = vec![0; n - h];
    let mut top_src = vec![0; h];
    let mut bot_src = vec![0; n - h];
    for i in 0..n {
        if bottom[i] {
            bot_dest[i / 2] = dest[i] / 2;
            bot_src[dest[i] / 2] = i / 2;
        } else {
            top_dest[i / 2] = dest[i] / 2;
            top_src[dest[i] / 2] = i / 2;
        }
    }
    for k in 0..h {
        out.push(bottom[2 * k]);
    }
    route_into(&top_dest, &top_src, out);
    route_into(&bot_dest, &bot_src, out);
    for j in 0..n_out {
        out.push(bottom[src[2 * j]]);
    }
}
