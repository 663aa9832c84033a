//! The four circuit stages, plus standalone single-stage circuits for testing.

use super::{
    record_owner, shuffle_control_bits, CircuitConfig, CompileError, CompiledStage,
    RecordLayout, StageName, StageTimer, Variant,
};
use crate::circuit::{
    and_all, equal, equal_const, greater_than, less_than, merge_sorted, mux, or_all,
    waksman_network, BooleanCircuit, CircuitBuilder, WireId,
};

/// Flag that is set iff the party's `v` values are not strictly ascending.
pub(super) fn sortcheck(b: &mut CircuitBuilder, layout: &RecordLayout, list: &[Vec<WireId>]) -> WireId {
    let sigma = layout.sigma;
    let bad: Vec<WireId> = list
        .windows(2)
        .map(|w| {
            let lt = less_than(b, &w[0][..sigma], &w[1][..sigma]);
            b.not(lt)
        })
        .collect();
    or_all(b, &bad)
}

/// Balanced binary tree of merges over the party lists.
pub(super) fn merge_tree(
    b: &mut CircuitBuilder,
    mut lists: Vec<Vec<Vec<WireId>>>,
    key_bits: usize,
) -> Vec<Vec<WireId>> {
    match lists.len() {
        0 => Vec::new(),
        1 => lists.pop().unwrap(),
        k => {
            let right = lists.split_off(k / 2);
            let left = merge_tree(b, lists, key_bits);
            let right = merge_tree(b, right, key_bits);
            merge_sorted(b, left, right, key_bits)
        }
    }
}

/// Two output keys per merged record.
pub(super) fn dupselect(
    b: &mut CircuitBuilder,
    cfg: &CircuitConfig,
    merged: &[Vec<WireId>],
) -> Vec<Vec<WireId>> {
    let layout = cfg.layout();
    let sigma = layout.sigma;
    let m_rec = merged.len();
    let real = |r: &Vec<WireId>| r[layout.real_bit()];
    let k0 = |r: &Vec<WireId>| r[layout.k0_range()].to_vec();
    let k1 = |r: &Vec<WireId>| r[layout.k1_range()].to_vec();

    // e[i]: records i and i+1 carry the same real value.
    let e: Vec<WireId> = merged
        .windows(2)
        .map(|w| {
            let eq = equal(b, &w[0][..=sigma], &w[1][..=sigma]);
            b.and(eq, real(&w[0]))
        })
        .collect();

    let mut keys = Vec::with_capacity(2 * m_rec);
    match &cfg.variant {
        Variant::AtLeastTwo => {
            let sentinel = |b: &mut CircuitBuilder, r: &Vec<WireId>| {
                let z = equal_const(b, &r[..sigma], 0);
                b.and(z, real(r))
            };
            let first = sentinel(b, &merged[0]);
            let last = sentinel(b, &merged[m_rec - 1]);
            for (i, r) in merged.iter().enumerate() {
                let left = if i == 0 { first } else { e[i - 1] };
                let right = if i + 1 == m_rec { last } else { e[i] };
                let (k0, k1) = (k0(r), k1(r));
                keys.push(mux(b, left, &k0, &k1));
                keys.push(mux(b, right, &k0, &k1));
            }
        }
        Variant::AtLeastM { m } => {
            let m = *m as usize;
            let flags: Vec<WireId> = if m == 1 {
                merged.iter().map(real).collect()
            } else {
                let windows: Vec<WireId> = (0..(m_rec + 1).saturating_sub(m))
                    .map(|s| and_all(b, &e[s..s + m - 1]))
                    .collect();
                covering_or(b, &windows, m, m_rec)
            };
            for (r, &f) in merged.iter().zip(&flags) {
                let key = mux(b, f, &k0(r), &k1(r));
                keys.push(key.clone());
                keys.push(key);
            }
        }
        Variant::FixedPlusM { fixed_tags, m } => {
            let w = fixed_tags.len() + *m as usize;
            let tags = layout.tag_range();
            // has[j][t]: record j carries fixed tag t.
            let has: Vec<Vec<WireId>> = merged
                .iter()
                .map(|r| {
                    fixed_tags
                        .iter()
                        .map(|&t| equal_const(b, &r[tags.clone()], t))
                        .collect()
                })
                .collect();
            let windows: Vec<WireId> = (0..(m_rec + 1).saturating_sub(w))
                .map(|s| {
                    let run = and_all(b, &e[s..s + w - 1]);
                    let present: Vec<WireId> = (0..fixed_tags.len())
                        .map(|t| {
                            let col: Vec<WireId> = has[s..s + w].iter().map(|h| h[t]).collect();
                            or_all(b, &col)
                        })
                        .collect();
                    let p = and_all(b, &present);
                    b.and(run, p)
                })
                .collect();
            let mut flags = covering_or(b, &windows, w, m_rec);
            // Spread a qualifying window's flag over its whole run of equal values.
            for i in 1..m_rec {
                let carry = b.and(flags[i - 1], e[i - 1]);
                flags[i] = b.or(flags[i], carry);
            }
            for i in (0..m_rec.saturating_sub(1)).rev() {
                let carry = b.and(flags[i + 1], e[i]);
                flags[i] = b.or(flags[i], carry);
            }
            for (r, &f) in merged.iter().zip(&flags) {
                let key = mux(b, f, &k0(r), &k1(r));
                keys.push(key.clone());
                keys.push(key);
            }
        }
    }
    keys
}

/// `f[i]` = OR of the size-`w` windows that contain position `i`.
fn covering_or(b: &mut CircuitBuilder, windows: &[WireId], w: usize, n: usize) -> Vec<WireId> {
    (0..n)
        .map(|i| {
            let lo = (i + 1).saturating_sub(w);
            let hi = (i + 1).min(windows.len());
            if lo >= hi {
                b.zero()
            } else {
                or_all(b, &windows[lo..hi])
            }
        })
        .collect()
}

/// One Waksman layer per control vector.
pub(super) fn shuffle(
    b: &mut CircuitBuilder,
    mut keys: Vec<Vec<WireId>>,
    controls: &[Vec<WireId>],
) -> Vec<Vec<WireId>> {
    for c in controls {
        keys = waksman_network(b, keys, c);
    }
    keys
}

fn standalone(
    name: StageName,
    body: impl FnOnce(&mut CircuitBuilder) -> Vec<WireId>,
) -> (BooleanCircuit, CompiledStage) {
    let mut b = CircuitBuilder::new();
    let t = StageTimer::start(&b);
    let before = b.tally();
    let out = body(&mut b);
    let mut stage = t.finish(&b, name, before);
    b.output(&out);
    let c = b.finish();
    stage.counts.depth_and = c.and_levels().into_iter().max().unwrap_or(0);
    (c, stage)
}

fn party_lists(b: &mut CircuitBuilder, cfg: &CircuitConfig) -> Vec<Vec<Vec<WireId>>> {
    let width = cfg.layout().width();
    (0..cfg.n_parties)
        .map(|i| {
            let flat = b.input(record_owner(i), cfg.inputs_per_party * width);
            flat.chunks(width).map(<[WireId]>::to_vec).collect()
        })
        .collect()
}

/// Owners `0..N` supply their records; outputs the `N` flags in party order.
pub fn build_sortcheck(cfg: &CircuitConfig) -> Result<(BooleanCircuit, CompiledStage), CompileError> {
    cfg.validate()?;
    let layout = cfg.layout();
    Ok(standalone(StageName::SortCheck, |b| {
        let lists = party_lists(b, cfg);
        lists.iter().map(|l| sortcheck(b, &layout, l)).collect()
    }))
}

/// Owners `0..N` supply sorted lists; outputs the merged records.
pub fn build_merge_tree(cfg: &CircuitConfig) -> Result<(BooleanCircuit, CompiledStage), CompileError> {
    cfg.validate()?;
    let key = cfg.layout().sort_key_bits();
    Ok(standalone(StageName::MergeTree, |b| {
        let lists = party_lists(b, cfg);
        merge_tree(b, lists, key).concat()
    }))
}

/// Owner 0 supplies the `N·u` merged records; outputs `2·N·u` keys.
pub fn build_dupselect(cfg: &CircuitConfig) -> Result<(BooleanCircuit, CompiledStage), CompileError> {
    cfg.validate()?;
    let width = cfg.layout().width();
    Ok(standalone(StageName::DupSelect, |b| {
        let flat = b.input(0, cfg.records() * width);
        let merged: Vec<Vec<WireId>> = flat.chunks(width).map(<[WireId]>::to_vec).collect();
        dupselect(b, cfg, &merged).concat()
    }))
}

/// Owner 0 supplies `2·N·u` keys of κ bits; owner `1 + j` the controls of layer `j`.
pub fn build_shuffle(cfg: &CircuitConfig) -> Result<(BooleanCircuit, CompiledStage), CompileError> {
    cfg.validate()?;
    let kb = cfg.key_bits;
    Ok(standalone(StageName::Shuffle, |b| {
        let flat = b.input(0, cfg.output_keys() * kb);
        let keys: Vec<Vec<WireId>> = flat.chunks(kb).map(<[WireId]>::to_vec).collect();
        let controls: Vec<Vec<WireId>> = (0..cfg.shuffle_layers)
            .map(|j| b.input(1 + j as u32, shuffle_control_bits(cfg)))
            .collect();
        shuffle(b, keys, &controls).concat()
    }))
}

/// Maximum of `n` unsigned `count_bits`-bit inputs, one per owner `0..n`.
pub fn build_max_circuit(n: usize, count_bits: usize) -> BooleanCircuit {
    assert!(n >= 1 && count_bits >= 1);
    let mut b = CircuitBuilder::new();
    let mut level: Vec<Vec<WireId>> = (0..n).map(|i| b.input(i as u32, count_bits)).collect();
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(x) = it.next() {
            match it.next() {
                Some(y) => {
                    let gt = greater_than(&mut b, &y, &x);
                    next.push(mux(&mut b, gt, &x, &y));
                }
                None => next.push(x),
            }
        }
        level = next;
    }
    b.output(&level[0]);
    b.finish()
}
