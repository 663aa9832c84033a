//! Brute-force ground truth for the matching variants.
//!
//! Deliberately shares nothing with the circuit code: values are raw byte
//! strings and parties are plain indices.

use std::collections::{BTreeMap, BTreeSet};

pub type PartyId = usize;

/// Each party's set of values. Sets cannot hold duplicates, so counting
/// parties and counting records agree.
pub type PlainStockpileSet = BTreeMap<PartyId, BTreeSet<Vec<u8>>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleVariant {
    AtLeastTwo,
    AtLeastM(usize),
    /// Every party in `fixed` holds the value, and so do at least `m` parties outside it.
    FixedPlusM { fixed: BTreeSet<PartyId>, m: usize },
}

fn qualifies(holders: &BTreeSet<PartyId>, variant: &OracleVariant) -> bool {
    match variant {
        OracleVariant::AtLeastTwo => holders.len() >= 2,
        OracleVariant::AtLeastM(m) => holders.len() >= *m,
        OracleVariant::FixedPlusM { fixed, m } => {
            fixed.is_subset(holders) && holders.difference(fixed).count() >= *m
        }
    }
}

/// Values each party should learn as shared.
pub fn brute_force_shared(
    sets: &PlainStockpileSet,
    variant: &OracleVariant,
) -> BTreeMap<PartyId, BTreeSet<Vec<u8>>> {
    let mut holders: BTreeMap<&[u8], BTreeSet<PartyId>> = BTreeMap::new();
    for (&p, values) in sets {
        for v in values {
            holders.entry(v.as_slice()).or_default().insert(p);
        }
    }
    let mut out: BTreeMap<PartyId, BTreeSet<Vec<u8>>> =
        sets.keys().map(|&p| (p, BTreeSet::new())).collect();
    for (v, hs) in &holders {
        if qualifies(hs, variant) {
            for p in hs {
                out.get_mut(p).unwrap().insert(v.to_vec());
            }
        }
    }
    out
}
