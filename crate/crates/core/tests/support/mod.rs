//! Random session instances shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use vulnmatch::bits::Word;
use vulnmatch::compiler::{build_matching_circuit, CircuitConfig, CompiledCircuit};
use vulnmatch::oracle::{brute_force_shared, OracleVariant, PlainStockpileSet};
use vulnmatch::session::{circuit_variant, IntersectionReport, PartyId, SessionVariant, Status, Stockpile};

/// Variant families exercised by the randomized suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    AtLeastTwo,
    AtLeastM(u32),
    FixedPlusM { z: usize, m: u32 },
}

pub const FAMILIES: [Family; 7] = [
    Family::AtLeastTwo,
    Family::AtLeastM(2),
    Family::AtLeastM(3),
    Family::FixedPlusM { z: 1, m: 1 },
    Family::FixedPlusM { z: 1, m: 2 },
    Family::FixedPlusM { z: 2, m: 1 },
    Family::FixedPlusM { z: 2, m: 2 },
];

impl Family {
    pub fn label(&self) -> String {
        match self {
            Family::AtLeastTwo => "at-least-two".into(),
            Family::AtLeastM(m) => format!("at-least-{m}"),
            Family::FixedPlusM { z, m } => format!("fixed-{z}-plus-{m}"),
        }
    }

    /// Parties needed before the variant can report anything.
    pub fn min_parties(&self) -> usize {
        match *self {
            Family::AtLeastTwo => 2,
            Family::AtLeastM(m) => m as usize,
            Family::FixedPlusM { z, m } => z + m as usize,
        }
    }

    /// A concrete variant for `n` parties with ids `0..n`; fixed parties are drawn at random.
    pub fn instantiate<R: Rng>(&self, n: usize, rng: &mut R) -> Option<SessionVariant> {
        Some(match *self {
            Family::AtLeastTwo => SessionVariant::AtLeastTwo,
            Family::AtLeastM(m) => SessionVariant::AtLeastM { m },
            Family::FixedPlusM { z, m } => {
                if z > n {
                    return None;
                }
                let mut ids: Vec<PartyId> = (0..n).collect();
                ids.shuffle(rng);
                ids.truncate(z);
                SessionVariant::FixedPlusM { fixed_parties: ids, m }
            }
        })
    }
}

pub fn oracle_variant(v: &SessionVariant) -> OracleVariant {
    match v {
        SessionVariant::AtLeastTwo => OracleVariant::AtLeastTwo,
        SessionVariant::AtLeastM { m } => OracleVariant::AtLeastM(*m as usize),
        SessionVariant::FixedPlusM { fixed_parties, m } => OracleVariant::FixedPlusM {
            fixed: fixed_parties.iter().copied().collect(),
            m: *m as usize,
        },
    }
}

/// `n` stockpiles of at most `u` values each, drawn from a pool small enough
/// to produce plenty of overlaps.
pub fn random_stockpiles<R: Rng>(n: usize, u: usize, sigma: usize, rng: &mut R) -> Vec<Stockpile> {
    let pool_size = (2 * u + 1).min((1usize << sigma.min(20)) - 1);
    let mut pool = BTreeSet::new();
    while pool.len() < pool_size {
        pool.insert(Word::random_nonzero(sigma as u32, rng));
    }
    let pool: Vec<Word> = pool.into_iter().collect();
    (0..n)
        .map(|party| {
            let count = rng.gen_range(0..=u);
            let values = pool.choose_multiple(rng, count).cloned().collect();
            Stockpile { party, values }
        })
        .collect()
}

pub fn oracle_of(piles: &[Stockpile], variant: &SessionVariant) -> BTreeMap<PartyId, BTreeSet<Vec<u8>>> {
    let sets: PlainStockpileSet = piles
        .iter()
        .map(|s| (s.party, s.values.iter().map(|w| w.as_bytes().to_vec()).collect()))
        .collect();
    brute_force_shared(&sets, &oracle_variant(variant))
}

/// True when every report covers exactly its party's values and marks as
/// shared exactly the oracle's values.
pub fn reports_match_oracle(
    reports: &[(PartyId, &IntersectionReport)],
    piles: &BTreeMap<PartyId, BTreeSet<Word>>,
    oracle: &BTreeMap<PartyId, BTreeSet<Vec<u8>>>,
) -> bool {
    reports.iter().all(|(p, r)| {
        let map = r.status_map();
        let keys: BTreeSet<&Word> = map.keys().collect();
        let own: BTreeSet<&Word> = piles[p].iter().collect();
        let shared: BTreeSet<Vec<u8>> = map
            .iter()
            .filter(|(_, s)| **s == Status::Shared)
            .map(|(w, _)| w.as_bytes().to_vec())
            .collect();
        keys == own && shared == oracle[p]
    })
}

/// Caches compiled circuits; `None` for configurations the compiler rejects.
#[derive(Default)]
pub struct CircuitCache(HashMap<CircuitConfig, Option<Arc<CompiledCircuit>>>);

impl CircuitCache {
    pub fn get(&mut self, n: usize, u: usize, sigma: usize, variant: &SessionVariant) -> Option<Arc<CompiledCircuit>> {
        let cfg = CircuitConfig::new(n, u, sigma, circuit_variant(variant));
        self.0
            .entry(cfg.clone())
            .or_insert_with(|| build_matching_circuit(&cfg).ok().map(Arc::new))
            .clone()
    }
}
