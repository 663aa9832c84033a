//! Multi-epoch orchestration with persisted `v || real` shares.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{
    circuit_variant, inject_unsorted, layout_slots, negotiate_u, party_tag, prepare_slots,
    run_round, IntersectionReport, Mode, PartyId, RoundOptions, RoundOutcome, SessionConfig,
    SessionError, Slot,
};
use crate::bits::Word;
use crate::compiler::{build_matching_circuit, CircuitConfig, CompiledCircuit};
use crate::mpc::load_shares;

/// State kept between epochs. The slot layouts are each party's private
/// knowledge; the computing nodes see only which input positions are carried.
#[derive(Debug, Clone)]
pub struct Carry {
    pub epoch: u32,
    pub participants: Vec<PartyId>,
    pub mode: Mode,
    /// Per computing node, the blob written by `persist_shares`.
    pub blobs: Vec<Vec<u8>>,
    pub slots: BTreeMap<PartyId, Vec<Slot>>,
}

#[derive(Debug, Clone)]
pub struct EpochOutcome {
    pub epoch: u32,
    pub u: usize,
    pub participants: Vec<PartyId>,
    pub reports: BTreeMap<PartyId, IntersectionReport>,
    /// Records whose `v || real` shares came from the previous epoch.
    pub carried_records: usize,
    pub round: RoundOutcome,
    pub compiled: Arc<CompiledCircuit>,
}

pub struct Session {
    config: SessionConfig,
    epoch: u32,
    stockpiles: BTreeMap<PartyId, BTreeSet<Word>>,
    active: BTreeSet<PartyId>,
    departed: BTreeSet<PartyId>,
    carry: Option<Carry>,
    rng: ChaCha20Rng,
    cache: HashMap<CircuitConfig, Arc<CompiledCircuit>>,
    unsorted_fault: Option<PartyId>,
}

impl Session {
    /// `stockpiles` holds the initial entries of every configured party.
    /// Without a configured seed the session draws one from system entropy.
    pub fn new(
        config: SessionConfig,
        stockpiles: BTreeMap<PartyId, Vec<Word>>,
    ) -> Result<Self, SessionError> {
        config.validate()?;
        let mut piles = BTreeMap::new();
        for p in &config.parties {
            let values = stockpiles.get(&p.id).cloned().unwrap_or_default();
            if let Some(w) = values.iter().find(|w| w.bits() as usize != config.sigma || w.is_zero()) {
                return Err(SessionError::ConfigInvalid(format!(
                    "party {}: value {} is not a nonzero {}-bit hash",
                    p.id,
                    w.to_hex(),
                    config.sigma
                )));
            }
            piles.insert(p.id, values.into_iter().collect());
        }
        if let Some(extra) = stockpiles.keys().find(|id| !piles.contains_key(id)) {
            return Err(SessionError::ConfigInvalid(format!("party {extra} is not configured")));
        }
        let seed = config.seed.unwrap_or_else(rand::random);
        Ok(Session {
            epoch: config.epoch,
            active: config.active_parties().into_iter().collect(),
            stockpiles: piles,
            departed: BTreeSet::new(),
            carry: None,
            rng: ChaCha20Rng::seed_from_u64(seed),
            cache: HashMap::new(),
            unsorted_fault: None,
            config,
        })
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn participants(&self) -> Vec<PartyId> {
        self.active.iter().copied().collect()
    }

    pub fn stockpile(&self, party: PartyId) -> Option<&BTreeSet<Word>> {
        self.stockpiles.get(&party)
    }

    /// Adds entries for the next epoch. Submitted entries are permanent.
    pub fn add_entries(
        &mut self,
        party: PartyId,
        additions: impl IntoIterator<Item = Word>,
    ) -> Result<(), SessionError> {
        let sigma = self.config.sigma;
        let pile = self
            .stockpiles
            .get_mut(&party)
            .ok_or_else(|| SessionError::ConfigInvalid(format!("unknown party {party}")))?;
        for w in additions {
            if w.bits() as usize != sigma || w.is_zero() {
                return Err(SessionError::ConfigInvalid(format!(
                    "value {} is not a nonzero {sigma}-bit hash",
                    w.to_hex()
                )));
            }
            pile.insert(w);
        }
        Ok(())
    }

    /// Replaces a party's stockpile; every earlier entry must still be present.
    pub fn resubmit(&mut self, party: PartyId, full: Vec<Word>) -> Result<(), SessionError> {
        let old = self
            .stockpiles
            .get(&party)
            .ok_or_else(|| SessionError::ConfigInvalid(format!("unknown party {party}")))?;
        let new: BTreeSet<Word> = full.iter().cloned().collect();
        let removed = old.difference(&new).count();
        if removed > 0 {
            return Err(SessionError::RemovalAttempted {
                party,
                count: removed,
            });
        }
        self.add_entries(party, full)
    }

    /// Takes a party out of future rounds. Its submitted entries stay frozen.
    pub fn leave(&mut self, party: PartyId) -> Result<(), SessionError> {
        if !self.active.remove(&party) {
            return Err(SessionError::ConfigInvalid(format!("party {party} is not active")));
        }
        self.departed.insert(party);
        Ok(())
    }

    pub fn join(&mut self, party: PartyId) -> Result<(), SessionError> {
        if self.departed.contains(&party) {
            return Err(SessionError::ReadmissionUnsupported(party));
        }
        if !self.stockpiles.contains_key(&party) {
            return Err(SessionError::ConfigInvalid(format!("unknown party {party}")));
        }
        self.active.insert(party);
        Ok(())
    }

    /// Makes the named party submit an unsorted list in the next round.
    pub fn inject_unsorted(&mut self, party: Option<PartyId>) {
        self.unsorted_fault = party;
    }

    fn compiled(&mut self, cfg: CircuitConfig) -> Result<Arc<CompiledCircuit>, SessionError> {
        if let Some(c) = self.cache.get(&cfg) {
            return Ok(c.clone());
        }
        let c = Arc::new(build_matching_circuit(&cfg)?);
        self.cache.insert(cfg, c.clone());
        Ok(c)
    }

    /// Runs one epoch: negotiate `u`, prepare, evaluate, interpret.
    pub fn run_epoch(&mut self) -> Result<EpochOutcome, SessionError> {
        let participants = self.participants();
        let n = participants.len();
        if n < 2 {
            return Err(SessionError::ConfigInvalid(format!("{n} active parties")));
        }
        let n_compute = match self.config.mode {
            Mode::Direct => n,
            Mode::Outsourced { servers } => servers,
        };
        let counts: Vec<usize> = participants.iter().map(|p| self.stockpiles[p].len()).collect();
        let u = negotiate_u(&counts, self.config.count_bits, self.rng.next_u64())?;

        let variant = circuit_variant(&self.config.variant);
        let mut cfg = CircuitConfig::new(n, u, self.config.sigma, variant);
        if let Some(k) = self.config.key_bits {
            cfg.key_bits = k;
        }
        cfg.shuffle_layers = n_compute;
        let compiled = self.compiled(cfg)?;

        let carry = self
            .carry
            .as_ref()
            .filter(|c| c.participants == participants && c.mode == self.config.mode);
        let mut prepared = Vec::with_capacity(n);
        for &p in &participants {
            let previous = carry.and_then(|c| c.slots.get(&p)).map(Vec::as_slice);
            let slots = layout_slots(
                p,
                &self.stockpiles[&p],
                previous,
                u,
                self.config.sigma,
                &mut self.rng,
            )?;
            let tag = party_tag(&self.config.variant, p);
            prepared.push(prepare_slots(p, slots, &compiled.config, tag, self.epoch, &mut self.rng)?);
        }
        let stored = match carry {
            Some(c) => Some(
                c.blobs
                    .iter()
                    .enumerate()
                    .map(|(node, b)| load_shares(b, c.epoch, node))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            None => None,
        };
        if let Some(bad) = self.unsorted_fault {
            if let Some(p) = prepared.iter_mut().find(|p| p.party == bad) {
                inject_unsorted(p)?;
            }
        }
        let carried_records = prepared
            .iter()
            .flat_map(|p| &p.sources)
            .filter(|s| matches!(s, super::SlotSource::Carried(_)))
            .count();
        let opts = RoundOptions {
            mode: self.config.mode,
            transport: self.config.transport.into(),
            seed: self.rng.next_u64(),
            epoch: self.epoch,
        };
        let round = run_round(&compiled, &prepared, stored.as_deref(), &opts)?;
        let reports = participants
            .iter()
            .copied()
            .zip(round.reports.iter().cloned())
            .collect();
        self.carry = Some(Carry {
            epoch: self.epoch,
            participants: participants.clone(),
            mode: self.config.mode,
            blobs: round.stored.clone(),
            slots: prepared.iter().map(|p| (p.party, p.slots())).collect(),
        });
        let outcome = EpochOutcome {
            epoch: self.epoch,
            u,
            participants,
            reports,
            carried_records,
            round,
            compiled,
        };
        self.epoch += 1;
        Ok(outcome)
    }
}
