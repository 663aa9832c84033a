//! One matching round per epoch: agree on `u`, lay out each party's records,
//! evaluate under sharing, and read the opened keys back.

mod config;
mod epoch;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::bits::Word;
use crate::circuit::{bits_value, eval_plaintext, word_bits, OwnerId};
use crate::compiler::{
    build_max_circuit, random_shuffle_controls, record_owner, shuffle_owner, CircuitConfig,
    CompileError, CompiledCircuit, InputRecord, Variant,
};
use crate::mpc::{
    eval_shared, persist_shares, run_local, InputPlan, LocalRun, MpcError, NodeId, RunOptions,
    TransportKind,
};

pub use config::{
    handshake, parse_report, read_stockpile, write_report, Mode, PartyEntry, SessionConfig,
    SessionVariant, TransportChoice,
};
pub use epoch::{Carry, EpochOutcome, Session};

pub type PartyId = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error("party {party} has {entries} entries but u = {u}")]
    TooManyEntries { party: PartyId, entries: usize, u: usize },
    #[error("randomness failure: {0}")]
    RandomnessFailure(String),
    #[error("opened keys contain neither key of record {0}")]
    ProtocolCorruption(String),
    #[error("party {0} holds a different session configuration")]
    ConfigMismatch(PartyId),
    #[error("invalid session: {0}")]
    ConfigInvalid(String),
    #[error("party {party} tried to remove {count} submitted entries")]
    RemovalAttempted { party: PartyId, count: usize },
    #[error("party {0} left earlier and cannot rejoin")]
    ReadmissionUnsupported(PartyId),
    #[error("protocol aborted: unsorted input from parties {0:?}")]
    AbortUnsorted(Vec<PartyId>),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Mpc(#[from] MpcError),
}

impl From<CompileError> for SessionError {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::ConfigInvalid(m) => SessionError::ConfigInvalid(m),
        }
    }
}

/// A party's distinct hashed identifiers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stockpile {
    pub party: PartyId,
    pub values: BTreeSet<Word>,
}

impl Stockpile {
    pub fn new(party: PartyId, values: impl IntoIterator<Item = Word>) -> Self {
        Stockpile {
            party,
            values: values.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub k0: Word,
    pub k1: Word,
}

/// A party's fresh keys for its real records in one epoch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyTable {
    pub epoch: u32,
    pub entries: BTreeMap<Word, KeyPair>,
}

/// Where a record's `v || real` bits come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotSource {
    Fresh,
    /// Slot index in the previous epoch's stored shares.
    Carried(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub v: Word,
    pub real: bool,
    pub source: SlotSource,
}

#[derive(Debug, Clone)]
pub struct PreparedInput {
    pub party: PartyId,
    pub epoch: u32,
    pub records: Vec<InputRecord>,
    pub sources: Vec<SlotSource>,
    pub keys: KeyTable,
    /// Keys of dummy records; none of these may ever open as a 1-key.
    pub dummy_keys: Vec<KeyPair>,
}

impl PreparedInput {
    pub fn slots(&self) -> Vec<Slot> {
        self.records
            .iter()
            .zip(&self.sources)
            .map(|(r, &source)| Slot {
                v: r.v.clone(),
                real: r.real,
                source,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Shared,
    Exclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Shared => "shared",
            Status::Exclusive => "exclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportEntry {
    pub v: Word,
    pub status: Status,
    /// Number of times the record's 1-key was opened.
    pub k1_seen: usize,
}

/// What one party learns about its own records. Nothing in it names the
/// other holders of a shared value.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntersectionReport {
    pub epoch: u32,
    pub entries: Vec<ReportEntry>,
}

impl IntersectionReport {
    pub fn shared(&self) -> BTreeSet<Word> {
        self.entries
            .iter()
            .filter(|e| e.status == Status::Shared)
            .map(|e| e.v.clone())
            .collect()
    }

    pub fn status_map(&self) -> BTreeMap<Word, Status> {
        self.entries.iter().map(|e| (e.v.clone(), e.status)).collect()
    }
}

/// Largest count among the parties, computed on a max circuit under sharing.
/// The result is at least 1 so that every party contributes a record.
pub fn negotiate_u(counts: &[usize], count_bits: usize, seed: u64) -> Result<usize, SessionError> {
    if counts.len() < 2 {
        return Err(SessionError::ConfigInvalid("need at least 2 parties".into()));
    }
    if let Some(&c) = counts.iter().find(|&&c| c as u128 >= 1u128 << count_bits) {
        return Err(SessionError::ConfigInvalid(format!(
            "count {c} does not fit in {count_bits} bits"
        )));
    }
    let circuit = build_max_circuit(counts.len(), count_bits);
    let inputs = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (i as OwnerId, word_bits(c as u64, count_bits)))
        .collect();
    let run = eval_shared(&circuit, &inputs, counts.len(), seed)?;
    Ok((bits_value(&run.outputs) as usize).max(1))
}

fn sample_distinct_nonzero<R: Rng + ?Sized>(
    sigma: usize,
    count: usize,
    avoid: &BTreeSet<Word>,
    rng: &mut R,
) -> Result<Vec<Word>, SessionError> {
    let space = if sigma >= 64 { u64::MAX } else { (1u64 << sigma) - 1 };
    let avoid_in_space = avoid.len() as u64;
    if (count as u64).saturating_add(avoid_in_space) > space {
        return Err(SessionError::RandomnessFailure(format!(
            "cannot draw {count} dummies from a {sigma}-bit space with {avoid_in_space} values taken"
        )));
    }
    let mut chosen = BTreeSet::new();
    let mut attempts = 0usize;
    let limit = 1000 + 200 * count;
    while chosen.len() < count {
        attempts += 1;
        if attempts > limit {
            return Err(SessionError::RandomnessFailure(format!(
                "no fresh dummy value after {limit} draws"
            )));
        }
        let w = Word::random_nonzero(sigma as u32, rng);
        if !avoid.contains(&w) {
            chosen.insert(w);
        }
    }
    let mut out: Vec<Word> = chosen.into_iter().collect();
    out.shuffle(rng);
    Ok(out)
}

/// Chooses the `u` slots of a party: all real values, dummies carried from the
/// previous epoch where they still fit, and fresh dummies for the rest.
pub fn layout_slots<R: Rng + ?Sized>(
    party: PartyId,
    reals: &BTreeSet<Word>,
    previous: Option<&[Slot]>,
    u: usize,
    sigma: usize,
    rng: &mut R,
) -> Result<Vec<Slot>, SessionError> {
    if reals.len() > u {
        return Err(SessionError::TooManyEntries {
            party,
            entries: reals.len(),
            u,
        });
    }
    let mut slots: Vec<Slot> = Vec::with_capacity(u);
    let mut carried_reals = BTreeSet::new();
    let mut carried_dummies = Vec::new();
    if let Some(prev) = previous {
        for (k, s) in prev.iter().enumerate() {
            if s.real {
                if !reals.contains(&s.v) {
                    let removed = prev.iter().filter(|s| s.real && !reals.contains(&s.v)).count();
                    return Err(SessionError::RemovalAttempted {
                        party,
                        count: removed,
                    });
                }
                carried_reals.insert(s.v.clone());
                slots.push(Slot {
                    v: s.v.clone(),
                    real: true,
                    source: SlotSource::Carried(k),
                });
            } else if !reals.contains(&s.v) {
                carried_dummies.push((k, s.v.clone()));
            }
        }
    }
    for v in reals.difference(&carried_reals) {
        slots.push(Slot {
            v: v.clone(),
            real: true,
            source: SlotSource::Fresh,
        });
    }
    carried_dummies.shuffle(rng);
    carried_dummies.truncate(u - slots.len());
    let mut taken: BTreeSet<Word> = reals.clone();
    for (k, v) in carried_dummies {
        taken.insert(v.clone());
        slots.push(Slot {
            v,
            real: false,
            source: SlotSource::Carried(k),
        });
    }
    let fresh = sample_distinct_nonzero(sigma, u - slots.len(), &taken, rng)?;
    slots.extend(fresh.into_iter().map(|v| Slot {
        v,
        real: false,
        source: SlotSource::Fresh,
    }));
    slots.sort_by(|a, b| a.v.cmp(&b.v));
    Ok(slots)
}

fn fresh_keys<R: Rng + ?Sized>(n: usize, bits: usize, rng: &mut R) -> Result<Vec<KeyPair>, SessionError> {
    let mut seen = HashSet::with_capacity(2 * n);
    let mut draw = |rng: &mut R| -> Result<Word, SessionError> {
        for _ in 0..64 {
            let k = Word::random(bits as u32, rng);
            if seen.insert(k.clone()) {
                return Ok(k);
            }
        }
        Err(SessionError::RandomnessFailure(format!(
            "no distinct {bits}-bit key after 64 draws"
        )))
    };
    (0..n)
        .map(|_| {
            Ok(KeyPair {
                k0: draw(rng)?,
                k1: draw(rng)?,
            })
        })
        .collect()
}

/// Attaches fresh keys and the party tag to laid-out slots.
pub fn prepare_slots<R: Rng + ?Sized>(
    party: PartyId,
    slots: Vec<Slot>,
    cfg: &CircuitConfig,
    tag: u64,
    epoch: u32,
    rng: &mut R,
) -> Result<PreparedInput, SessionError> {
    assert_eq!(slots.len(), cfg.inputs_per_party);
    let keys = fresh_keys(slots.len(), cfg.key_bits, rng)?;
    let mut table = KeyTable {
        epoch,
        entries: BTreeMap::new(),
    };
    let mut dummy_keys = Vec::new();
    let mut records = Vec::with_capacity(slots.len());
    let mut sources = Vec::with_capacity(slots.len());
    for (s, k) in slots.into_iter().zip(keys) {
        records.push(InputRecord {
            v: s.v.clone(),
            real: s.real,
            tag,
            k0: k.k0.clone(),
            k1: k.k1.clone(),
        });
        sources.push(s.source);
        if s.real {
            table.entries.insert(s.v, k);
        } else {
            dummy_keys.push(k);
        }
    }
    Ok(PreparedInput {
        party,
        epoch,
        records,
        sources,
        keys: table,
        dummy_keys,
    })
}

/// Dedupes, pads with interleaved dummies and draws fresh keys.
pub fn prepare_inputs<R: Rng + ?Sized>(
    stockpile: &Stockpile,
    cfg: &CircuitConfig,
    tag: u64,
    epoch: u32,
    rng: &mut R,
) -> Result<PreparedInput, SessionError> {
    let slots = layout_slots(
        stockpile.party,
        &stockpile.values,
        None,
        cfg.inputs_per_party,
        cfg.sigma,
        rng,
    )?;
    prepare_slots(stockpile.party, slots, cfg, tag, epoch, rng)
}

/// Reads a party's outcome off the opened key multiset.
pub fn interpret_output(keys: &KeyTable, opened: &[Word]) -> Result<IntersectionReport, SessionError> {
    let mut seen: HashMap<&Word, usize> = HashMap::with_capacity(opened.len());
    for k in opened {
        *seen.entry(k).or_default() += 1;
    }
    let mut entries = Vec::with_capacity(keys.entries.len());
    for (v, pair) in &keys.entries {
        let k1 = seen.get(&pair.k1).copied().unwrap_or(0);
        let status = if k1 > 0 {
            Status::Shared
        } else if seen.contains_key(&pair.k0) {
            Status::Exclusive
        } else {
            return Err(SessionError::ProtocolCorruption(v.to_hex()));
        };
        entries.push(ReportEntry {
            v: v.clone(),
            status,
            k1_seen: k1,
        });
    }
    Ok(IntersectionReport {
        epoch: keys.epoch,
        entries,
    })
}

/// Number of dummy 1-keys present in the opened multiset.
pub fn dummy_hits(prepared: &[PreparedInput], opened: &[Word]) -> usize {
    let set: HashSet<&Word> = opened.iter().collect();
    prepared
        .iter()
        .flat_map(|p| &p.dummy_keys)
        .filter(|k| set.contains(&k.k1))
        .count()
}

/// Circuit tag of the `i`-th participant.
pub fn party_tag(variant: &SessionVariant, party: PartyId) -> u64 {
    match variant {
        SessionVariant::FixedPlusM { fixed_parties, .. } => fixed_parties
            .iter()
            .position(|&p| p == party)
            .unwrap_or(fixed_parties.len()) as u64,
        _ => 0,
    }
}

/// Circuit variant with fixed parties mapped to tags `0..z`.
pub fn circuit_variant(variant: &SessionVariant) -> Variant {
    match variant {
        SessionVariant::AtLeastTwo => Variant::AtLeastTwo,
        SessionVariant::AtLeastM { m } => Variant::AtLeastM { m: *m },
        SessionVariant::FixedPlusM { fixed_parties, m } => Variant::FixedPlusM {
            fixed_tags: (0..fixed_parties.len() as u64).collect(),
            m: *m,
        },
    }
}

/// Swaps a party's first two records so its list is no longer ascending.
pub fn inject_unsorted(p: &mut PreparedInput) -> Result<(), SessionError> {
    if p.records.len() < 2 {
        return Err(SessionError::ConfigInvalid(
            "cannot unsort a list with fewer than 2 records".into(),
        ));
    }
    p.records.swap(0, 1);
    p.sources.swap(0, 1);
    Ok(())
}

/// Plaintext inputs of the compiled circuit: every party's encoded records
/// and the shuffle controls of each layer.
pub fn circuit_inputs(
    compiled: &CompiledCircuit,
    prepared: &[PreparedInput],
    controls: &[Vec<bool>],
) -> BTreeMap<OwnerId, Vec<bool>> {
    let layout = compiled.layout();
    let mut inputs = BTreeMap::new();
    for (i, p) in prepared.iter().enumerate() {
        inputs.insert(record_owner(i), layout.encode_all(&p.records));
    }
    for (j, c) in controls.iter().enumerate() {
        inputs.insert(shuffle_owner(&compiled.config, j), c.clone());
    }
    inputs
}

pub fn shuffle_controls<R: RngCore + ?Sized>(cfg: &CircuitConfig, rng: &mut R) -> Vec<Vec<bool>> {
    (0..cfg.shuffle_layers)
        .map(|_| random_shuffle_controls(cfg.output_keys(), rng))
        .collect()
}

/// Splits the opened output bits into κ-bit keys.
pub fn decode_keys(cfg: &CircuitConfig, bits: &[bool]) -> Vec<Word> {
    bits.chunks(cfg.key_bits).map(Word::from_bits).collect()
}

/// Plaintext run of the compiled circuit with session preparation; the
/// differential reference for the shared evaluation.
pub fn reference_pipeline<R: RngCore>(
    compiled: &CompiledCircuit,
    stockpiles: &[Stockpile],
    variant: &SessionVariant,
    rng: &mut R,
) -> Result<Vec<IntersectionReport>, SessionError> {
    let cfg = &compiled.config;
    let prepared = stockpiles
        .iter()
        .map(|s| prepare_inputs(s, cfg, party_tag(variant, s.party), 0, rng))
        .collect::<Result<Vec<_>, _>>()?;
    let controls = shuffle_controls(cfg, rng);
    let inputs = circuit_inputs(compiled, &prepared, &controls);
    let out = eval_plaintext(&compiled.circuit, &inputs).map_err(MpcError::from)?;
    let opened = decode_keys(cfg, &out);
    prepared.iter().map(|p| interpret_output(&p.keys, &opened)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundOptions {
    pub mode: Mode,
    pub transport: TransportKind,
    pub seed: u64,
    pub epoch: u32,
}

#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub reports: Vec<IntersectionReport>,
    pub opened: Vec<Word>,
    pub run: LocalRun,
    /// Per compute node, its stored `v || real` shares keyed by party id.
    pub stored: Vec<Vec<u8>>,
    pub compute_nodes: usize,
}

fn node_of(mode: Mode, i: usize) -> NodeId {
    match mode {
        Mode::Direct => i,
        Mode::Outsourced { servers } => servers + i,
    }
}

/// Evaluates one round under sharing.
///
/// `carry` supplies, for each compute node, stored `v || real` shares keyed by
/// party id; records whose source is `Carried(k)` take their bits from slot `k`.
pub fn run_round(
    compiled: &CompiledCircuit,
    prepared: &[PreparedInput],
    carry: Option<&[BTreeMap<OwnerId, Vec<bool>>]>,
    opts: &RoundOptions,
) -> Result<RoundOutcome, SessionError> {
    let cfg = &compiled.config;
    let n = prepared.len();
    if n != cfg.n_parties {
        return Err(SessionError::ConfigInvalid(format!(
            "{n} prepared inputs for a {}-party circuit",
            cfg.n_parties
        )));
    }
    let n_compute = match opts.mode {
        Mode::Direct => n,
        Mode::Outsourced { servers } => {
            if servers == 0 || servers >= n {
                return Err(SessionError::ConfigInvalid(format!(
                    "outsourcing needs 1 <= servers < parties, got {servers} for {n}"
                )));
            }
            servers
        }
    };
    if cfg.shuffle_layers != n_compute {
        return Err(SessionError::ConfigInvalid(format!(
            "{} shuffle layers for {n_compute} computing nodes",
            cfg.shuffle_layers
        )));
    }
    let layout = cfg.layout();
    let vr = cfg.sigma + 1;
    let mut plan = InputPlan::default();
    let mut by_node: BTreeMap<NodeId, BTreeMap<OwnerId, Vec<bool>>> = BTreeMap::new();
    let mut preshared: Vec<BTreeMap<OwnerId, Vec<bool>>> = vec![BTreeMap::new(); n_compute];
    for (i, p) in prepared.iter().enumerate() {
        let owner = record_owner(i);
        let node = node_of(opts.mode, i);
        plan.supplier.insert(owner, node);
        by_node
            .entry(node)
            .or_default()
            .insert(owner, layout.encode_all(&p.records));
        let carried: Vec<(usize, usize)> = p
            .sources
            .iter()
            .enumerate()
            .filter_map(|(r, s)| match s {
                SlotSource::Carried(k) => Some((r, *k)),
                SlotSource::Fresh => None,
            })
            .collect();
        if carried.is_empty() {
            continue;
        }
        let stored = carry.ok_or_else(|| {
            SessionError::ConfigInvalid(format!("party {} has carried slots but no stored shares", p.party))
        })?;
        if stored.len() != n_compute {
            return Err(SessionError::ConfigInvalid(format!(
                "stored shares for {} nodes, {n_compute} computing",
                stored.len()
            )));
        }
        let positions: Vec<usize> = carried
            .iter()
            .flat_map(|&(r, _)| r * layout.width()..r * layout.width() + vr)
            .collect();
        for (c, node_store) in stored.iter().enumerate() {
            let bits = node_store
                .get(&(p.party as OwnerId))
                .ok_or(MpcError::MissingInput(p.party as OwnerId))?;
            let mut mine = Vec::with_capacity(positions.len());
            for &(_, k) in &carried {
                let src = bits
                    .get(k * vr..(k + 1) * vr)
                    .ok_or_else(|| MpcError::CorruptBlob(format!("slot {k} missing")))?;
                mine.extend_from_slice(src);
            }
            preshared[c].insert(owner, mine);
        }
        plan.preshared.insert(owner, positions);
    }
    let mut ctl_rng = ChaCha20Rng::seed_from_u64(opts.seed ^ 0x73_6875_6666);
    for (j, ctl) in shuffle_controls(cfg, &mut ctl_rng).into_iter().enumerate() {
        let owner = shuffle_owner(cfg, j);
        plan.supplier.insert(owner, j);
        by_node.entry(j).or_default().insert(owner, ctl);
    }
    let run_opts = RunOptions {
        n_compute,
        n_nodes: n_compute + if opts.mode == Mode::Direct { 0 } else { n },
        transport: opts.transport,
        seed: opts.seed,
        epoch: opts.epoch,
        capture_view: false,
    };
    let run = match run_local(&compiled.circuit, &plan, &by_node, &preshared, &run_opts) {
        Err(MpcError::AbortUnsorted(idx)) => {
            return Err(SessionError::AbortUnsorted(
                idx.into_iter().map(|i| prepared[i].party).collect(),
            ))
        }
        r => r?,
    };
    let opened = decode_keys(cfg, &run.outputs);
    let reports = prepared
        .iter()
        .map(|p| interpret_output(&p.keys, &opened))
        .collect::<Result<Vec<_>, _>>()?;
    let stored = (0..n_compute)
        .map(|c| {
            let shares: BTreeMap<OwnerId, Vec<bool>> = prepared
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let all = &run.input_shares[c][&record_owner(i)];
                    let vbits = all
                        .chunks(layout.width())
                        .flat_map(|rec| rec[..vr].iter().copied())
                        .collect();
                    (p.party as OwnerId, vbits)
                })
                .collect();
            persist_shares(opts.epoch, c, &shares)
        })
        .collect();
    Ok(RoundOutcome {
        reports,
        opened,
        run,
        stored,
        compute_nodes: n_compute,
    })
}

/// Checks the communication counters of a finished round against the circuit.
pub fn check_accounting(outcome: &RoundOutcome, compiled: &CompiledCircuit) -> Result<(), String> {
    let counts = crate::circuit::count_gates(&compiled.circuit);
    let opens = compiled.circuit.reactive().len() as u32;
    for t in &outcome.run.transcripts[..outcome.compute_nodes] {
        if t.triples_consumed != counts.and_count {
            return Err(format!(
                "node {}: {} triples for {} ANDs",
                t.node, t.triples_consumed, counts.and_count
            ));
        }
        let expect = counts.depth_and + opens + 1;
        if t.rounds != expect {
            return Err(format!("node {}: {} rounds, expected {expect}", t.node, t.rounds));
        }
        let per = outcome.compute_nodes as u32 - 1;
        if t.and_layer_messages.len() != counts.depth_and as usize
            || t.and_layer_messages.iter().any(|&m| m != per)
        {
            return Err(format!("node {}: AND layer messages differ from {per}", t.node));
        }
    }
    Ok(())
}
