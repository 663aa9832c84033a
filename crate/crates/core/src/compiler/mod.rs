//! Assembly of the full matching circuit and its cost model.
//!
//! Each party contributes `u` records laid out as
//! `v (σ) | real (1) | tag (ω) | k0 (κ) | k1 (κ)`. The first `σ + 1 + ω` bits are
//! the sort key. Stages run in order: per-party sortedness check (its flags are
//! opened reactively), merge tree, duplicate-key selection, then one Waksman
//! shuffle layer per computing party. The circuit outputs `2·N·u` keys.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::Word;
use crate::circuit::{
    waksman_route, waksman_switch_count, BooleanCircuit, CircuitBuilder, GateCounts, OwnerId,
    WireId,
};

mod stages;

pub use stages::{build_dupselect, build_max_circuit, build_merge_tree, build_shuffle, build_sortcheck};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("invalid circuit configuration: {0}")]
    ConfigInvalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Variant {
    AtLeastTwo,
    AtLeastM { m: u32 },
    /// Every fixed tag must be present, plus at least `m` records with other tags.
    FixedPlusM { fixed_tags: Vec<u64>, m: u32 },
}

impl Variant {
    pub fn label(&self) -> String {
        match self {
            Variant::AtLeastTwo => "at-least-two".into(),
            Variant::AtLeastM { m } => format!("at-least-{m}"),
            Variant::FixedPlusM { fixed_tags, m } => {
                format!("fixed-{}-plus-{m}", fixed_tags.len())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CircuitConfig {
    pub n_parties: usize,
    pub inputs_per_party: usize,
    pub sigma: usize,
    /// Width κ of the identifier keys k0, k1.
    pub key_bits: usize,
    pub variant: Variant,
    pub shuffle_layers: usize,
}

/// Default key width: wide enough that independently drawn keys do not
/// collide even when σ is small.
pub fn default_key_bits(sigma: usize) -> usize {
    sigma.max(64)
}

impl CircuitConfig {
    /// Config with κ = [`default_key_bits`] and one shuffle layer per party.
    pub fn new(n_parties: usize, inputs_per_party: usize, sigma: usize, variant: Variant) -> Self {
        CircuitConfig {
            n_parties,
            inputs_per_party,
            sigma,
            key_bits: default_key_bits(sigma),
            variant,
            shuffle_layers: n_parties,
        }
    }

    pub fn records(&self) -> usize {
        self.n_parties * self.inputs_per_party
    }

    pub fn output_keys(&self) -> usize {
        2 * self.records()
    }

    /// ω: `ceil(log2(z + 1))` in the fixed-tag variant, else 0.
    pub fn tag_bits(&self) -> usize {
        match &self.variant {
            Variant::FixedPlusM { fixed_tags, .. } => {
                crate::bits::ceil_log2(fixed_tags.len() as u64 + 1) as usize
            }
            _ => 0,
        }
    }

    /// Tag carried by records of parties that are not fixed: one above the
    /// largest fixed tag, so such records sort after the fixed ones.
    pub fn other_tag(&self) -> Option<u64> {
        match &self.variant {
            Variant::FixedPlusM { fixed_tags, .. } => fixed_tags.iter().max().map(|t| t + 1),
            _ => None,
        }
    }

    pub fn layout(&self) -> RecordLayout {
        RecordLayout {
            sigma: self.sigma,
            tag_bits: self.tag_bits(),
            key_bits: self.key_bits,
        }
    }

    pub fn validate(&self) -> Result<(), CompileError> {
        let bad = |m: String| Err(CompileError::ConfigInvalid(m));
        if self.n_parties < 2 {
            return bad(format!("need at least 2 parties, got {}", self.n_parties));
        }
        if self.inputs_per_party == 0 {
            return bad("inputs per party must be at least 1".into());
        }
        if self.sigma == 0 || self.sigma > 512 {
            return bad(format!("sigma {} outside 1..=512", self.sigma));
        }
        if self.key_bits == 0 || self.key_bits > 512 {
            return bad(format!("key width {} outside 1..=512", self.key_bits));
        }
        if self.shuffle_layers == 0 {
            return bad("at least one shuffle layer is required".into());
        }
        let total = self.records();
        match &self.variant {
            Variant::AtLeastTwo => {}
            Variant::AtLeastM { m } => {
                if *m == 0 || *m as usize > total {
                    return bad(format!("m = {m} outside 1..={total}"));
                }
            }
            Variant::FixedPlusM { fixed_tags, m } => {
                let z = fixed_tags.len();
                if z == 0 {
                    return bad("fixed-plus-m needs at least one fixed tag".into());
                }
                if *m == 0 || *m as usize + z > total {
                    return bad(format!("m + z = {} exceeds N·u = {total}", *m as usize + z));
                }
                let mut sorted = fixed_tags.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != z {
                    return bad("fixed tags must be distinct".into());
                }
                let limit = 1u64 << self.tag_bits();
                if self.other_tag().unwrap() >= limit {
                    return bad(format!(
                        "fixed tags and the non-fixed tag must fit in {} bits",
                        self.tag_bits()
                    ));
                }
            }
        }
        Ok(())
    }
}

/// One circuit input row: `(v, k0, k1)` plus the real flag and party tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputRecord {
    pub v: Word,
    pub real: bool,
    pub tag: u64,
    pub k0: Word,
    pub k1: Word,
}

/// Bit layout of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordLayout {
    pub sigma: usize,
    pub tag_bits: usize,
    pub key_bits: usize,
}

impl RecordLayout {
    pub fn sort_key_bits(&self) -> usize {
        self.sigma + 1 + self.tag_bits
    }

    pub fn width(&self) -> usize {
        self.sort_key_bits() + 2 * self.key_bits
    }

    pub fn real_bit(&self) -> usize {
        self.sigma
    }

    pub fn tag_range(&self) -> Range<usize> {
        self.sigma + 1..self.sort_key_bits()
    }

    pub fn k0_range(&self) -> Range<usize> {
        self.sort_key_bits()..self.sort_key_bits() + self.key_bits
    }

    pub fn k1_range(&self) -> Range<usize> {
        self.sort_key_bits() + self.key_bits..self.width()
    }

    pub fn encode(&self, r: &InputRecord) -> Vec<bool> {
        assert_eq!(r.v.bits() as usize, self.sigma);
        assert_eq!(r.k0.bits() as usize, self.key_bits);
        assert_eq!(r.k1.bits() as usize, self.key_bits);
        let mut out = Vec::with_capacity(self.width());
        out.extend(r.v.to_bits());
        out.push(r.real);
        out.extend((0..self.tag_bits).rev().map(|i| r.tag >> i & 1 == 1));
        out.extend(r.k0.to_bits());
        out.extend(r.k1.to_bits());
        out
    }

    pub fn encode_all(&self, records: &[InputRecord]) -> Vec<bool> {
        records.iter().flat_map(|r| self.encode(r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StageName {
    SortCheck,
    MergeTree,
    DupSelect,
    Shuffle,
}

impl StageName {
    pub const ALL: [StageName; 4] = [
        StageName::SortCheck,
        StageName::MergeTree,
        StageName::DupSelect,
        StageName::Shuffle,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledStage {
    pub name: StageName,
    pub gates: Range<u64>,
    pub wires: Range<u64>,
    /// `depth_and` is 0 when the stage was only counted.
    pub counts: GateCounts,
}

/// The assembled circuit with its stage boundaries.
#[derive(Debug, Clone)]
pub struct CompiledCircuit {
    pub config: CircuitConfig,
    pub circuit: BooleanCircuit,
    pub stages: Vec<CompiledStage>,
}

impl CompiledCircuit {
    pub fn layout(&self) -> RecordLayout {
        self.config.layout()
    }
}

/// Circuit owner id of party `i`'s records.
pub fn record_owner(i: usize) -> OwnerId {
    i as OwnerId
}

/// Circuit owner id of shuffle layer `j`'s control bits.
pub fn shuffle_owner(cfg: &CircuitConfig, j: usize) -> OwnerId {
    (cfg.n_parties + j) as OwnerId
}

/// Control bits for one shuffle layer realizing a uniformly random permutation.
pub fn random_shuffle_controls<R: Rng + ?Sized>(n_items: usize, rng: &mut R) -> Vec<bool> {
    let mut dest: Vec<usize> = (0..n_items).collect();
    dest.shuffle(rng);
    waksman_route(&dest)
}

pub fn shuffle_control_bits(cfg: &CircuitConfig) -> usize {
    waksman_switch_count(cfg.output_keys())
}

struct StageTimer {
    gate: u64,
    wire: u64,
}

impl StageTimer {
    fn start(b: &CircuitBuilder) -> Self {
        StageTimer {
            gate: b.gate_count() as u64,
            wire: b.next_wire(),
        }
    }

    fn finish(self, b: &CircuitBuilder, name: StageName, before: (u64, u64)) -> CompiledStage {
        let (and, xor) = b.tally();
        CompiledStage {
            name,
            gates: self.gate..b.gate_count() as u64,
            wires: self.wire..b.next_wire(),
            counts: GateCounts {
                and_count: and - before.0,
                xor_count: xor - before.1,
                depth_and: 0,
            },
        }
    }
}

/// Emits every stage into `b`; returns the stage list.
fn assemble(b: &mut CircuitBuilder, cfg: &CircuitConfig) -> Vec<CompiledStage> {
    let layout = cfg.layout();
    let u = cfg.inputs_per_party;
    let lists: Vec<Vec<Vec<WireId>>> = (0..cfg.n_parties)
        .map(|i| {
            let flat = b.input(record_owner(i), u * layout.width());
            flat.chunks(layout.width()).map(<[WireId]>::to_vec).collect()
        })
        .collect();
    let controls: Vec<Vec<WireId>> = (0..cfg.shuffle_layers)
        .map(|j| b.input(shuffle_owner(cfg, j), shuffle_control_bits(cfg)))
        .collect();

    let mut stages = Vec::with_capacity(4);

    let t = StageTimer::start(b);
    let before = b.tally();
    let flags: Vec<WireId> = lists.iter().map(|l| stages::sortcheck(b, &layout, l)).collect();
    b.reactive_open(flags);
    stages.push(t.finish(b, StageName::SortCheck, before));

    let t = StageTimer::start(b);
    let before = b.tally();
    let merged = stages::merge_tree(b, lists, layout.sort_key_bits());
    stages.push(t.finish(b, StageName::MergeTree, before));

    let t = StageTimer::start(b);
    let before = b.tally();
    let keys = stages::dupselect(b, cfg, &merged);
    stages.push(t.finish(b, StageName::DupSelect, before));

    let t = StageTimer::start(b);
    let before = b.tally();
    let shuffled = stages::shuffle(b, keys, &controls);
    stages.push(t.finish(b, StageName::Shuffle, before));

    for k in &shuffled {
        b.output(k);
    }
    stages
}

/// Builds the full matching circuit.
pub fn build_matching_circuit(cfg: &CircuitConfig) -> Result<CompiledCircuit, CompileError> {
    cfg.validate()?;
    let mut b = CircuitBuilder::new();
    let mut stages = assemble(&mut b, cfg);
    let circuit = b.finish();
    let levels = circuit.and_levels();
    for s in &mut stages {
        let gates = &circuit.gates()[s.gates.start as usize..s.gates.end as usize];
        s.counts.depth_and = gates.iter().map(|g| levels[g.out as usize]).max().unwrap_or(0);
    }
    Ok(CompiledCircuit {
        config: cfg.clone(),
        circuit,
        stages,
    })
}

/// Stage gate counts without materializing the circuit; depths are reported as 0.
pub fn count_matching_circuit(cfg: &CircuitConfig) -> Result<Vec<CompiledStage>, CompileError> {
    cfg.validate()?;
    let mut b = CircuitBuilder::counting();
    Ok(assemble(&mut b, cfg))
}

/// Analytic AND-count upper bound for a stage.
///
/// Key-moving stages use `max(σ, κ)` as the per-record width unit.
pub fn stage_bound(cfg: &CircuitConfig, stage: StageName) -> f64 {
    let n = cfg.n_parties as f64;
    let u = cfg.inputs_per_party as f64;
    let sigma = cfg.sigma as f64;
    let s = cfg.sigma.max(cfg.key_bits) as f64;
    let nu = n * u;
    match stage {
        StageName::SortCheck => n * (u - 1.0) * (sigma + 1.0),
        StageName::MergeTree => 2.0 * n * n * u * s * nu.log2(),
        StageName::DupSelect => {
            let extra = match &cfg.variant {
                Variant::AtLeastTwo => 0.0,
                Variant::AtLeastM { m } => 2.0 * *m as f64,
                Variant::FixedPlusM { fixed_tags, m } => {
                    let z = fixed_tags.len() as f64;
                    let w = z + *m as f64;
                    let omega = cfg.tag_bits() as f64;
                    2.0 * w + z * (w * omega + 1.0) + 4.0
                }
            };
            4.0 * nu * s + nu * extra
        }
        StageName::Shuffle => cfg.shuffle_layers as f64 * s * 2.0 * nu * (2.0 * nu).log2(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestStage {
    pub name: StageName,
    pub gate_start: u64,
    pub gate_end: u64,
    pub wire_start: u64,
    pub wire_end: u64,
    pub and_count: u64,
    pub xor_count: u64,
    pub depth_and: u32,
    pub and_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageManifest {
    pub config: CircuitConfig,
    pub stages: Vec<ManifestStage>,
    pub total: GateCounts,
}

pub fn manifest(cfg: &CircuitConfig, stages: &[CompiledStage], total: GateCounts) -> StageManifest {
    StageManifest {
        config: cfg.clone(),
        stages: stages
            .iter()
            .map(|s| ManifestStage {
                name: s.name,
                gate_start: s.gates.start,
                gate_end: s.gates.end,
                wire_start: s.wires.start,
                wire_end: s.wires.end,
                and_count: s.counts.and_count,
                xor_count: s.counts.xor_count,
                depth_and: s.counts.depth_and,
                and_bound: stage_bound(cfg, s.name),
            })
            .collect(),
        total,
    }
}
